#include "unitychain/hash.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <stdexcept>

namespace unitychain {

namespace {

Digest32 sha256_raw(const std::uint8_t* data, std::size_t len) {
  Digest32 out{};
  unsigned int out_len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data, len) != 1 ||
      EVP_DigestFinal_ex(ctx, out.data(), &out_len) != 1 || out_len != 32) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  return out;
}

}  // namespace

Digest32 sha256(std::span<const std::uint8_t> data) {
  return sha256_raw(data.data(), data.size());
}

Digest32 sha256(std::string_view data) {
  return sha256_raw(reinterpret_cast<const std::uint8_t*>(data.data()),
                    data.size());
}

std::string hex(std::span<const std::uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

std::string hex(const Digest32& d) {
  return hex(std::span<const std::uint8_t>(d.data(), d.size()));
}

HashWriter::HashWriter() {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 init failed");
  }
  ctx_ = ctx;
}

HashWriter::~HashWriter() {
  if (ctx_ != nullptr) EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
}

HashWriter& HashWriter::tag(std::string_view domain) {
  u8(static_cast<std::uint8_t>(domain.size()));
  return bytes({reinterpret_cast<const std::uint8_t*>(domain.data()),
                domain.size()});
}

HashWriter& HashWriter::u8(std::uint8_t v) {
  return bytes({&v, 1});
}

HashWriter& HashWriter::u64(std::uint64_t v) {
  std::uint8_t buf[8];
  for (int i = 7; i >= 0; --i) {
    buf[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
  return bytes({buf, 8});
}

HashWriter& HashWriter::bytes(std::span<const std::uint8_t> data) {
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data.data(),
                       data.size()) != 1) {
    throw std::runtime_error("sha256 update failed");
  }
  return *this;
}

HashWriter& HashWriter::digest(const Digest32& d) {
  return bytes({d.data(), d.size()});
}

HashWriter& HashWriter::group(const GroupElement& g) {
  auto enc = g.encode();
  return bytes({enc.data(), enc.size()});
}

Digest32 HashWriter::finalize() {
  Digest32 out{};
  unsigned int out_len = 0;
  if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(),
                         &out_len) != 1 ||
      out_len != 32) {
    throw std::runtime_error("sha256 final failed");
  }
  return out;
}

}  // namespace unitychain
