#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unitychain/group.hpp"

namespace unitychain {

using Digest32 = std::array<std::uint8_t, 32>;

Digest32 sha256(std::span<const std::uint8_t> data);
Digest32 sha256(std::string_view data);

std::string hex(std::span<const std::uint8_t> bytes);
std::string hex(const Digest32& d);

/// Incremental SHA-256 over a canonical, field-ordered encoding.
/// Integers are written big-endian; every top-level object starts with a
/// domain tag so distinct block kinds can never collide.
class HashWriter {
 public:
  HashWriter();
  ~HashWriter();
  HashWriter(const HashWriter&) = delete;
  HashWriter& operator=(const HashWriter&) = delete;

  HashWriter& tag(std::string_view domain);
  HashWriter& u8(std::uint8_t v);
  HashWriter& u64(std::uint64_t v);
  HashWriter& bytes(std::span<const std::uint8_t> data);
  HashWriter& digest(const Digest32& d);
  HashWriter& group(const GroupElement& g);

  Digest32 finalize();

 private:
  void* ctx_;
};

}  // namespace unitychain
