#include "unitychain/crypto.hpp"

#include <algorithm>
#include <stdexcept>

namespace unitychain::crypto {

void KeyRegistry::register_key(GroupElement group_public_key,
                               FieldElement secret) {
  secrets_[group_public_key.raw()] = secret;
}

std::optional<FieldElement> KeyRegistry::lookup(
    GroupElement group_public_key) const {
  auto it = secrets_.find(group_public_key.raw());
  if (it == secrets_.end()) return std::nullopt;
  return it->second;
}

Digest32 message_digest(std::span<const std::uint8_t> message) {
  return sha256(message);
}

GroupElement hash_to_group(std::span<const std::uint8_t> message) {
  Digest32 d = sha256(message);
  // Reduce the full 256-bit digest (big-endian) modulo p, folding one
  // 64-bit limb at a time: v <- v * 2^64 + limb (mod p).
  unsigned __int128 v = 0;
  for (int limb = 0; limb < 4; ++limb) {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i)
      x = (x << 8) | d[static_cast<std::size_t>(limb * 8 + i)];
    v = ((v << 64) % FieldElement::kModulus + x) % FieldElement::kModulus;
  }
  return GroupElement::from_exponent(
      FieldElement(static_cast<std::uint64_t>(v)));
}

FieldElement lagrange_coeff_at_zero(std::span<const std::uint32_t> indices,
                                    std::uint32_t index) {
  FieldElement num(1);
  FieldElement den(1);
  FieldElement xi(index);
  for (std::uint32_t j : indices) {
    if (j == index) continue;
    FieldElement xj(j);
    num *= FieldElement(0) - xj;
    den *= xi - xj;
  }
  return num * den.inverse();
}

Dealing shamir_split(FieldElement secret, std::uint32_t n, std::uint32_t t,
                     SplitMix64& rng, std::span<const NodeId> holders) {
  if (t == 0 || t > n) throw std::invalid_argument("shamir_split: need 1 <= t <= n");
  if (!holders.empty() && holders.size() != n)
    throw std::invalid_argument("shamir_split: holders size mismatch");

  std::vector<FieldElement> coeffs;
  coeffs.reserve(t);
  coeffs.push_back(secret);
  for (std::uint32_t k = 1; k < t; ++k)
    coeffs.push_back(FieldElement(rng.next()));

  Dealing d;
  if (!holders.empty()) d.commitment.dealer = holders[0];
  d.commitment.coefficient_commitments.reserve(t);
  for (const auto& c : coeffs)
    d.commitment.coefficient_commitments.push_back(
        GroupElement::from_exponent(c));

  d.shares.reserve(n);
  for (std::uint32_t i = 1; i <= n; ++i) {
    // Horner evaluation of the dealing polynomial at x = i.
    FieldElement x(i);
    FieldElement v(0);
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * x + *it;
    SecretShare s;
    s.index = i;
    s.value = v;
    if (!holders.empty()) s.holder = holders[i - 1];
    d.shares.push_back(s);
  }
  return d;
}

FieldElement shamir_reconstruct(std::span<const SecretShare> shares,
                                std::uint32_t t) {
  if (shares.size() < t || t == 0)
    throw std::invalid_argument("shamir_reconstruct: fewer than t shares");
  std::vector<std::uint32_t> indices;
  indices.reserve(t);
  for (std::uint32_t k = 0; k < t; ++k) indices.push_back(shares[k].index);
  std::vector<std::uint32_t> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("shamir_reconstruct: duplicate indices");

  FieldElement acc(0);
  for (std::uint32_t k = 0; k < t; ++k) {
    acc += shares[k].value * lagrange_coeff_at_zero(indices, shares[k].index);
  }
  return acc;
}

bool verify_share(const DealingCommitment& commitment, std::uint32_t index,
                  FieldElement value) {
  GroupElement lhs = GroupElement::from_exponent(value);
  GroupElement rhs = GroupElement::identity();
  FieldElement x(index);
  FieldElement xk(1);
  for (const auto& c : commitment.coefficient_commitments) {
    rhs *= c.pow(xk);
    xk *= x;
  }
  return lhs == rhs;
}

std::optional<GroupKeyMaterial> run_dkg_with_dealings(
    std::span<const NodeId> participants, std::uint32_t t,
    std::span<const Dealing> dealings, const Digest32& ritual_id,
    KeyRegistry& registry) {
  if (participants.size() < t || t == 0) return std::nullopt;
  const std::uint32_t n = static_cast<std::uint32_t>(participants.size());

  std::vector<const Dealing*> surviving;
  for (const auto& d : dealings) {
    if (d.shares.size() != n ||
        d.commitment.coefficient_commitments.size() != t)
      continue;  // malformed dealing: excluded
    bool ok = true;
    for (const auto& s : d.shares) {
      if (!verify_share(d.commitment, s.index, s.value)) {
        ok = false;
        break;
      }
    }
    if (ok) surviving.push_back(&d);
  }
  if (surviving.size() < t) return std::nullopt;

  GroupKeyMaterial m;
  m.threshold = t;
  m.ritual_id = ritual_id;
  m.group_public_key = GroupElement::identity();
  FieldElement group_secret(0);  // oracle-side only
  for (const Dealing* d : surviving) {
    m.group_public_key *= d->commitment.coefficient_commitments[0];
    group_secret += shamir_reconstruct(
        std::span<const SecretShare>(d->shares.data(), t), t);
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    SecretShare s;
    s.holder = participants[i];
    s.index = i + 1;
    s.value = FieldElement(0);
    for (const Dealing* d : surviving) s.value += d->shares[i].value;
    m.member_shares[participants[i]] = s;
  }
  registry.register_key(m.group_public_key, group_secret);
  return m;
}

GroupKeyMaterial run_dkg(std::span<const NodeId> participants, std::uint32_t t,
                         SplitMix64& rng, const Digest32& ritual_id,
                         KeyRegistry& registry) {
  if (participants.size() < t || t == 0)
    throw std::invalid_argument("run_dkg: fewer participants than threshold");
  std::vector<Dealing> dealings;
  dealings.reserve(participants.size());
  for (std::size_t i = 0; i < participants.size(); ++i) {
    Dealing d =
        shamir_split(FieldElement(rng.next()),
                     static_cast<std::uint32_t>(participants.size()), t, rng);
    d.commitment.dealer = participants[i];
    dealings.push_back(std::move(d));
  }
  auto m = run_dkg_with_dealings(participants, t, dealings, ritual_id, registry);
  // All dealings are honest, so the ritual cannot fail here.
  return *m;
}

SignatureShare sign_share(const GroupKeyMaterial& material,
                          const NodeId& signer,
                          std::span<const std::uint8_t> message) {
  auto it = material.member_shares.find(signer);
  if (it == material.member_shares.end())
    throw std::invalid_argument("sign_share: signer not a ritual member");
  SignatureShare s;
  s.signer = signer;
  s.index = it->second.index;
  s.value = hash_to_group(message).pow(it->second.value);
  s.message_digest = message_digest(message);
  return s;
}

AggregateSignature aggregate(std::span<const SignatureShare> shares,
                             std::uint32_t t) {
  if (shares.size() < t || t == 0)
    throw std::invalid_argument("aggregate: insufficient shares");
  for (const auto& s : shares) {
    if (s.message_digest != shares[0].message_digest)
      throw std::invalid_argument("aggregate: mixed message digests");
  }
  std::vector<std::uint32_t> indices;
  indices.reserve(t);
  for (std::uint32_t k = 0; k < t; ++k) indices.push_back(shares[k].index);
  std::vector<std::uint32_t> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("aggregate: duplicate indices");

  AggregateSignature agg;
  agg.message_digest = shares[0].message_digest;
  agg.value = GroupElement::identity();
  for (std::uint32_t k = 0; k < t; ++k) {
    agg.value *=
        shares[k].value.pow(lagrange_coeff_at_zero(indices, shares[k].index));
    agg.signer_set.insert(shares[k].signer);
  }
  return agg;
}

bool verify_aggregate(const AggregateSignature& sig,
                      GroupElement group_public_key,
                      std::span<const std::uint8_t> message,
                      const KeyRegistry& registry) {
  auto secret = registry.lookup(group_public_key);
  if (!secret) return false;
  if (sig.message_digest != message_digest(message)) return false;
  return sig.value == hash_to_group(message).pow(*secret);
}

VrfSeed derive_vrf_seed(const AggregateSignature& sig) {
  VrfSeed seed;
  seed.bytes = HashWriter().tag("unitychain.vrf").group(sig.value).finalize();
  return seed;
}

}  // namespace unitychain::crypto
