#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "unitychain/field.hpp"
#include "unitychain/group.hpp"
#include "unitychain/hash.hpp"
#include "unitychain/ids.hpp"
#include "unitychain/rng.hpp"

namespace unitychain::crypto {

struct SecretShare {
  NodeId holder;
  std::uint32_t index = 0;  // evaluation point, >= 1
  FieldElement value;
};

/// Feldman-style commitment to the dealing polynomial, one group element per
/// coefficient (length = threshold).
struct DealingCommitment {
  NodeId dealer;
  std::vector<GroupElement> coefficient_commitments;
};

struct Dealing {
  DealingCommitment commitment;
  std::vector<SecretShare> shares;  // indices 1..n
};

struct GroupKeyMaterial {
  GroupElement group_public_key;
  std::uint32_t threshold = 0;
  std::map<NodeId, SecretShare> member_shares;
  Digest32 ritual_id{};
};

struct SignatureShare {
  NodeId signer;
  std::uint32_t index = 0;
  GroupElement value;
  Digest32 message_digest{};
};

struct AggregateSignature {
  GroupElement value;
  Digest32 message_digest{};
  std::set<NodeId> signer_set;
};

struct VrfSeed {
  Digest32 bytes{};
  friend bool operator==(const VrfSeed&, const VrfSeed&) = default;
};

/// Simulation oracle: maps group public keys to the group secrets behind
/// them. Verification goes through this registry; the scheme is transparent
/// and not cryptographically secure.
class KeyRegistry {
 public:
  void register_key(GroupElement group_public_key, FieldElement secret);
  std::optional<FieldElement> lookup(GroupElement group_public_key) const;

 private:
  std::map<std::uint64_t, FieldElement> secrets_;
};

/// Hash a message into the group: g^(sha256(m) mod p).
GroupElement hash_to_group(std::span<const std::uint8_t> message);
Digest32 message_digest(std::span<const std::uint8_t> message);

/// Lagrange coefficient at x = 0 for evaluation point `index` over the given
/// distinct participating indices.
FieldElement lagrange_coeff_at_zero(std::span<const std::uint32_t> indices,
                                    std::uint32_t index);

/// Split `secret` into n shares with reconstruction threshold t
/// (degree t-1 polynomial). Holders are taken from `holders` when provided
/// (must then have size n); otherwise left default.
Dealing shamir_split(FieldElement secret, std::uint32_t n, std::uint32_t t,
                     SplitMix64& rng,
                     std::span<const NodeId> holders = {});

FieldElement shamir_reconstruct(std::span<const SecretShare> shares,
                                std::uint32_t t);

/// Check one received share against a dealing commitment:
/// g^value == prod_k commitment_k^(index^k).
bool verify_share(const DealingCommitment& commitment, std::uint32_t index,
                  FieldElement value);

/// Joint-Feldman DKG over pre-built dealings (one per dealer, in dealer
/// order). Dealings with any share failing its commitment check are excluded;
/// fewer than t surviving dealings is a ritual failure (nullopt). On success
/// the group secret is registered with the oracle registry.
std::optional<GroupKeyMaterial> run_dkg_with_dealings(
    std::span<const NodeId> participants, std::uint32_t t,
    std::span<const Dealing> dealings, const Digest32& ritual_id,
    KeyRegistry& registry);

/// Honest-dealer DKG: every participant deals one sharing drawn from `rng`.
GroupKeyMaterial run_dkg(std::span<const NodeId> participants, std::uint32_t t,
                         SplitMix64& rng, const Digest32& ritual_id,
                         KeyRegistry& registry);

SignatureShare sign_share(const GroupKeyMaterial& material,
                          const NodeId& signer,
                          std::span<const std::uint8_t> message);

AggregateSignature aggregate(std::span<const SignatureShare> shares,
                             std::uint32_t t);

bool verify_aggregate(const AggregateSignature& sig,
                      GroupElement group_public_key,
                      std::span<const std::uint8_t> message,
                      const KeyRegistry& registry);

VrfSeed derive_vrf_seed(const AggregateSignature& sig);

}  // namespace unitychain::crypto
