#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "unitychain/crypto.hpp"
#include "unitychain/topology.hpp"

namespace unitychain::chain {

using topo::KeyRangePartition;
using topo::NetworkConfiguration;
using topo::StrandId;

struct BlockHash {
  Digest32 bytes{};
  friend bool operator==(const BlockHash&, const BlockHash&) = default;
  friend auto operator<=>(const BlockHash&, const BlockHash&) = default;
  std::string short_hex() const { return hex(bytes).substr(0, 12); }
};

struct GenesisParams {
  std::uint32_t cycles_per_epoch = 10;
  std::uint32_t reshuffle_duration = 3;
  std::uint32_t join_threshold = 4;
  std::uint32_t strand_count = 2;
  std::uint32_t shuffle_every_epochs = 1;  // 0 = never reshuffle
};

struct OriginBlock {
  std::vector<NodeId> members;
  GenesisParams genesis_params;
  crypto::AggregateSignature bootstrap_signature;
};

/// One heartbeat block of a strand. `configuration` is the topology active
/// for the NEXT cycle, obtained by VRF-permuting the signing configuration
/// with the seed derived from `signature` (and `genesis_cosignature` for the
/// first block after an Epoch Genesis).
struct CycleBlock {
  StrandId strand;
  std::uint64_t height = 0;
  BlockHash parent_hash;
  std::vector<Digest32> tx_summary;
  NetworkConfiguration configuration;
  crypto::AggregateSignature signature;
  std::optional<crypto::AggregateSignature> genesis_cosignature;
};

/// Convergence block: the ascending strand takes the full keyspace, the
/// descending strand goes off to reshuffle. Dual-majority signed.
struct EpochBlock {
  std::uint64_t height = 0;  // epoch index
  StrandId ascending;
  StrandId descending;
  KeyRangePartition responsibilities;  // FullKeyspace(ascending)
  std::map<StrandId, BlockHash> parent_hashes;
  crypto::AggregateSignature ascending_signature;
  crypto::AggregateSignature descending_signature;
};

/// Divergence block: carries the post-reshuffle configurations for every
/// strand and the restored key-range partition. Dual-majority signed
/// (submissive first, then dominant).
struct EpochGenesisBlock {
  BlockHash parent;
  std::vector<NetworkConfiguration> new_configurations;
  KeyRangePartition partition;
  crypto::AggregateSignature submissive_signature;
  crypto::AggregateSignature dominant_signature;
};

/// Canonical block hashes. Signature fields are excluded (signatures sign the
/// hash); for CycleBlocks the next-cycle configuration is also excluded since
/// it is derived from the signature after signing.
BlockHash hash_block(const OriginBlock& b);
BlockHash hash_block(const CycleBlock& b);
BlockHash hash_block(const EpochBlock& b);
BlockHash hash_block(const EpochGenesisBlock& b);

enum class Verdict : std::uint8_t {
  Ok,
  BadParent,
  BadHeight,
  BadSignature,
  SubMajority,
  TopologyMismatch,
  WrongAlternation,
  BadAscendingSignature,
  BadDescendingSignature,
  IncompleteResponsibility,
  BadSubmissiveSignature,
  BadDominantSignature,
  CarryoverViolation,
  PartitionGap,
  PartitionOverlap,
};

std::string verdict_name(Verdict v);

/// True iff `sig` verifies for `message` under the configuration's group key
/// and its signer set contains at least a 51% majority of the configuration.
bool majority_signed(const crypto::AggregateSignature& sig,
                     const NetworkConfiguration& config,
                     std::span<const std::uint8_t> message,
                     const crypto::KeyRegistry& registry);

/// Core cycle-block check against an explicit signing configuration (the
/// configuration recorded by the predecessor, or by the Epoch Genesis for the
/// first block of an epoch). When `shuffle` is false the carried
/// configuration must equal the signing configuration unchanged.
Verdict validate_cycle_block_against(const CycleBlock& block,
                                     const BlockHash& parent_hash,
                                     std::uint64_t expected_height,
                                     const NetworkConfiguration& signing_config,
                                     const crypto::KeyRegistry& registry,
                                     bool shuffle = true);

Verdict validate_cycle_block(const CycleBlock& block, const CycleBlock& parent,
                             const crypto::KeyRegistry& registry,
                             bool shuffle = true);

Verdict validate_epoch_block(const EpochBlock& block,
                             const std::map<StrandId, CycleBlock>& tips,
                             std::optional<StrandId> prior_ascending,
                             const crypto::KeyRegistry& registry);

Verdict validate_epoch_genesis(const EpochGenesisBlock& block,
                               const EpochBlock& parent,
                               const NetworkConfiguration& submissive_config,
                               const NetworkConfiguration& dominant_config,
                               const std::set<NodeId>& prior_members,
                               const crypto::KeyRegistry& registry);

/// Height-0 block carrying the full founding membership. Throws on fewer
/// than 4 members.
OriginBlock build_origin_block(std::vector<NodeId> members,
                               const GenesisParams& params);

std::span<const std::uint8_t> hash_span(const BlockHash& h);

}  // namespace unitychain::chain
