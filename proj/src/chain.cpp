#include "unitychain/chain.hpp"

#include <stdexcept>

namespace unitychain::chain {

namespace {

void write_config(HashWriter& w, const NetworkConfiguration& c) {
  w.u8(static_cast<std::uint8_t>(c.strand.valence));
  w.u64(c.ordered_members.size());
  for (const auto& m : c.ordered_members) w.digest(m.id);
  w.group(c.group_key);
  w.digest(c.ritual_id);
}

void write_partition(HashWriter& w, const KeyRangePartition& p) {
  w.u8(static_cast<std::uint8_t>(p.mode));
  switch (p.mode) {
    case topo::PartitionMode::Parity:
      break;
    case topo::PartitionMode::FullKeyspace:
      w.u8(static_cast<std::uint8_t>(p.full_owner.valence));
      break;
    case topo::PartitionMode::Ranges:
      w.u64(p.ranges.size());
      for (const auto& r : p.ranges) {
        w.u64(r.lo);
        w.u64(r.hi);
        w.u8(static_cast<std::uint8_t>(r.owner.valence));
      }
      break;
  }
}

}  // namespace

BlockHash hash_block(const OriginBlock& b) {
  HashWriter w;
  w.tag("unitychain.block.origin");
  w.u64(b.members.size());
  for (const auto& m : b.members) w.digest(m.id);
  w.u64(b.genesis_params.cycles_per_epoch);
  w.u64(b.genesis_params.reshuffle_duration);
  w.u64(b.genesis_params.join_threshold);
  w.u64(b.genesis_params.strand_count);
  w.u64(b.genesis_params.shuffle_every_epochs);
  return {w.finalize()};
}

BlockHash hash_block(const CycleBlock& b) {
  HashWriter w;
  w.tag("unitychain.block.cycle");
  w.u8(static_cast<std::uint8_t>(b.strand.valence));
  w.u64(b.height);
  w.digest(b.parent_hash.bytes);
  w.u64(b.tx_summary.size());
  for (const auto& t : b.tx_summary) w.digest(t);
  return {w.finalize()};
}

BlockHash hash_block(const EpochBlock& b) {
  HashWriter w;
  w.tag("unitychain.block.epoch");
  w.u64(b.height);
  w.u8(static_cast<std::uint8_t>(b.ascending.valence));
  w.u8(static_cast<std::uint8_t>(b.descending.valence));
  write_partition(w, b.responsibilities);
  w.u64(b.parent_hashes.size());
  for (const auto& [strand, h] : b.parent_hashes) {
    w.u8(static_cast<std::uint8_t>(strand.valence));
    w.digest(h.bytes);
  }
  return {w.finalize()};
}

BlockHash hash_block(const EpochGenesisBlock& b) {
  HashWriter w;
  w.tag("unitychain.block.epoch_genesis");
  w.digest(b.parent.bytes);
  w.u64(b.new_configurations.size());
  for (const auto& c : b.new_configurations) write_config(w, c);
  write_partition(w, b.partition);
  return {w.finalize()};
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Ok: return "ok";
    case Verdict::BadParent: return "bad-parent";
    case Verdict::BadHeight: return "bad-height";
    case Verdict::BadSignature: return "bad-signature";
    case Verdict::SubMajority: return "sub-majority";
    case Verdict::TopologyMismatch: return "topology-mismatch";
    case Verdict::WrongAlternation: return "wrong-alternation";
    case Verdict::BadAscendingSignature: return "bad-ascending-signature";
    case Verdict::BadDescendingSignature: return "bad-descending-signature";
    case Verdict::IncompleteResponsibility: return "incomplete-responsibility";
    case Verdict::BadSubmissiveSignature: return "bad-submissive-signature";
    case Verdict::BadDominantSignature: return "bad-dominant-signature";
    case Verdict::CarryoverViolation: return "carryover-violation";
    case Verdict::PartitionGap: return "partition-gap";
    case Verdict::PartitionOverlap: return "partition-overlap";
  }
  return "unknown";
}

std::span<const std::uint8_t> hash_span(const BlockHash& h) {
  return {h.bytes.data(), h.bytes.size()};
}

bool majority_signed(const crypto::AggregateSignature& sig,
                     const NetworkConfiguration& config,
                     std::span<const std::uint8_t> message,
                     const crypto::KeyRegistry& registry) {
  std::uint32_t members_signing = 0;
  for (const auto& s : sig.signer_set)
    if (config.contains(s)) ++members_signing;
  if (members_signing < topo::majority_threshold(static_cast<std::uint32_t>(
                            config.ordered_members.size())))
    return false;
  return crypto::verify_aggregate(sig, config.group_key, message, registry);
}

Verdict validate_cycle_block_against(const CycleBlock& block,
                                     const BlockHash& parent_hash,
                                     std::uint64_t expected_height,
                                     const NetworkConfiguration& signing_config,
                                     const crypto::KeyRegistry& registry,
                                     bool shuffle) {
  if (block.parent_hash != parent_hash) return Verdict::BadParent;
  if (block.height != expected_height) return Verdict::BadHeight;

  BlockHash h = hash_block(block);
  std::uint32_t members_signing = 0;
  for (const auto& s : block.signature.signer_set)
    if (signing_config.contains(s)) ++members_signing;
  if (members_signing <
      topo::majority_threshold(
          static_cast<std::uint32_t>(signing_config.ordered_members.size())))
    return Verdict::SubMajority;
  if (!crypto::verify_aggregate(block.signature, signing_config.group_key,
                                hash_span(h), registry))
    return Verdict::BadSignature;

  // The carried topology must be the VRF permutation of the signing
  // configuration (or that configuration unchanged when shuffling is off).
  crypto::VrfSeed seed;
  if (block.genesis_cosignature) {
    HashWriter w;
    w.tag("unitychain.vrf.combined");
    w.group(block.signature.value);
    w.group(block.genesis_cosignature->value);
    seed.bytes = w.finalize();
  } else {
    seed = crypto::derive_vrf_seed(block.signature);
  }
  NetworkConfiguration expected =
      shuffle ? topo::permute_configuration(signing_config, seed)
              : signing_config;
  if (block.configuration.ordered_members != expected.ordered_members ||
      block.configuration.group_key != expected.group_key ||
      block.configuration.strand != block.strand)
    return Verdict::TopologyMismatch;
  return Verdict::Ok;
}

Verdict validate_cycle_block(const CycleBlock& block, const CycleBlock& parent,
                             const crypto::KeyRegistry& registry,
                             bool shuffle) {
  return validate_cycle_block_against(block, hash_block(parent),
                                      parent.height + 1, parent.configuration,
                                      registry, shuffle);
}

Verdict validate_epoch_block(const EpochBlock& block,
                             const std::map<StrandId, CycleBlock>& tips,
                             std::optional<StrandId> prior_ascending,
                             const crypto::KeyRegistry& registry) {
  if (prior_ascending && block.ascending == *prior_ascending)
    return Verdict::WrongAlternation;
  if (block.ascending == block.descending) return Verdict::WrongAlternation;

  if (block.responsibilities.mode != topo::PartitionMode::FullKeyspace ||
      !(block.responsibilities.full_owner == block.ascending))
    return Verdict::IncompleteResponsibility;

  auto asc_tip = tips.find(block.ascending);
  auto desc_tip = tips.find(block.descending);
  if (asc_tip == tips.end() || desc_tip == tips.end())
    return Verdict::BadParent;
  auto asc_ref = block.parent_hashes.find(block.ascending);
  auto desc_ref = block.parent_hashes.find(block.descending);
  if (asc_ref == block.parent_hashes.end() ||
      desc_ref == block.parent_hashes.end() ||
      asc_ref->second != hash_block(asc_tip->second) ||
      desc_ref->second != hash_block(desc_tip->second))
    return Verdict::BadParent;

  BlockHash h = hash_block(block);
  if (!majority_signed(block.ascending_signature,
                       asc_tip->second.configuration, hash_span(h), registry))
    return Verdict::BadAscendingSignature;
  if (!majority_signed(block.descending_signature,
                       desc_tip->second.configuration, hash_span(h), registry))
    return Verdict::BadDescendingSignature;
  return Verdict::Ok;
}

Verdict validate_epoch_genesis(const EpochGenesisBlock& block,
                               const EpochBlock& parent,
                               const NetworkConfiguration& submissive_config,
                               const NetworkConfiguration& dominant_config,
                               const std::set<NodeId>& prior_members,
                               const crypto::KeyRegistry& registry) {
  if (block.parent != hash_block(parent)) return Verdict::BadParent;

  auto problems = block.partition.validate();
  for (const auto& p : problems) {
    if (p.find("overlap") != std::string::npos)
      return Verdict::PartitionOverlap;
  }
  if (!problems.empty()) return Verdict::PartitionGap;

  std::set<NodeId> next_members;
  for (const auto& c : block.new_configurations)
    for (const auto& m : c.ordered_members) next_members.insert(m);
  if (!topo::carryover_check(prior_members, next_members))
    return Verdict::CarryoverViolation;

  BlockHash h = hash_block(block);
  if (!majority_signed(block.submissive_signature, submissive_config,
                       hash_span(h), registry))
    return Verdict::BadSubmissiveSignature;
  if (!majority_signed(block.dominant_signature, dominant_config,
                       hash_span(h), registry))
    return Verdict::BadDominantSignature;
  return Verdict::Ok;
}

OriginBlock build_origin_block(std::vector<NodeId> members,
                               const GenesisParams& params) {
  if (members.size() < 4)
    throw std::invalid_argument(
        "build_origin_block: at least 4 members required");
  OriginBlock b;
  b.members = std::move(members);
  b.genesis_params = params;
  return b;
}

}  // namespace unitychain::chain
