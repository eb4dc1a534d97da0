#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "unitychain/crypto.hpp"
#include "unitychain/ids.hpp"

namespace unitychain::topo {

enum class Valence : std::uint8_t { Positive = 0, Negative = 1 };

struct StrandId {
  Valence valence = Valence::Positive;

  friend bool operator==(StrandId, StrandId) = default;
  friend auto operator<=>(StrandId, StrandId) = default;
};

inline constexpr StrandId kPositive{Valence::Positive};
inline constexpr StrandId kNegative{Valence::Negative};

inline StrandId counterpart(StrandId s) {
  return s == kPositive ? kNegative : kPositive;
}

inline std::string strand_name(StrandId s) {
  return s == kPositive ? "positive" : "negative";
}

struct LogicalPosition {
  StrandId strand;
  std::uint32_t slot = 0;
};

/// Ordered assignment of nodes to slots within one strand. Slot 0 leads the
/// next cycle. group_key / ritual_id reference the threshold key material the
/// configuration signs with.
struct NetworkConfiguration {
  StrandId strand;
  std::vector<NodeId> ordered_members;
  GroupElement group_key;
  Digest32 ritual_id{};

  std::set<NodeId> member_set() const {
    return {ordered_members.begin(), ordered_members.end()};
  }
  bool contains(const NodeId& n) const {
    for (const auto& m : ordered_members)
      if (m == n) return true;
    return false;
  }
};

enum class PartitionMode : std::uint8_t { Parity = 0, Ranges = 1, FullKeyspace = 2 };

struct KeyRange {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;  // inclusive
  StrandId owner;
};

/// Assignment of the 64-bit key space to strands. Total and disjoint by
/// construction in Parity / FullKeyspace mode; Ranges mode is validated.
struct KeyRangePartition {
  PartitionMode mode = PartitionMode::Parity;
  StrandId full_owner;           // FullKeyspace mode
  std::vector<KeyRange> ranges;  // Ranges mode, sorted by lo

  static KeyRangePartition parity() { return {}; }
  static KeyRangePartition full_keyspace(StrandId owner) {
    KeyRangePartition p;
    p.mode = PartitionMode::FullKeyspace;
    p.full_owner = owner;
    return p;
  }
  static KeyRangePartition from_ranges(std::vector<KeyRange> ranges);

  /// Empty list means total and disjoint; otherwise human-readable problems.
  std::vector<std::string> validate() const;

  friend bool operator==(const KeyRangePartition&, const KeyRangePartition&);
};

/// ceil(51 * n / 100), the paper's "at least 51%" rule.
std::uint32_t majority_threshold(std::uint32_t n);

crypto::VrfSeed vrf_seed_from_digest(const Digest32& d);

/// Fisher-Yates reordering of the configuration's members driven by the seed.
/// Membership, group key and strand are unchanged.
NetworkConfiguration permute_configuration(const NetworkConfiguration& config,
                                           const crypto::VrfSeed& seed);

StrandId route_key(std::uint64_t key, const KeyRangePartition& partition);

bool carryover_check(const std::set<NodeId>& prior_members,
                     const std::set<NodeId>& next_members);

NodeId select_leader(const NetworkConfiguration& config, std::uint64_t cycle);

/// True iff slot-0 leaders of all configurations are pairwise distinct.
bool leadership_conflict_check(
    std::span<const NetworkConfiguration> configs);

/// Deterministic fix-up: rotate the Negative strand's order by one position.
/// Post: leadership_conflict_check holds for two-strand inputs with n >= 2.
void resolve_leadership_conflict(std::vector<NetworkConfiguration>& configs);

/// Normalized Kendall-tau distance between two orderings of the same member
/// set, in [0, 1]. Returns -1 if the member sets differ.
double kendall_tau_distance(const std::vector<NodeId>& a,
                            const std::vector<NodeId>& b);

}  // namespace unitychain::topo
