#include "unitychain/topology.hpp"

#include <algorithm>
#include <stdexcept>

namespace unitychain::topo {

KeyRangePartition KeyRangePartition::from_ranges(std::vector<KeyRange> ranges) {
  KeyRangePartition p;
  p.mode = PartitionMode::Ranges;
  std::sort(ranges.begin(), ranges.end(),
            [](const KeyRange& a, const KeyRange& b) { return a.lo < b.lo; });
  p.ranges = std::move(ranges);
  return p;
}

std::vector<std::string> KeyRangePartition::validate() const {
  std::vector<std::string> problems;
  if (mode != PartitionMode::Ranges) return problems;
  if (ranges.empty()) {
    problems.push_back("ranges mode with no ranges");
    return problems;
  }
  if (ranges.front().lo != 0)
    problems.push_back("partition gap: keys below " +
                       std::to_string(ranges.front().lo));
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (ranges[i].hi < ranges[i].lo)
      problems.push_back("empty range at position " + std::to_string(i));
    if (i + 1 < ranges.size()) {
      if (ranges[i].hi >= ranges[i + 1].lo)
        problems.push_back("partition overlap at key " +
                           std::to_string(ranges[i + 1].lo));
      else if (ranges[i].hi + 1 != ranges[i + 1].lo)
        problems.push_back("partition gap after key " +
                           std::to_string(ranges[i].hi));
    }
  }
  if (ranges.back().hi != ~0ULL)
    problems.push_back("partition gap: keys above " +
                       std::to_string(ranges.back().hi));
  return problems;
}

bool operator==(const KeyRangePartition& a, const KeyRangePartition& b) {
  if (a.mode != b.mode) return false;
  switch (a.mode) {
    case PartitionMode::Parity:
      return true;
    case PartitionMode::FullKeyspace:
      return a.full_owner == b.full_owner;
    case PartitionMode::Ranges:
      if (a.ranges.size() != b.ranges.size()) return false;
      for (std::size_t i = 0; i < a.ranges.size(); ++i) {
        if (a.ranges[i].lo != b.ranges[i].lo ||
            a.ranges[i].hi != b.ranges[i].hi ||
            a.ranges[i].owner != b.ranges[i].owner)
          return false;
      }
      return true;
  }
  return false;
}

std::uint32_t majority_threshold(std::uint32_t n) {
  if (n == 0) throw std::invalid_argument("majority_threshold: n = 0");
  return static_cast<std::uint32_t>((51ULL * n + 99) / 100);
}

crypto::VrfSeed vrf_seed_from_digest(const Digest32& d) {
  crypto::VrfSeed s;
  s.bytes = d;
  return s;
}

NetworkConfiguration permute_configuration(const NetworkConfiguration& config,
                                           const crypto::VrfSeed& seed) {
  NetworkConfiguration out = config;
  SplitMix64 rng(seed_from_digest(seed.bytes));
  fisher_yates(out.ordered_members, rng);
  return out;
}

StrandId route_key(std::uint64_t key, const KeyRangePartition& partition) {
  switch (partition.mode) {
    case PartitionMode::Parity:
      return (key % 2 == 0) ? kPositive : kNegative;
    case PartitionMode::FullKeyspace:
      return partition.full_owner;
    case PartitionMode::Ranges: {
      // Ranges are sorted by lo; find the last range starting at or below key.
      auto it = std::upper_bound(
          partition.ranges.begin(), partition.ranges.end(), key,
          [](std::uint64_t k, const KeyRange& r) { return k < r.lo; });
      if (it == partition.ranges.begin())
        throw std::logic_error("route_key: partition not total");
      --it;
      if (key > it->hi) throw std::logic_error("route_key: partition not total");
      return it->owner;
    }
  }
  throw std::logic_error("route_key: bad partition mode");
}

bool carryover_check(const std::set<NodeId>& prior_members,
                     const std::set<NodeId>& next_members) {
  if (prior_members.empty())
    throw std::invalid_argument("carryover_check: empty prior set");
  std::size_t retained = 0;
  for (const auto& n : prior_members)
    if (next_members.count(n)) ++retained;
  return retained >=
         majority_threshold(static_cast<std::uint32_t>(prior_members.size()));
}

NodeId select_leader(const NetworkConfiguration& config,
                     std::uint64_t cycle) {
  if (config.ordered_members.empty())
    throw std::invalid_argument("select_leader: empty configuration");
  // Rotating over the VRF-permuted order keeps the leader unpredictable
  // while letting a strand recover when the current leader goes quiet (a
  // stalled strand keeps its configuration, so slot 0 alone would pin the
  // same leader forever).
  return config.ordered_members[cycle % config.ordered_members.size()];
}

bool leadership_conflict_check(
    std::span<const NetworkConfiguration> configs) {
  for (std::size_t i = 0; i < configs.size(); ++i) {
    for (std::size_t j = i + 1; j < configs.size(); ++j) {
      if (configs[i].ordered_members.empty() ||
          configs[j].ordered_members.empty())
        continue;
      if (configs[i].ordered_members[0] == configs[j].ordered_members[0])
        return false;
    }
  }
  return true;
}

void resolve_leadership_conflict(std::vector<NetworkConfiguration>& configs) {
  if (leadership_conflict_check(configs)) return;
  for (auto& c : configs) {
    if (c.strand == kNegative && c.ordered_members.size() > 1) {
      std::rotate(c.ordered_members.begin(), c.ordered_members.begin() + 1,
                  c.ordered_members.end());
    }
  }
}

double kendall_tau_distance(const std::vector<NodeId>& a,
                            const std::vector<NodeId>& b) {
  if (a.size() != b.size()) return -1.0;
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  std::map<NodeId, std::size_t> pos_b;
  for (std::size_t i = 0; i < n; ++i) pos_b[b[i]] = i;
  if (pos_b.size() != n) return -1.0;
  std::vector<std::size_t> perm;
  perm.reserve(n);
  for (const auto& x : a) {
    auto it = pos_b.find(x);
    if (it == pos_b.end()) return -1.0;
    perm.push_back(it->second);
  }
  std::size_t inversions = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (perm[i] > perm[j]) ++inversions;
  return static_cast<double>(inversions) /
         (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

}  // namespace unitychain::topo
