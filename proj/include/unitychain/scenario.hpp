#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unitychain/chain.hpp"
#include "unitychain/topology.hpp"

namespace unitychain::sim {

enum class LatencyModel : std::uint8_t { Constant, Uniform };
enum class WorkloadModel : std::uint8_t { FixedPerCycle, SeededPoisson };
enum class FaultKind : std::uint8_t { Silent, Crash, Equivocate, Colluder };

struct FaultSpec {
  std::uint32_t node = 0;
  FaultKind kind = FaultKind::Silent;
  std::uint64_t silent_from = 0;  // Silent only, first muted tick
  std::uint64_t crash_tick = 0;   // Crash only
  std::uint32_t colluder_group = 0;  // Colluder only
};

struct ScenarioConfig {
  std::uint32_t node_count = 8;
  chain::GenesisParams params;
  std::uint32_t cycle_ticks = 100;

  LatencyModel latency = LatencyModel::Constant;
  std::uint64_t latency_lo = 5;
  std::uint64_t latency_hi = 5;

  WorkloadModel workload = WorkloadModel::FixedPerCycle;
  std::uint64_t workload_fixed = 10;
  double workload_rate = 10.0;

  std::uint64_t horizon = 100;  // cycles
  std::uint64_t seed = 1;

  topo::PartitionMode partition_mode = topo::PartitionMode::Parity;
  std::uint32_t churn_joins_per_epoch = 0;
  std::uint32_t churn_leaves_per_epoch = 0;

  std::vector<FaultSpec> faults;
  std::vector<std::uint32_t> coalition;  // founder indices
};

struct ScenarioParseResult {
  ScenarioConfig config;
  std::vector<std::string> errors;  // empty means config is usable
};

/// Parse the flat `key = value` scenario format. Collects every problem it
/// can find rather than stopping at the first.
ScenarioParseResult parse_scenario(const std::string& text);

ScenarioParseResult parse_scenario_file(const std::string& path);

/// Stable textual form embedded in event logs so a run can be replayed from
/// the log alone. parse_scenario(canonical_scenario(c)) reproduces c.
std::string canonical_scenario(const ScenarioConfig& config);

}  // namespace unitychain::sim
