#pragma once

#include <string>
#include <vector>

#include "unitychain/metrics.hpp"
#include "unitychain/scenario.hpp"

namespace unitychain::sim {

struct SimResult {
  std::string log;  // JSON lines, one event per line
  metrics::MetricsReport report;
  std::vector<std::string> violations;  // empty means all invariants held
};

/// Deterministic discrete-event run: same scenario and seed always produce a
/// byte-identical log. Throws std::invalid_argument on unusable scenarios.
SimResult run_simulation(const ScenarioConfig& scenario);

}  // namespace unitychain::sim
