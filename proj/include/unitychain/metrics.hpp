#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace unitychain::metrics {

struct CycleStats {
  std::uint64_t cycle = 0;
  std::uint32_t finalized_blocks = 0;
  std::uint64_t txs_finalized = 0;
  std::uint64_t pending = 0;
  bool downtime = false;  // nothing finalized while work was pending
  std::uint32_t leader_slots = 0;
  std::uint32_t coalition_leader_slots = 0;
  double mean_shuffle_distance = -1.0;  // -1 when no permutation this cycle
};

struct MetricsReport {
  std::vector<CycleStats> cycles;

  std::uint64_t total_cycles = 0;
  std::uint64_t downtime_cycles = 0;
  std::uint64_t cycle_blocks = 0;
  std::uint64_t epoch_blocks = 0;
  std::uint64_t genesis_blocks = 0;
  std::uint64_t rituals_ok = 0;
  std::uint64_t rituals_failed = 0;
  std::uint64_t txs_submitted = 0;
  std::uint64_t txs_finalized = 0;
  std::uint64_t pending_at_end = 0;

  // Shuffle entropy: normalized Kendall-tau distance between the member
  // orders of consecutive blocks of the same strand.
  double mean_shuffle_distance = 0.0;
  std::uint64_t shuffle_samples = 0;

  // Coalition exposure.
  std::uint64_t coalition_size = 0;
  std::uint64_t leader_slots = 0;
  std::uint64_t coalition_leader_slots = 0;
  double coalition_leader_rate = 0.0;
  std::uint64_t max_coalition_streak = 0;  // consecutive coalition-led blocks
  double max_coalition_control = 0.0;  // peak coalition share of any config
  double mean_coalition_control = 0.0;
};

/// Rebuild the per-cycle and aggregate statistics from a JSON-lines event
/// log. `coalition` holds node indices as recorded in the log header; when
/// empty, the coalition recorded in the logged scenario (plus colluder
/// faults) is used.
MetricsReport analyze_log(const std::string& log_text,
                          const std::vector<std::uint32_t>& coalition);

/// Normalized Kendall-tau distance between two orderings of the same index
/// set; -1 when the sets differ.
double kendall_tau_indices(const std::vector<std::uint32_t>& a,
                           const std::vector<std::uint32_t>& b);

std::string report_csv(const MetricsReport& report);
std::string report_summary(const MetricsReport& report);

}  // namespace unitychain::metrics
