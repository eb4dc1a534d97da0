#include "unitychain/metrics.hpp"

#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "unitychain/scenario.hpp"

namespace unitychain::metrics {

using nlohmann::json;

double kendall_tau_indices(const std::vector<std::uint32_t>& a,
                           const std::vector<std::uint32_t>& b) {
  if (a.size() != b.size()) return -1.0;
  std::size_t n = a.size();
  if (n < 2) return 0.0;
  std::map<std::uint32_t, std::size_t> pos;
  for (std::size_t i = 0; i < n; ++i) pos[b[i]] = i;
  if (pos.size() != n) return -1.0;
  std::vector<std::size_t> mapped;
  mapped.reserve(n);
  for (auto v : a) {
    auto it = pos.find(v);
    if (it == pos.end()) return -1.0;
    mapped.push_back(it->second);
  }
  std::size_t inversions = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (mapped[i] > mapped[j]) ++inversions;
  return static_cast<double>(inversions) /
         (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

MetricsReport analyze_log(const std::string& log_text,
                          const std::vector<std::uint32_t>& coalition) {
  MetricsReport r;
  std::set<std::uint32_t> members(coalition.begin(), coalition.end());

  std::map<std::string, std::vector<std::uint32_t>> prev_order;
  CycleStats cur;
  bool in_cycle = false;
  double cycle_dist_sum = 0.0;
  std::uint64_t cycle_dist_n = 0;
  double control_sum = 0.0;
  std::uint64_t control_n = 0;
  std::uint64_t streak = 0;
  double dist_sum = 0.0;

  std::istringstream is(log_text);
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    std::string type = j.at("type").get<std::string>();

    if (type == "header") {
      header_seen = true;
      if (members.empty()) {
        auto parsed = sim::parse_scenario(j.at("scenario").get<std::string>());
        for (auto idx : parsed.config.coalition) members.insert(idx);
        for (const auto& f : parsed.config.faults)
          if (f.kind == sim::FaultKind::Colluder) members.insert(f.node);
      }
      r.coalition_size = members.size();
    } else if (type == "cycle_start") {
      cur = CycleStats{};
      cur.cycle = j.at("cycle").get<std::uint64_t>();
      in_cycle = true;
      cycle_dist_sum = 0.0;
      cycle_dist_n = 0;
    } else if (type == "tx") {
      ++r.txs_submitted;
    } else if (type == "block") {
      ++r.cycle_blocks;
      auto leader = j.at("leader").get<std::uint32_t>();
      auto config = j.at("config").get<std::vector<std::uint32_t>>();
      std::string strand = j.at("strand").get<std::string>();
      ++r.leader_slots;
      ++cur.leader_slots;
      if (members.count(leader)) {
        ++r.coalition_leader_slots;
        ++cur.coalition_leader_slots;
        ++streak;
        if (streak > r.max_coalition_streak) r.max_coalition_streak = streak;
      } else {
        streak = 0;
      }
      if (!config.empty()) {
        std::size_t overlap = 0;
        for (auto idx : config)
          if (members.count(idx)) ++overlap;
        double control =
            static_cast<double>(overlap) / static_cast<double>(config.size());
        control_sum += control;
        ++control_n;
        if (control > r.max_coalition_control)
          r.max_coalition_control = control;
      }
      auto it = prev_order.find(strand);
      if (it != prev_order.end()) {
        double d = kendall_tau_indices(it->second, config);
        if (d >= 0.0) {
          dist_sum += d;
          ++r.shuffle_samples;
          cycle_dist_sum += d;
          ++cycle_dist_n;
        }
      }
      prev_order[strand] = config;
    } else if (type == "epoch") {
      ++r.epoch_blocks;
    } else if (type == "genesis") {
      ++r.genesis_blocks;
      auto configs = j.at("configs");
      for (auto it = configs.begin(); it != configs.end(); ++it)
        prev_order[it.key()] = it.value().get<std::vector<std::uint32_t>>();
    } else if (type == "ritual") {
      if (j.at("ok").get<bool>()) ++r.rituals_ok;
      else ++r.rituals_failed;
    } else if (type == "cycle_end") {
      if (!in_cycle) continue;
      cur.finalized_blocks = j.at("blocks").get<std::uint32_t>();
      cur.txs_finalized = j.at("txs_finalized").get<std::uint64_t>();
      cur.pending = j.at("pending").get<std::uint64_t>();
      cur.downtime = cur.finalized_blocks == 0 && cur.pending > 0;
      cur.mean_shuffle_distance =
          cycle_dist_n == 0 ? -1.0
                            : cycle_dist_sum / static_cast<double>(cycle_dist_n);
      r.txs_finalized += cur.txs_finalized;
      r.pending_at_end = cur.pending;
      if (cur.downtime) ++r.downtime_cycles;
      r.cycles.push_back(cur);
      in_cycle = false;
    }
  }
  if (!header_seen) throw std::runtime_error("event log has no header line");

  r.total_cycles = r.cycles.size();
  r.mean_shuffle_distance =
      r.shuffle_samples == 0
          ? 0.0
          : dist_sum / static_cast<double>(r.shuffle_samples);
  r.coalition_leader_rate =
      r.leader_slots == 0
          ? 0.0
          : static_cast<double>(r.coalition_leader_slots) /
                static_cast<double>(r.leader_slots);
  r.mean_coalition_control =
      control_n == 0 ? 0.0 : control_sum / static_cast<double>(control_n);
  return r;
}

std::string report_csv(const MetricsReport& report) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "cycle,blocks,txs_finalized,pending,downtime,leader_slots,"
        "coalition_leader_slots,mean_shuffle_distance\n";
  for (const auto& c : report.cycles) {
    os << c.cycle << "," << c.finalized_blocks << "," << c.txs_finalized << ","
       << c.pending << "," << (c.downtime ? 1 : 0) << "," << c.leader_slots
       << "," << c.coalition_leader_slots << "," << c.mean_shuffle_distance
       << "\n";
  }
  return os.str();
}

std::string report_summary(const MetricsReport& r) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "cycles:                  " << r.total_cycles << "\n";
  os << "downtime cycles:         " << r.downtime_cycles << "\n";
  os << "cycle blocks:            " << r.cycle_blocks << "\n";
  os << "epoch blocks:            " << r.epoch_blocks << "\n";
  os << "epoch genesis blocks:    " << r.genesis_blocks << "\n";
  os << "rituals ok/failed:       " << r.rituals_ok << "/" << r.rituals_failed
     << "\n";
  os << "txs submitted:           " << r.txs_submitted << "\n";
  os << "txs finalized:           " << r.txs_finalized << "\n";
  os << "txs pending at end:      " << r.pending_at_end << "\n";
  os << "mean shuffle distance:   " << r.mean_shuffle_distance << " over "
     << r.shuffle_samples << " samples\n";
  os << "coalition size:          " << r.coalition_size << "\n";
  os << "coalition leader slots:  " << r.coalition_leader_slots << "/"
     << r.leader_slots << " (rate " << r.coalition_leader_rate << ")\n";
  os << "max coalition streak:    " << r.max_coalition_streak << "\n";
  os << "coalition control:       mean " << r.mean_coalition_control
     << ", max " << r.max_coalition_control << "\n";
  return os.str();
}

}  // namespace unitychain::metrics
