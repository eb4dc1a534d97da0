#include "unitychain/scenario.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace unitychain::sim {

namespace {

std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

bool parse_u32(const std::string& s, std::uint32_t& out) {
  std::uint64_t v = 0;
  if (!parse_u64(s, v) || v > 0xffffffffULL) return false;
  out = static_cast<std::uint32_t>(v);
  return true;
}

bool parse_f64(const std::string& s, double& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

ScenarioParseResult parse_scenario(const std::string& text) {
  ScenarioParseResult result;
  ScenarioConfig& c = result.config;
  auto& errors = result.errors;
  std::set<std::string> seen;

  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    auto eq = line.find('=');
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    auto err = [&](const std::string& msg) {
      errors.push_back("line " + std::to_string(lineno) + ": " + msg);
    };
    if (eq == std::string::npos) {
      err("expected 'key = value'");
      continue;
    }
    std::string key = toks[0];
    if (toks.size() < 2 || toks[1] != "=") {
      err("expected 'key = value'");
      continue;
    }
    std::vector<std::string> vals(toks.begin() + 2, toks.end());
    if (key != "fault" && !seen.insert(key).second) {
      err("duplicate key '" + key + "'");
      continue;
    }
    if (vals.empty()) {
      err("missing value for '" + key + "'");
      continue;
    }
    const std::string& v0 = vals[0];
    auto want1 = [&]() {
      if (vals.size() == 1) return true;
      err("'" + key + "' takes one value");
      return false;
    };

    if (key == "node_count") {
      if (want1() && !parse_u32(v0, c.node_count)) err("bad node_count");
    } else if (key == "strand_count") {
      if (want1() && !parse_u32(v0, c.params.strand_count))
        err("bad strand_count");
    } else if (key == "cycles_per_epoch") {
      if (want1() && !parse_u32(v0, c.params.cycles_per_epoch))
        err("bad cycles_per_epoch");
    } else if (key == "reshuffle_duration") {
      if (want1() && !parse_u32(v0, c.params.reshuffle_duration))
        err("bad reshuffle_duration");
    } else if (key == "join_threshold") {
      if (want1() && !parse_u32(v0, c.params.join_threshold))
        err("bad join_threshold");
    } else if (key == "shuffle_every_epochs") {
      if (want1() && !parse_u32(v0, c.params.shuffle_every_epochs))
        err("bad shuffle_every_epochs");
    } else if (key == "cycle_ticks") {
      if (want1() && !parse_u32(v0, c.cycle_ticks)) err("bad cycle_ticks");
    } else if (key == "horizon") {
      if (want1() && !parse_u64(v0, c.horizon)) err("bad horizon");
    } else if (key == "seed") {
      if (want1() && !parse_u64(v0, c.seed)) err("bad seed");
    } else if (key == "latency") {
      if (v0 == "constant" && vals.size() == 2) {
        c.latency = LatencyModel::Constant;
        if (!parse_u64(vals[1], c.latency_lo)) err("bad latency value");
        c.latency_hi = c.latency_lo;
      } else if (v0 == "uniform" && vals.size() == 3) {
        c.latency = LatencyModel::Uniform;
        if (!parse_u64(vals[1], c.latency_lo) ||
            !parse_u64(vals[2], c.latency_hi))
          err("bad latency bounds");
      } else {
        err("latency must be 'constant N' or 'uniform LO HI'");
      }
    } else if (key == "workload") {
      if (v0 == "fixed" && vals.size() == 2) {
        c.workload = WorkloadModel::FixedPerCycle;
        if (!parse_u64(vals[1], c.workload_fixed)) err("bad workload count");
      } else if (v0 == "poisson" && vals.size() == 2) {
        c.workload = WorkloadModel::SeededPoisson;
        if (!parse_f64(vals[1], c.workload_rate) || c.workload_rate < 0.0)
          err("bad workload rate");
      } else {
        err("workload must be 'fixed K' or 'poisson RATE'");
      }
    } else if (key == "partition_mode") {
      if (!want1()) continue;
      if (v0 == "parity") c.partition_mode = topo::PartitionMode::Parity;
      else err("unknown partition_mode '" + v0 + "'");
    } else if (key == "churn_joins_per_epoch") {
      if (want1() && !parse_u32(v0, c.churn_joins_per_epoch))
        err("bad churn_joins_per_epoch");
    } else if (key == "churn_leaves_per_epoch") {
      if (want1() && !parse_u32(v0, c.churn_leaves_per_epoch))
        err("bad churn_leaves_per_epoch");
    } else if (key == "fault") {
      FaultSpec f;
      if (!parse_u32(v0, f.node)) {
        err("bad fault node index");
        continue;
      }
      if (vals.size() >= 2 && vals[1] == "silent" && vals.size() <= 3) {
        f.kind = FaultKind::Silent;
        if (vals.size() == 3 && !parse_u64(vals[2], f.silent_from)) {
          err("bad silent start tick");
          continue;
        }
      } else if (vals.size() == 3 && vals[1] == "crash") {
        f.kind = FaultKind::Crash;
        if (!parse_u64(vals[2], f.crash_tick)) {
          err("bad crash tick");
          continue;
        }
      } else if (vals.size() == 2 && vals[1] == "equivocate") {
        f.kind = FaultKind::Equivocate;
      } else if (vals.size() == 3 && vals[1] == "colluder") {
        f.kind = FaultKind::Colluder;
        if (!parse_u32(vals[2], f.colluder_group)) {
          err("bad colluder group");
          continue;
        }
      } else {
        err("fault must be 'IDX silent [TICK]', 'IDX crash TICK', "
            "'IDX equivocate' or 'IDX colluder GROUP'");
        continue;
      }
      c.faults.push_back(f);
    } else if (key == "coalition") {
      std::set<std::uint32_t> uniq;
      bool ok = true;
      for (const auto& v : vals) {
        std::uint32_t idx = 0;
        if (!parse_u32(v, idx)) {
          err("bad coalition index '" + v + "'");
          ok = false;
          break;
        }
        uniq.insert(idx);
      }
      if (ok) c.coalition.assign(uniq.begin(), uniq.end());
    } else {
      err("unknown key '" + key + "'");
    }
  }

  // Cross-field validation.
  if (c.node_count < 4) errors.push_back("node_count must be at least 4");
  if (c.params.strand_count != 2)
    errors.push_back("strand_count must be 2");
  if (c.params.cycles_per_epoch == 0)
    errors.push_back("cycles_per_epoch must be positive");
  if (c.params.reshuffle_duration == 0)
    errors.push_back("reshuffle_duration must be positive");
  if (c.cycle_ticks < 2) errors.push_back("cycle_ticks must be at least 2");
  if (c.horizon == 0) errors.push_back("horizon must be positive");
  if (c.latency_lo < 1) errors.push_back("latency must be at least 1 tick");
  if (c.latency_hi < c.latency_lo)
    errors.push_back("latency upper bound below lower bound");
  if (16 * c.latency_hi > c.cycle_ticks)
    errors.push_back(
        "cycle_ticks too small: need 16 * max latency <= cycle_ticks");
  for (const auto& f : c.faults) {
    if (f.node >= c.node_count)
      errors.push_back("fault node index " + std::to_string(f.node) +
                       " out of range");
  }
  for (auto idx : c.coalition) {
    if (idx >= c.node_count)
      errors.push_back("coalition index " + std::to_string(idx) +
                       " out of range");
  }
  return result;
}

ScenarioParseResult parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ScenarioParseResult r;
    r.errors.push_back("cannot open scenario file '" + path + "'");
    return r;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string canonical_scenario(const ScenarioConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "node_count = " << c.node_count << "\n";
  os << "strand_count = " << c.params.strand_count << "\n";
  os << "cycles_per_epoch = " << c.params.cycles_per_epoch << "\n";
  os << "reshuffle_duration = " << c.params.reshuffle_duration << "\n";
  os << "join_threshold = " << c.params.join_threshold << "\n";
  os << "shuffle_every_epochs = " << c.params.shuffle_every_epochs << "\n";
  os << "cycle_ticks = " << c.cycle_ticks << "\n";
  os << "horizon = " << c.horizon << "\n";
  os << "seed = " << c.seed << "\n";
  if (c.latency == LatencyModel::Constant)
    os << "latency = constant " << c.latency_lo << "\n";
  else
    os << "latency = uniform " << c.latency_lo << " " << c.latency_hi << "\n";
  if (c.workload == WorkloadModel::FixedPerCycle)
    os << "workload = fixed " << c.workload_fixed << "\n";
  else
    os << "workload = poisson " << c.workload_rate << "\n";
  os << "partition_mode = parity\n";
  os << "churn_joins_per_epoch = " << c.churn_joins_per_epoch << "\n";
  os << "churn_leaves_per_epoch = " << c.churn_leaves_per_epoch << "\n";
  for (const auto& f : c.faults) {
    os << "fault = " << f.node << " ";
    switch (f.kind) {
      case FaultKind::Silent:
        os << "silent";
        if (f.silent_from != 0) os << " " << f.silent_from;
        break;
      case FaultKind::Crash: os << "crash " << f.crash_tick; break;
      case FaultKind::Equivocate: os << "equivocate"; break;
      case FaultKind::Colluder: os << "colluder " << f.colluder_group; break;
    }
    os << "\n";
  }
  if (!c.coalition.empty()) {
    os << "coalition =";
    for (auto idx : c.coalition) os << " " << idx;
    os << "\n";
  }
  return os.str();
}

}  // namespace unitychain::sim
