#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "unitychain/metrics.hpp"
#include "unitychain/scenario.hpp"
#include "unitychain/simnet.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kInvariantViolation = 2;

int load_scenario(const std::string& path,
                  unitychain::sim::ScenarioConfig& out) {
  auto parsed = unitychain::sim::parse_scenario_file(path);
  if (!parsed.errors.empty()) {
    for (const auto& e : parsed.errors) std::cerr << "scenario: " << e << "\n";
    return kValidationError;
  }
  out = parsed.config;
  return kOk;
}

int write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    std::cerr << "cannot write " << path << "\n";
    return kValidationError;
  }
  f << data;
  return kOk;
}

int read_file(const std::string& path, std::string& out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    std::cerr << "cannot read " << path << "\n";
    return kValidationError;
  }
  std::ostringstream buf;
  buf << f.rdbuf();
  out = buf.str();
  return kOk;
}

int report_violations(const std::vector<std::string>& violations) {
  if (violations.empty()) return kOk;
  for (const auto& v : violations)
    std::cerr << "invariant violation: " << v << "\n";
  return kInvariantViolation;
}

int cmd_run(const std::string& scenario_path, std::uint64_t seed,
            bool seed_set, const std::string& out_dir) {
  unitychain::sim::ScenarioConfig sc;
  if (int rc = load_scenario(scenario_path, sc); rc != kOk) return rc;
  if (seed_set) sc.seed = seed;
  auto result = unitychain::sim::run_simulation(sc);

  std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << dir << "\n";
    return kValidationError;
  }
  if (int rc = write_file(dir / "events.jsonl", result.log); rc != kOk)
    return rc;
  if (int rc = write_file(dir / "report.csv",
                          unitychain::metrics::report_csv(result.report));
      rc != kOk)
    return rc;
  std::string summary = unitychain::metrics::report_summary(result.report);
  if (int rc = write_file(dir / "summary.txt", summary); rc != kOk) return rc;
  std::cout << summary;
  return report_violations(result.violations);
}

int extract_scenario_from_log(const std::string& log_text,
                              unitychain::sim::ScenarioConfig& out) {
  std::istringstream is(log_text);
  std::string first;
  if (!std::getline(is, first)) {
    std::cerr << "event log is empty\n";
    return kValidationError;
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(first);
  } catch (const std::exception& e) {
    std::cerr << "bad log header: " << e.what() << "\n";
    return kValidationError;
  }
  if (!header.contains("type") || header["type"] != "header") {
    std::cerr << "event log does not start with a header line\n";
    return kValidationError;
  }
  auto parsed = unitychain::sim::parse_scenario(
      header.at("scenario").get<std::string>());
  if (!parsed.errors.empty()) {
    for (const auto& e : parsed.errors)
      std::cerr << "scenario in log: " << e << "\n";
    return kValidationError;
  }
  out = parsed.config;
  out.seed = header.at("seed").get<std::uint64_t>();
  return kOk;
}

int cmd_replay(const std::string& log_path, bool verify) {
  std::string log_text;
  if (int rc = read_file(log_path, log_text); rc != kOk) return rc;
  unitychain::sim::ScenarioConfig sc;
  if (int rc = extract_scenario_from_log(log_text, sc); rc != kOk) return rc;

  auto result = unitychain::sim::run_simulation(sc);
  std::cout << unitychain::metrics::report_summary(result.report);
  int rc = report_violations(result.violations);
  if (rc != kOk) return rc;
  if (verify) {
    if (result.log != log_text) {
      std::cerr << "replay mismatch: regenerated log differs from "
                << log_path << "\n";
      return kInvariantViolation;
    }
    std::cout << "replay verified: log reproduced byte for byte\n";
  }
  return kOk;
}

int cmd_metrics(const std::string& log_path,
                const std::vector<std::uint32_t>& coalition,
                const std::string& csv_path) {
  std::string log_text;
  if (int rc = read_file(log_path, log_text); rc != kOk) return rc;
  unitychain::metrics::MetricsReport report;
  try {
    report = unitychain::metrics::analyze_log(log_text, coalition);
  } catch (const std::exception& e) {
    std::cerr << "cannot analyze log: " << e.what() << "\n";
    return kValidationError;
  }
  std::cout << unitychain::metrics::report_summary(report);
  if (!csv_path.empty())
    return write_file(csv_path, unitychain::metrics::report_csv(report));
  return kOk;
}

int cmd_sweep(const std::string& scenario_path, std::uint64_t seeds) {
  unitychain::sim::ScenarioConfig sc;
  if (int rc = load_scenario(scenario_path, sc); rc != kOk) return rc;
  if (seeds == 0) {
    std::cerr << "--seeds must be positive\n";
    return kValidationError;
  }
  std::cout << "seed,downtime_cycles,cycle_blocks,epoch_blocks,"
               "genesis_blocks,txs_finalized,coalition_leader_rate,"
               "max_coalition_streak,mean_shuffle_distance\n";
  int rc = kOk;
  std::uint64_t base = sc.seed;
  for (std::uint64_t i = 0; i < seeds; ++i) {
    auto run_sc = sc;
    run_sc.seed = base + i;
    auto result = unitychain::sim::run_simulation(run_sc);
    const auto& r = result.report;
    std::cout << run_sc.seed << "," << r.downtime_cycles << ","
              << r.cycle_blocks << "," << r.epoch_blocks << ","
              << r.genesis_blocks << "," << r.txs_finalized << ","
              << r.coalition_leader_rate << "," << r.max_coalition_streak
              << "," << r.mean_shuffle_distance << "\n";
    if (!result.violations.empty()) {
      for (const auto& v : result.violations)
        std::cerr << "seed " << run_sc.seed << ": invariant violation: " << v
                  << "\n";
      rc = kInvariantViolation;
    }
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-strand threshold-signed chain simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string log_path;
  std::string out_dir = "out";
  std::string csv_path;
  std::uint64_t seed = 0;
  std::uint64_t seeds = 10;
  bool verify = false;
  std::vector<std::uint32_t> coalition;

  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("--scenario", scenario_path, "Scenario file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override scenario seed");
  run->add_option("--out", out_dir, "Output directory");

  auto* replay = app.add_subcommand("replay", "Re-run a logged simulation");
  replay->add_option("--log", log_path, "Event log (JSON lines)")->required();
  replay->add_flag("--verify", verify,
                   "Require a byte-identical regenerated log");

  auto* metrics = app.add_subcommand("metrics", "Analyze an event log");
  metrics->add_option("--log", log_path, "Event log (JSON lines)")->required();
  metrics->add_option("--coalition", coalition,
                      "Node indices treated as one coalition")
      ->delimiter(',');
  metrics->add_option("--csv", csv_path, "Also write the per-cycle CSV here");

  auto* sweep = app.add_subcommand("sweep", "Run a scenario across seeds");
  sweep->add_option("--scenario", scenario_path, "Scenario file")->required();
  sweep->add_option("--seeds", seeds, "Number of consecutive seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kValidationError;
  }

  try {
    if (run->parsed())
      return cmd_run(scenario_path, seed, seed_opt->count() > 0, out_dir);
    if (replay->parsed()) return cmd_replay(log_path, verify);
    if (metrics->parsed()) return cmd_metrics(log_path, coalition, csv_path);
    if (sweep->parsed()) return cmd_sweep(scenario_path, seeds);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  }
  return kValidationError;
}
