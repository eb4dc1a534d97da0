#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>
#include <vector>

#include "unitychain/metrics.hpp"
#include "unitychain/scenario.hpp"
#include "unitychain/simnet.hpp"

using namespace unitychain;

namespace {

// Handcrafted two-cycle log: cycle 0 finalizes two blocks led by nodes 0
// and 1; cycle 1 finalizes nothing while a transaction is pending.
const char* kTinyLog = R"({"type":"header","schema":1,"seed":5,"scenario":"node_count = 4\n","nodes":[{"index":0,"id":"aa"},{"index":1,"id":"bb"},{"index":2,"id":"cc"},{"index":3,"id":"dd"}]}
{"type":"cycle_start","cycle":0,"tick":0}
{"type":"tx","cycle":0,"seq":0,"key":10}
{"type":"tx","cycle":0,"seq":1,"key":11}
{"type":"block","cycle":0,"strand":"positive","height":1,"hash":"000000000001","kind":"cycle","leader":0,"tx_count":1,"config":[0,1,2,3],"signers":[0,1,2]}
{"type":"block","cycle":0,"strand":"negative","height":1,"hash":"000000000002","kind":"cycle","leader":1,"tx_count":1,"config":[3,2,1,0],"signers":[1,2,3]}
{"type":"cycle_end","cycle":0,"blocks":2,"txs_finalized":2,"pending":0}
{"type":"cycle_start","cycle":1,"tick":50}
{"type":"tx","cycle":1,"seq":2,"key":12}
{"type":"cycle_end","cycle":1,"blocks":0,"txs_finalized":0,"pending":1}
)";

}  // namespace

TEST_CASE("kendall tau over index vectors") {
  std::vector<std::uint32_t> id{0, 1, 2, 3};
  std::vector<std::uint32_t> rev{3, 2, 1, 0};
  std::vector<std::uint32_t> swap{1, 0, 2, 3};
  CHECK(metrics::kendall_tau_indices(id, id) == doctest::Approx(0.0));
  CHECK(metrics::kendall_tau_indices(id, rev) == doctest::Approx(1.0));
  CHECK(metrics::kendall_tau_indices(id, swap) == doctest::Approx(1.0 / 6.0));
  std::vector<std::uint32_t> other{0, 1, 2, 9};
  CHECK(metrics::kendall_tau_indices(id, other) == doctest::Approx(-1.0));
}

TEST_CASE("handcrafted log: per-cycle stats and aggregates") {
  auto r = metrics::analyze_log(kTinyLog, {0});
  CHECK(r.total_cycles == 2);
  CHECK(r.cycle_blocks == 2);
  CHECK(r.txs_submitted == 3);
  CHECK(r.txs_finalized == 2);
  CHECK(r.pending_at_end == 1);
  CHECK(r.downtime_cycles == 1);  // cycle 1: nothing finalized, work waiting
  REQUIRE(r.cycles.size() == 2);
  CHECK(r.cycles[0].finalized_blocks == 2);
  CHECK_FALSE(r.cycles[0].downtime);
  CHECK(r.cycles[1].downtime);
  // Coalition {0} led one of the two observed slots.
  CHECK(r.coalition_size == 1);
  CHECK(r.leader_slots == 2);
  CHECK(r.coalition_leader_slots == 1);
  CHECK(r.coalition_leader_rate == doctest::Approx(0.5));
  CHECK(r.max_coalition_streak == 1);
  // Coalition {0} holds 1 of 4 seats in each logged configuration.
  CHECK(r.max_coalition_control == doctest::Approx(0.25));
  CHECK(r.mean_coalition_control == doctest::Approx(0.25));
}

TEST_CASE("streaks count consecutive coalition-led blocks") {
  auto r = metrics::analyze_log(kTinyLog, {0, 1});
  CHECK(r.coalition_leader_slots == 2);
  CHECK(r.max_coalition_streak == 2);
  auto none = metrics::analyze_log(kTinyLog, {3});
  CHECK(none.coalition_leader_slots == 0);
  CHECK(none.max_coalition_streak == 0);
}

TEST_CASE("csv layout is stable") {
  auto r = metrics::analyze_log(kTinyLog, {0});
  auto csv = metrics::report_csv(r);
  auto nl = csv.find('\n');
  CHECK(csv.substr(0, nl) ==
        "cycle,blocks,txs_finalized,pending,downtime,leader_slots,"
        "coalition_leader_slots,mean_shuffle_distance");
  // One row per cycle plus the header line.
  std::size_t lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 3);
}

TEST_CASE("summary mentions the headline aggregates") {
  auto r = metrics::analyze_log(kTinyLog, {0});
  auto s = metrics::report_summary(r);
  CHECK(s.find("cycles") != std::string::npos);
  CHECK(s.find("downtime") != std::string::npos);
  CHECK(s.find("coalition") != std::string::npos);
}

TEST_CASE("logs without a header are rejected") {
  CHECK_THROWS(metrics::analyze_log("{\"type\":\"tx\"}\n", {}));
  CHECK_THROWS(metrics::analyze_log("", {}));
}

TEST_CASE("analyze_log agrees with the report computed during the run") {
  sim::ScenarioConfig c;
  c.node_count = 8;
  c.params.cycles_per_epoch = 5;
  c.params.reshuffle_duration = 1;
  c.cycle_ticks = 80;
  c.latency_lo = c.latency_hi = 4;
  c.workload_fixed = 4;
  c.horizon = 15;
  c.seed = 3;
  auto run = sim::run_simulation(c);
  auto re = metrics::analyze_log(run.log, {});
  CHECK(metrics::report_csv(re) == metrics::report_csv(run.report));
  CHECK(metrics::report_summary(re) == metrics::report_summary(run.report));
}

TEST_CASE("coalition defaults come from the logged scenario") {
  sim::ScenarioConfig c;
  c.node_count = 8;
  c.params.cycles_per_epoch = 5;
  c.params.reshuffle_duration = 1;
  c.cycle_ticks = 80;
  c.latency_lo = c.latency_hi = 4;
  c.workload_fixed = 2;
  c.horizon = 10;
  c.seed = 4;
  c.coalition = {0, 1};
  auto run = sim::run_simulation(c);
  auto defaulted = metrics::analyze_log(run.log, {});
  auto explicit_set = metrics::analyze_log(run.log, {0, 1});
  CHECK(defaulted.coalition_size == 2);
  CHECK(defaulted.coalition_leader_slots == explicit_set.coalition_leader_slots);
  CHECK(defaulted.max_coalition_streak == explicit_set.max_coalition_streak);
}
