#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "unitychain/chain.hpp"
#include "unitychain/crypto.hpp"
#include "unitychain/metrics.hpp"
#include "unitychain/scenario.hpp"
#include "unitychain/simnet.hpp"
#include "unitychain/topology.hpp"

namespace py = pybind11;
using namespace unitychain;

namespace {

std::vector<std::pair<std::uint32_t, std::uint64_t>> py_split_secret(
    std::uint64_t secret, std::uint32_t n, std::uint32_t t,
    std::uint64_t seed) {
  SplitMix64 rng(seed);
  auto dealing = crypto::shamir_split(FieldElement(secret), n, t, rng);
  std::vector<std::pair<std::uint32_t, std::uint64_t>> out;
  for (const auto& s : dealing.shares)
    out.emplace_back(s.index, s.value.value());
  return out;
}

std::uint64_t py_reconstruct(
    const std::vector<std::pair<std::uint32_t, std::uint64_t>>& shares,
    std::uint32_t t) {
  std::vector<crypto::SecretShare> ss;
  for (const auto& [idx, val] : shares) {
    crypto::SecretShare s;
    s.index = idx;
    s.value = FieldElement(val);
    ss.push_back(s);
  }
  return crypto::shamir_reconstruct(ss, t).value();
}

bool py_dkg_sign_verify(std::uint32_t n, std::uint32_t t,
                        const std::string& message, std::uint64_t seed) {
  std::vector<NodeId> members;
  for (std::uint32_t i = 0; i < n; ++i) members.push_back(make_node_id(i));
  std::sort(members.begin(), members.end());
  crypto::KeyRegistry registry;
  SplitMix64 rng(seed);
  Digest32 rid = HashWriter().tag("pybind.ritual").u64(seed).finalize();
  auto material = crypto::run_dkg(members, t, rng, rid, registry);
  std::span<const std::uint8_t> msg(
      reinterpret_cast<const std::uint8_t*>(message.data()), message.size());
  std::vector<crypto::SignatureShare> shares;
  for (const auto& m : members) {
    shares.push_back(crypto::sign_share(material, m, msg));
    if (shares.size() == t) break;
  }
  auto agg = crypto::aggregate(shares, t);
  return crypto::verify_aggregate(agg, material.group_public_key, msg,
                                  registry);
}

py::dict py_run_scenario(const std::string& text) {
  auto parsed = sim::parse_scenario(text);
  if (!parsed.errors.empty()) {
    std::string joined;
    for (const auto& e : parsed.errors) joined += e + "; ";
    throw std::invalid_argument("invalid scenario: " + joined);
  }
  auto result = sim::run_simulation(parsed.config);
  py::dict out;
  out["log"] = result.log;
  out["summary"] = metrics::report_summary(result.report);
  out["csv"] = metrics::report_csv(result.report);
  out["violations"] = result.violations;
  out["downtime_cycles"] = result.report.downtime_cycles;
  out["cycle_blocks"] = result.report.cycle_blocks;
  out["epoch_blocks"] = result.report.epoch_blocks;
  out["genesis_blocks"] = result.report.genesis_blocks;
  out["mean_shuffle_distance"] = result.report.mean_shuffle_distance;
  out["coalition_leader_rate"] = result.report.coalition_leader_rate;
  out["max_coalition_streak"] = result.report.max_coalition_streak;
  return out;
}

}  // namespace

PYBIND11_MODULE(_unitychain, m) {
  m.doc() = "Multi-strand threshold-signed chain simulator";

  m.def("field_modulus", [] { return FieldElement::kModulus; });
  m.def("majority_threshold", &topo::majority_threshold, py::arg("n"),
        "ceil(51 * n / 100)");
  m.def("split_secret", &py_split_secret, py::arg("secret"), py::arg("n"),
        py::arg("t"), py::arg("seed"),
        "Shamir-split a secret; returns (index, value) pairs");
  m.def("reconstruct_secret", &py_reconstruct, py::arg("shares"),
        py::arg("t"));
  m.def("dkg_sign_verify", &py_dkg_sign_verify, py::arg("n"), py::arg("t"),
        py::arg("message"), py::arg("seed"),
        "Run a DKG, threshold-sign, verify the aggregate");
  m.def("kendall_tau", &metrics::kendall_tau_indices, py::arg("a"),
        py::arg("b"));
  m.def("validate_scenario",
        [](const std::string& text) { return sim::parse_scenario(text).errors; },
        py::arg("text"));
  m.def("canonical_scenario",
        [](const std::string& text) {
          auto parsed = sim::parse_scenario(text);
          if (!parsed.errors.empty())
            throw std::invalid_argument(parsed.errors.front());
          return sim::canonical_scenario(parsed.config);
        },
        py::arg("text"));
  m.def("run_scenario", &py_run_scenario, py::arg("text"),
        "Run a scenario; returns log, summary, csv and headline metrics");
  m.def("analyze_log",
        [](const std::string& log, const std::vector<std::uint32_t>& coalition) {
          auto r = metrics::analyze_log(log, coalition);
          py::dict out;
          out["summary"] = metrics::report_summary(r);
          out["csv"] = metrics::report_csv(r);
          out["downtime_cycles"] = r.downtime_cycles;
          out["coalition_leader_rate"] = r.coalition_leader_rate;
          out["max_coalition_streak"] = r.max_coalition_streak;
          out["mean_shuffle_distance"] = r.mean_shuffle_distance;
          return out;
        },
        py::arg("log"), py::arg("coalition") = std::vector<std::uint32_t>{});
}
