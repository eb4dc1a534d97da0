#include "unitychain/simnet.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "unitychain/chain.hpp"
#include "unitychain/engine.hpp"

namespace unitychain::sim {

using json = nlohmann::ordered_json;
using engine::MessageKind;
using engine::NodeEngine;
using engine::ProtocolMessage;
using engine::TimerTick;
using topo::kNegative;
using topo::kPositive;
using topo::StrandId;

namespace {

NodeId make_join_id(std::uint64_t k) {
  NodeId n;
  n.id = HashWriter().tag("unitychain.join").u64(k).finalize();
  n.public_key =
      GroupElement::from_exponent(FieldElement(seed_from_digest(n.id)));
  return n;
}

std::uint64_t node_seed_for(const NodeId& id) {
  return seed_from_digest(
      HashWriter().tag("unitychain.nodeseed").digest(id.id).finalize());
}

struct Slot {
  std::uint32_t index = 0;  // UINT32_MAX for the observer
  NodeId id;
  std::unique_ptr<NodeEngine> eng;
  bool silent = false;
  std::uint64_t silent_from = 0;
  bool equivocate = false;
  bool crashes = false;
  std::uint64_t crash_tick = 0;
};

class Simulator {
 public:
  explicit Simulator(const ScenarioConfig& sc) : sc_(sc) {}

  SimResult run();

 private:
  struct Delivery {
    std::uint64_t seq = 0;
    ProtocolMessage msg;
  };

  void bootstrap();
  void write_header();
  std::uint64_t draw_latency();
  void broadcast(const ProtocolMessage& msg, std::uint64_t tick);
  void deliver_now(const ProtocolMessage& msg, std::uint64_t tick);
  void inject_workload(std::uint64_t cycle, std::uint64_t tick);
  void inject_churn(std::uint64_t cycle, std::uint64_t tick);
  void attach_hooks();
  void check_invariants(SimResult& out);

  json idx_list(const std::vector<NodeId>& ids) const;
  json idx_of(const NodeId& id) const;
  void log_line(json j) { log_ << j.dump() << "\n"; }

  bool crashed(const Slot& s, std::uint64_t tick) const {
    return s.crashes && tick >= s.crash_tick;
  }

  const ScenarioConfig& sc_;
  std::shared_ptr<crypto::KeyRegistry> registry_ =
      std::make_shared<crypto::KeyRegistry>();
  std::vector<Slot> slots_;  // founders, observer, then joiners
  std::size_t observer_pos_ = 0;
  std::map<Digest32, std::uint32_t> index_by_id_;
  std::map<std::uint64_t, std::vector<Delivery>> mailbox_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_join_ = 0;
  std::uint64_t batches_injected_ = 0;
  std::uint64_t tx_seq_ = 0;
  std::uint64_t cur_cycle_ = 0;

  SplitMix64 latency_rng_{0};
  SplitMix64 workload_rng_{0};
  SplitMix64 churn_rng_{0};

  std::ostringstream log_;
  std::vector<std::string> live_violations_;
  // per-cycle counters driven by observer hooks
  std::uint32_t blocks_this_cycle_ = 0;
  std::uint64_t finalized_at_cycle_start_ = 0;
  std::uint64_t genesis_seq_ = 0;
  NodeId env_id_;  // sender for injected transactions
};

std::uint64_t Simulator::draw_latency() {
  if (sc_.latency == LatencyModel::Constant) return sc_.latency_lo;
  return sc_.latency_lo +
         latency_rng_.next_below(sc_.latency_hi - sc_.latency_lo + 1);
}

json Simulator::idx_of(const NodeId& id) const {
  auto it = index_by_id_.find(id.id);
  if (it == index_by_id_.end()) return nullptr;
  return it->second;
}

json Simulator::idx_list(const std::vector<NodeId>& ids) const {
  json arr = json::array();
  for (const auto& n : ids) arr.push_back(idx_of(n));
  return arr;
}

void Simulator::bootstrap() {
  std::vector<NodeId> members;
  for (std::uint32_t i = 0; i < sc_.node_count; ++i) {
    NodeId id = make_node_id(i);
    index_by_id_[id.id] = i;
    members.push_back(id);
  }
  std::sort(members.begin(), members.end());
  std::uint32_t t = topo::majority_threshold(sc_.node_count);

  auto ritual_seed = [&](const char* tag, std::uint8_t extra) {
    return HashWriter().tag(tag).u64(sc_.seed).u8(extra).finalize();
  };

  // Founding ceremony: one key for the origin attestation plus one per
  // strand, all dealt synchronously before the clock starts.
  Digest32 origin_ritual = ritual_seed("unitychain.ritual.origin", 0);
  SplitMix64 origin_rng(seed_from_digest(origin_ritual));
  auto origin_material =
      crypto::run_dkg(members, t, origin_rng, origin_ritual, *registry_);

  chain::OriginBlock origin = chain::build_origin_block(members, sc_.params);
  chain::BlockHash origin_hash = chain::hash_block(origin);
  std::vector<crypto::SignatureShare> shares;
  for (const auto& m : members) {
    shares.push_back(crypto::sign_share(origin_material, m,
                                        chain::hash_span(origin_hash)));
    if (shares.size() == t) break;
  }
  origin.bootstrap_signature = crypto::aggregate(shares, t);
  crypto::VrfSeed boot_seed =
      crypto::derive_vrf_seed(origin.bootstrap_signature);

  engine::BootstrapState bs;
  bs.origin = origin;
  bs.origin_hash = origin_hash;
  bs.materials.push_back(origin_material);

  std::vector<topo::NetworkConfiguration> configs;
  for (StrandId s : {kPositive, kNegative}) {
    auto valence = static_cast<std::uint8_t>(s.valence);
    Digest32 rid = ritual_seed("unitychain.ritual.strand", valence);
    SplitMix64 rng(seed_from_digest(rid));
    auto material = crypto::run_dkg(members, t, rng, rid, *registry_);
    topo::NetworkConfiguration cfg;
    cfg.strand = s;
    cfg.ordered_members = members;
    cfg.group_key = material.group_public_key;
    cfg.ritual_id = material.ritual_id;
    crypto::VrfSeed seed;
    seed.bytes = HashWriter()
                     .tag("unitychain.bootstrap.topology")
                     .digest(boot_seed.bytes)
                     .u8(valence)
                     .finalize();
    configs.push_back(topo::permute_configuration(cfg, seed));
    bs.materials.push_back(material);
  }
  topo::resolve_leadership_conflict(configs);
  for (const auto& cfg : configs) bs.initial_configs[cfg.strand] = cfg;

  engine::EngineConfig ec;
  ec.params = sc_.params;
  ec.diverged_partition = topo::KeyRangePartition::parity();
  ec.master_seed = sc_.seed;

  for (std::uint32_t i = 0; i < sc_.node_count; ++i) {
    Slot slot;
    slot.index = i;
    slot.id = make_node_id(i);
    engine::EngineConfig mine = ec;
    mine.node_seed = node_seed_for(slot.id);
    slot.eng = std::make_unique<NodeEngine>(slot.id, true, mine, registry_, bs);
    slots_.push_back(std::move(slot));
  }
  for (const auto& f : sc_.faults) {
    Slot& s = slots_[f.node];
    switch (f.kind) {
      case FaultKind::Silent:
        s.silent = true;
        s.silent_from = f.silent_from;
        break;
      case FaultKind::Equivocate: s.equivocate = true; break;
      case FaultKind::Crash:
        s.crashes = true;
        s.crash_tick = f.crash_tick;
        break;
      case FaultKind::Colluder: break;  // behavioral no-op, tracked in metrics
    }
  }

  Slot obs;
  obs.index = 0xffffffffu;
  obs.id.id = HashWriter().tag("unitychain.observer").finalize();
  obs.id.public_key = GroupElement::from_exponent(FieldElement(1));
  obs.eng = std::make_unique<NodeEngine>(obs.id, false, ec, registry_, bs);
  observer_pos_ = slots_.size();
  slots_.push_back(std::move(obs));

  env_id_.id = HashWriter().tag("unitychain.env").finalize();

  latency_rng_ = SplitMix64(seed_from_digest(
      HashWriter().tag("unitychain.latency").u64(sc_.seed).finalize()));
  workload_rng_ = SplitMix64(seed_from_digest(
      HashWriter().tag("unitychain.workload").u64(sc_.seed).finalize()));
  churn_rng_ = SplitMix64(seed_from_digest(
      HashWriter().tag("unitychain.churn").u64(sc_.seed).finalize()));
}

void Simulator::write_header() {
  json nodes = json::array();
  for (std::uint32_t i = 0; i < sc_.node_count; ++i)
    nodes.push_back({{"index", i}, {"id", make_node_id(i).short_hex()}});
  log_line({{"type", "header"},
            {"schema", 1},
            {"seed", sc_.seed},
            {"scenario", canonical_scenario(sc_)},
            {"nodes", nodes}});
}

void Simulator::attach_hooks() {
  engine::EngineHooks h;
  h.on_cycle_block = [this](const chain::CycleBlock& b, const NodeId& leader,
                            std::uint64_t cycle) {
    ++blocks_this_cycle_;
    json cfg = json::array();
    for (const auto& m : b.configuration.ordered_members)
      cfg.push_back(idx_of(m));
    json signers = json::array();
    for (const auto& m : b.signature.signer_set) signers.push_back(idx_of(m));
    log_line({{"type", "block"},
              {"cycle", cycle},
              {"strand", topo::strand_name(b.strand)},
              {"height", b.height},
              {"hash", chain::hash_block(b).short_hex()},
              {"kind", b.genesis_cosignature ? "epoch_first" : "cycle"},
              {"leader", idx_of(leader)},
              {"tx_count", b.tx_summary.size()},
              {"config", cfg},
              {"signers", signers}});
  };
  h.on_epoch_block = [this](const chain::EpochBlock& b,
                            const chain::BlockHash& hash,
                            std::uint64_t cycle) {
    log_line({{"type", "epoch"},
              {"cycle", cycle},
              {"epoch", b.height},
              {"ascending", topo::strand_name(b.ascending)},
              {"hash", hash.short_hex()}});
  };
  h.on_genesis = [this](const chain::EpochGenesisBlock& b,
                        const chain::BlockHash& hash, std::uint64_t cycle,
                        const std::vector<NodeId>& left,
                        const std::vector<NodeId>& joined) {
    json configs = json::object();
    for (const auto& cfg : b.new_configurations) {
      json order = json::array();
      for (const auto& m : cfg.ordered_members) order.push_back(idx_of(m));
      configs[topo::strand_name(cfg.strand)] = order;
    }
    log_line({{"type", "genesis"},
              {"cycle", cycle},
              {"epoch", genesis_seq_++},
              {"hash", hash.short_hex()},
              {"left", idx_list(left)},
              {"joined", idx_list(joined)},
              {"configs", configs}});
  };
  h.on_phase_change = [this](StrandId s, engine::StrandPhase from,
                             engine::StrandPhase to, std::uint64_t cycle) {
    log_line({{"type", "phase"},
              {"cycle", cycle},
              {"strand", topo::strand_name(s)},
              {"from", engine::phase_name(from)},
              {"to", engine::phase_name(to)}});
  };
  h.on_ritual = [this](const Digest32& rid, bool ok,
                       const std::vector<NodeId>& excluded,
                       std::uint64_t cycle) {
    log_line({{"type", "ritual"},
              {"cycle", cycle},
              {"id", hex(rid).substr(0, 12)},
              {"ok", ok},
              {"excluded", idx_list(excluded)}});
  };
  h.on_complaint = [this](const NodeId& accuser, const NodeId& accused,
                          std::uint64_t cycle) {
    log_line({{"type", "complaint"},
              {"cycle", cycle},
              {"accuser", idx_of(accuser)},
              {"accused", idx_of(accused)}});
  };
  slots_[observer_pos_].eng->set_hooks(std::move(h));
}

void Simulator::broadcast(const ProtocolMessage& msg, std::uint64_t tick) {
  const Slot* sender = nullptr;
  for (const auto& s : slots_)
    if (s.id == msg.sender) {
      sender = &s;
      break;
    }
  if (sender != nullptr &&
      ((sender->silent && tick >= sender->silent_from) ||
       crashed(*sender, tick)))
    return;
  std::uint64_t seq = next_seq_++;
  mailbox_[tick + draw_latency()].push_back({seq, msg});
  if (sender != nullptr && sender->equivocate &&
      msg.kind == MessageKind::CycleProposal) {
    auto p = std::get<engine::CycleProposal>(msg.payload);
    if (!p.tx_summary.empty()) {
      p.tx_summary.pop_back();
      ProtocolMessage alt{msg.kind, msg.sender, p};
      std::uint64_t seq2 = next_seq_++;
      mailbox_[tick + draw_latency()].push_back({seq2, alt});
    }
  }
}

void Simulator::deliver_now(const ProtocolMessage& msg, std::uint64_t tick) {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    Slot& s = slots_[i];
    if (crashed(s, tick)) continue;
    auto outs = s.eng->handle_message(msg);
    for (const auto& m : outs) broadcast(m, tick);
  }
}

void Simulator::inject_workload(std::uint64_t cycle, std::uint64_t tick) {
  std::uint64_t count = 0;
  if (sc_.workload == WorkloadModel::FixedPerCycle) {
    count = sc_.workload_fixed;
  } else {
    // Knuth sampling; uniform doubles from the top 53 bits.
    double limit = std::exp(-sc_.workload_rate);
    double p = 1.0;
    while (true) {
      p *= static_cast<double>(workload_rng_.next() >> 11) * 0x1p-53;
      if (p <= limit) break;
      ++count;
    }
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    engine::Transaction tx;
    tx.key = workload_rng_.next();
    tx.payload =
        HashWriter().tag("unitychain.payload").u64(tx_seq_).finalize();
    tx.submitted_at = tick;
    tx.seq = tx_seq_++;
    log_line({{"type", "tx"}, {"cycle", cycle}, {"seq", tx.seq},
              {"key", tx.key}});
    ProtocolMessage msg{MessageKind::TxSubmit, env_id_, engine::TxSubmit{tx}};
    deliver_now(msg, tick);
  }
}

void Simulator::inject_churn(std::uint64_t cycle, std::uint64_t tick) {
  if (sc_.churn_joins_per_epoch == 0 && sc_.churn_leaves_per_epoch == 0)
    return;
  if (sc_.params.shuffle_every_epochs == 0) return;
  const NodeEngine& observer = *slots_[observer_pos_].eng;
  if (cycle < 1 || batches_injected_ > observer.epoch_count()) return;
  ++batches_injected_;

  for (std::uint32_t j = 0; j < sc_.churn_joins_per_epoch; ++j) {
    NodeId id = make_join_id(next_join_);
    std::uint32_t index = sc_.node_count + static_cast<std::uint32_t>(next_join_);
    ++next_join_;
    index_by_id_[id.id] = index;
    Slot slot;
    slot.index = index;
    slot.id = id;
    slot.eng = std::make_unique<NodeEngine>(
        observer.fork_as(id, node_seed_for(id)));
    slots_.push_back(std::move(slot));
    log_line({{"type", "join_request"}, {"cycle", cycle}, {"index", index},
              {"id", id.short_hex()}});
    broadcast({MessageKind::JoinRequest, id, engine::JoinRequestMsg{id}},
              tick);
  }
  std::vector<NodeId> pool(observer.current_members().begin(),
                           observer.current_members().end());
  for (std::uint32_t j = 0;
       j < sc_.churn_leaves_per_epoch && !pool.empty(); ++j) {
    std::size_t pick = churn_rng_.next_below(pool.size());
    NodeId leaver = pool[pick];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    log_line({{"type", "leave_notice"}, {"cycle", cycle},
              {"index", idx_of(leaver)}});
    broadcast({MessageKind::LeaveNotice, leaver,
               engine::LeaveNoticeMsg{leaver}},
              tick);
  }
}

void Simulator::check_invariants(SimResult& out) {
  const NodeEngine& obs = *slots_[observer_pos_].eng;
  auto bad = [&](const std::string& msg) { out.violations.push_back(msg); };

  for (const auto& slot : slots_) {
    if (slot.index == 0xffffffffu || slot.crashes) continue;
    const NodeEngine& e = *slot.eng;
    std::string who = "node " + std::to_string(slot.index);
    for (StrandId s : {kPositive, kNegative}) {
      if (!(e.tip_hash(s) == obs.tip_hash(s)) ||
          e.tip_height(s) != obs.tip_height(s))
        bad(who + ": " + topo::strand_name(s) + " tip diverges from observer");
      if (e.phase(s) != obs.phase(s))
        bad(who + ": " + topo::strand_name(s) + " phase diverges");
    }
    if (e.epoch_hashes() != obs.epoch_hashes())
      bad(who + ": epoch chain diverges");
    if (e.genesis_hashes() != obs.genesis_hashes())
      bad(who + ": genesis chain diverges");
    if (!(e.current_members() == obs.current_members()))
      bad(who + ": membership diverges");
  }

  for (StrandId s : {kPositive, kNegative}) {
    const auto& hist = obs.phase_history(s);
    for (std::size_t i = 1; i < hist.size(); ++i) {
      if (!engine::legal_phase_transition(hist[i - 1].first, hist[i].first))
        bad("illegal phase transition on " + topo::strand_name(s) + ": " +
            engine::phase_name(hist[i - 1].first) + " -> " +
            engine::phase_name(hist[i].first));
    }
    const auto& blocks = obs.strand_blocks(s);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (blocks[i].height != i + 1)
        bad(topo::strand_name(s) + " heights not consecutive at index " +
            std::to_string(i));
      if (i > 0 && !(blocks[i].parent_hash == chain::hash_block(blocks[i - 1])))
        bad(topo::strand_name(s) + " parent link broken at height " +
            std::to_string(blocks[i].height));
    }
  }

  if (tx_seq_ != obs.finalized_tx_count() + obs.pending_tx_count())
    bad("transaction conservation broken: submitted " +
        std::to_string(tx_seq_) + " != finalized " +
        std::to_string(obs.finalized_tx_count()) + " + pending " +
        std::to_string(obs.pending_tx_count()));

  if (!obs.active_partition().validate().empty())
    bad("final key-range partition is not total and disjoint");
}

SimResult Simulator::run() {
  if (sc_.node_count < 4)
    throw std::invalid_argument("node_count must be at least 4");
  if (sc_.params.strand_count != 2)
    throw std::invalid_argument("strand_count must be 2");
  bootstrap();
  write_header();
  attach_hooks();
  const NodeEngine& obs = *slots_[observer_pos_].eng;

  const std::uint64_t ticks = sc_.cycle_ticks;
  const std::uint64_t total = sc_.horizon * ticks;
  for (std::uint64_t t = 0; t < total; ++t) {
    std::uint64_t in_cycle = t % ticks;
    if (in_cycle == 0) {
      cur_cycle_ = t / ticks;
      inject_churn(cur_cycle_, t);
      log_line({{"type", "cycle_start"}, {"cycle", cur_cycle_}, {"tick", t}});
      blocks_this_cycle_ = 0;
      finalized_at_cycle_start_ = obs.finalized_tx_count();
      inject_workload(cur_cycle_, t);
    }

    TimerTick tick;
    bool fire = false;
    if (in_cycle == 0) {
      tick = {TimerTick::Kind::CycleStart, cur_cycle_, t};
      fire = true;
    } else if (in_cycle == ticks / 2) {
      tick = {TimerTick::Kind::MidCycle, cur_cycle_, t};
      fire = true;
    } else if (in_cycle == ticks - 1) {
      tick = {TimerTick::Kind::CycleEnd, cur_cycle_, t};
      fire = true;
    }
    if (fire) {
      for (std::size_t i = 0; i < slots_.size(); ++i) {
        Slot& s = slots_[i];
        if (crashed(s, t)) continue;
        auto outs = s.eng->on_tick(tick);
        for (const auto& m : outs) broadcast(m, t);
      }
    }

    if (auto it = mailbox_.find(t); it != mailbox_.end()) {
      for (const auto& d : it->second) {
        for (std::size_t i = 0; i < slots_.size(); ++i) {
          Slot& s = slots_[i];
          if (crashed(s, t)) continue;
          auto outs = s.eng->handle_message(d.msg);
          for (const auto& m : outs) broadcast(m, t);
        }
      }
      mailbox_.erase(it);
    }

    if (in_cycle == ticks - 1) {
      if (!obs.active_partition().validate().empty())
        live_violations_.push_back(
            "cycle " + std::to_string(cur_cycle_) +
            ": key-range partition not total and disjoint");
      log_line({{"type", "cycle_end"},
                {"cycle", cur_cycle_},
                {"blocks", blocks_this_cycle_},
                {"txs_finalized",
                 obs.finalized_tx_count() - finalized_at_cycle_start_},
                {"pending", obs.pending_tx_count()}});
    }
  }

  SimResult result;
  result.violations = live_violations_;
  check_invariants(result);
  result.log = log_.str();
  result.report = metrics::analyze_log(result.log, {});
  return result;
}

}  // namespace

SimResult run_simulation(const ScenarioConfig& scenario) {
  // Route programmatic configs through the same validation as parsed ones.
  auto checked = parse_scenario(canonical_scenario(scenario));
  if (!checked.errors.empty())
    throw std::invalid_argument("invalid scenario: " + checked.errors.front());
  Simulator sim(scenario);
  return sim.run();
}

}  // namespace unitychain::sim
