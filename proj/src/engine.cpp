#include "unitychain/engine.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace unitychain::engine {

using topo::counterpart;
using topo::kNegative;
using topo::kPositive;
using topo::majority_threshold;

std::string phase_name(StrandPhase p) {
  switch (p) {
    case StrandPhase::Diverged: return "diverged";
    case StrandPhase::EpochConverging: return "epoch-converging";
    case StrandPhase::Reshuffling: return "reshuffling";
    case StrandPhase::DominantFullKeyspace: return "dominant-full-keyspace";
    case StrandPhase::GenesisPending: return "genesis-pending";
  }
  return "unknown";
}

bool legal_phase_transition(StrandPhase from, StrandPhase to) {
  switch (from) {
    case StrandPhase::Diverged:
      return to == StrandPhase::EpochConverging;
    case StrandPhase::EpochConverging:
      return to == StrandPhase::Reshuffling ||
             to == StrandPhase::DominantFullKeyspace;
    case StrandPhase::Reshuffling:
      return to == StrandPhase::GenesisPending;
    case StrandPhase::DominantFullKeyspace:
      return to == StrandPhase::GenesisPending;
    case StrandPhase::GenesisPending:
      return to == StrandPhase::Diverged;
  }
  return false;
}

namespace {

Digest32 tx_digest(const Transaction& tx) {
  return HashWriter()
      .tag("unitychain.tx")
      .u64(tx.key)
      .digest(tx.payload)
      .u64(tx.seq)
      .finalize();
}

crypto::AggregateSignature aggregate_first_t(
    const std::map<std::uint32_t, crypto::SignatureShare>& shares,
    std::uint32_t t) {
  std::vector<crypto::SignatureShare> list;
  list.reserve(t);
  for (const auto& [idx, s] : shares) {
    list.push_back(s);
    if (list.size() == t) break;
  }
  return crypto::aggregate(list, t);
}

}  // namespace

NodeEngine::NodeEngine(NodeId identity, bool participant, EngineConfig config,
                       std::shared_ptr<crypto::KeyRegistry> registry,
                       const BootstrapState& bootstrap)
    : identity_(identity),
      participant_(participant),
      config_(std::move(config)),
      registry_(std::move(registry)) {
  active_partition_ = config_.diverged_partition;
  current_members_ = {bootstrap.origin.members.begin(),
                      bootstrap.origin.members.end()};
  for (const auto& m : bootstrap.materials) materials_[m.ritual_id] = m;
  for (const auto& [strand, cfg] : bootstrap.initial_configs) {
    StrandState st;
    st.active_config = cfg;
    st.tip_hash = bootstrap.origin_hash;
    st.tip_height = 0;
    st.phase_history.emplace_back(StrandPhase::Diverged, 0);
    strands_[strand] = std::move(st);
  }
}

NodeEngine NodeEngine::fork_as(NodeId identity, std::uint64_t node_seed) const {
  NodeEngine clone = *this;
  clone.identity_ = identity;
  clone.participant_ = true;
  clone.config_.node_seed = node_seed;
  clone.hooks_ = {};
  return clone;
}

bool NodeEngine::is_active_member() const {
  return current_members_.count(identity_) > 0;
}

void NodeEngine::change_phase(StrandId s, StrandPhase to) {
  auto& st = strands_.at(s);
  if (st.phase == to) return;
  StrandPhase from = st.phase;
  assert(legal_phase_transition(from, to));
  st.phase = to;
  st.phase_history.emplace_back(to, cycle_);
  if (hooks_.on_phase_change) hooks_.on_phase_change(s, from, to, cycle_);
}

bool NodeEngine::i_lead(const NetworkConfiguration& config) const {
  return participant_ && !config.ordered_members.empty() &&
         topo::select_leader(config, cycle_) == identity_;
}

bool NodeEngine::partition_grants(StrandId s) const {
  switch (active_partition_.mode) {
    case topo::PartitionMode::Parity:
      return true;
    case topo::PartitionMode::FullKeyspace:
      return active_partition_.full_owner == s;
    case topo::PartitionMode::Ranges:
      for (const auto& r : active_partition_.ranges)
        if (r.owner == s) return true;
      return false;
  }
  return false;
}

bool NodeEngine::epoch_shuffles(std::uint64_t epoch_index) const {
  std::uint32_t every = config_.params.shuffle_every_epochs;
  if (every == 0) return false;
  return (epoch_index + 1) % every == 0;
}

std::uint64_t NodeEngine::next_epoch_cycle() const {
  std::int64_t by_spacing =
      last_epoch_cycle_ + static_cast<std::int64_t>(config_.params.cycles_per_epoch);
  std::int64_t after_genesis = last_genesis_cycle_ + 1;
  return static_cast<std::uint64_t>(std::max(by_spacing, after_genesis));
}

StrandId NodeEngine::next_ascending() const {
  // Figure-4 convention: the first epoch's ascending strand is Negative.
  if (epoch_blocks_.empty()) return kNegative;
  return counterpart(epoch_blocks_.back().ascending);
}

const crypto::GroupKeyMaterial* NodeEngine::material_for(
    const Digest32& ritual_id) const {
  auto it = materials_.find(ritual_id);
  return it == materials_.end() ? nullptr : &it->second;
}

std::vector<Digest32> NodeEngine::routed_pending_txs(StrandId s) const {
  std::vector<Digest32> out;
  for (const auto& tx : pending_txs_) {
    if (topo::route_key(tx.key, active_partition_) == s)
      out.push_back(tx_digest(tx));
  }
  return out;
}

bool NodeEngine::verify_member_share(const crypto::SignatureShare& share,
                                     const NetworkConfiguration& config,
                                     const BlockHash& message) const {
  const auto* material = material_for(config.ritual_id);
  if (material == nullptr) return false;
  auto it = material->member_shares.find(share.signer);
  if (it == material->member_shares.end()) return false;
  if (it->second.index != share.index) return false;
  if (!config.contains(share.signer)) return false;
  auto msg = chain::hash_span(message);
  if (share.message_digest != crypto::message_digest(msg)) return false;
  return share.value == crypto::hash_to_group(msg).pow(it->second.value);
}

void NodeEngine::emit(Out& out, MessageKind kind,
                      decltype(ProtocolMessage::payload) payload) {
  out.push_back(ProtocolMessage{kind, identity_, std::move(payload)});
}

void NodeEngine::drop(const std::string& reason) {
  if (hooks_.on_drop) hooks_.on_drop(reason);
}

// --- tick handling ---------------------------------------------------------

std::vector<ProtocolMessage> NodeEngine::on_tick(const TimerTick& tick) {
  Out out;
  cycle_ = tick.cycle;
  switch (tick.kind) {
    case TimerTick::Kind::CycleStart: {
      // Expire stale buffered messages and unfinished rounds from earlier
      // cycles; the current leader retries them.
      while (!buffer_.empty() && buffer_.front().cycle + 2 <= cycle_) {
        drop("buffered message expired");
        buffer_.pop_front();
      }
      for (auto& [s, st] : strands_)
        if (st.pending && st.pending->proposal.cycle < cycle_)
          st.pending.reset();
      if (epoch_round_ && epoch_round_->cycle < cycle_) epoch_round_.reset();
      for (auto& [s, st] : strands_) maybe_propose_cycle(out, s);
      break;
    }
    case TimerTick::Kind::MidCycle: {
      // Reshuffle bookkeeping first, then possibly open an epoch round.
      bool reshuffling = false;
      for (auto& [s, st] : strands_)
        if (st.phase == StrandPhase::Reshuffling) reshuffling = true;
      if (reshuffling && !reshuffle_done_ && cycle_ >= reshuffle_ready_cycle_)
        finalize_reshuffle(out);
      // Covers both the freshly finalized reshuffle and retries after a
      // cycle whose genesis round did not complete.
      if (genesis_round_) propose_genesis(out);

      bool convergable = true;
      for (auto& [s, st] : strands_)
        if (st.phase != StrandPhase::Diverged &&
            st.phase != StrandPhase::EpochConverging)
          convergable = false;
      if (convergable && cycle_ >= next_epoch_cycle()) start_epoch_round(out);
      break;
    }
    case TimerTick::Kind::CycleEnd:
      break;
  }
  if (!draining_) drain_buffer(out);
  return out;
}

void NodeEngine::maybe_propose_cycle(Out& out, StrandId s) {
  auto& st = strands_.at(s);
  if (st.phase == StrandPhase::Reshuffling) return;
  if (step4_outstanding_ && s == step4_strand_) {
    // The post-genesis block is still owed; it is proposed by the previous
    // dominant configuration, not the regular strand leader.
    if (!i_lead(step4_signing_config_)) return;
    CycleProposal p;
    p.strand = s;
    p.height = st.tip_height + 1;
    p.parent_hash = st.tip_hash;
    p.tx_summary = routed_pending_txs(s);
    p.cycle = cycle_;
    p.first_of_epoch = true;
    emit(out, MessageKind::CycleProposal, p);
    return;
  }
  if (!partition_grants(s)) return;
  if (!i_lead(st.active_config)) return;
  CycleProposal p;
  p.strand = s;
  p.height = st.tip_height + 1;
  p.parent_hash = st.tip_hash;
  p.tx_summary = routed_pending_txs(s);
  p.cycle = cycle_;
  emit(out, MessageKind::CycleProposal, p);
}

// --- message dispatch ------------------------------------------------------

std::vector<ProtocolMessage> NodeEngine::handle_message(
    const ProtocolMessage& msg) {
  Out out;
  if (dispatch(out, msg)) buffer_.push_back({msg, cycle_});
  if (!draining_) drain_buffer(out);
  return out;
}

bool NodeEngine::dispatch(Out& out, const ProtocolMessage& msg) {
  switch (msg.kind) {
    case MessageKind::CycleProposal:
      handle_cycle_proposal(out, msg.sender,
                            std::get<CycleProposal>(msg.payload));
      return false;
    case MessageKind::CycleSignatureShare: {
      const auto& cs = std::get<CycleSignatureShare>(msg.payload);
      auto& st = strands_.at(cs.strand);
      if (cs.height > st.tip_height + 1 ||
          (cs.height == st.tip_height + 1 && !st.pending))
        return true;  // ahead of our state
      handle_cycle_share(out, msg.sender, cs);
      return false;
    }
    case MessageKind::EpochProposal:
      handle_epoch_proposal(out, msg.sender,
                            std::get<EpochProposal>(msg.payload));
      return false;
    case MessageKind::EpochSignatureShare: {
      const auto& es = std::get<EpochSignatureShare>(msg.payload);
      if (es.epoch >= epoch_blocks_.size() && !epoch_round_) return true;
      handle_epoch_share(out, msg.sender, es);
      return false;
    }
    case MessageKind::GenesisProposal:
      handle_genesis_proposal(out, msg.sender,
                              std::get<GenesisProposal>(msg.payload));
      return false;
    case MessageKind::GenesisSignatureShare: {
      const auto& gs = std::get<GenesisSignatureShare>(msg.payload);
      if (!genesis_round_ && gs.epoch >= genesis_blocks_.size()) return true;
      handle_genesis_share(out, msg.sender, gs);
      return false;
    }
    case MessageKind::DkgDealing: {
      const auto& dm = std::get<DkgDealingMsg>(msg.payload);
      bool known = false;
      for (const auto& [s, r] : rituals_)
        if (r.id == dm.ritual_id) known = true;
      if (!known) return true;  // dealing may precede our epoch acceptance
      handle_dkg_dealing(out, msg.sender, dm);
      return false;
    }
    case MessageKind::DkgComplaint:
      handle_dkg_complaint(out, msg.sender,
                           std::get<DkgComplaintMsg>(msg.payload));
      return false;
    case MessageKind::JoinRequest: {
      const auto& j = std::get<JoinRequestMsg>(msg.payload);
      if (!current_members_.count(j.joiner)) pending_joins_.insert(j.joiner);
      return false;
    }
    case MessageKind::LeaveNotice: {
      const auto& l = std::get<LeaveNoticeMsg>(msg.payload);
      if (current_members_.count(l.leaver)) pending_leaves_.insert(l.leaver);
      return false;
    }
    case MessageKind::TxSubmit: {
      const auto& t = std::get<TxSubmit>(msg.payload);
      Digest32 d = tx_digest(t.tx);
      if (!pending_digests_.count(d) && !finalized_digests_.count(d)) {
        pending_digests_.insert(d);
        pending_txs_.push_back(t.tx);
      }
      return false;
    }
  }
  drop("unknown message kind");
  return false;
}

void NodeEngine::drain_buffer(Out& out) {
  draining_ = true;
  for (int pass = 0; pass < 4; ++pass) {
    if (buffer_.empty()) break;
    std::deque<Buffered> work;
    work.swap(buffer_);
    bool progress = false;
    for (auto& b : work) {
      if (dispatch(out, b.msg)) {
        buffer_.push_back(std::move(b));
      } else {
        progress = true;
      }
    }
    if (!progress) break;
  }
  draining_ = false;
}

// --- cycle blocks ----------------------------------------------------------

void NodeEngine::handle_cycle_proposal(Out& out, const NodeId& sender,
                                       const CycleProposal& p) {
  auto it = strands_.find(p.strand);
  if (it == strands_.end()) return drop("proposal for unknown strand");
  auto& st = it->second;
  if (p.height != st.tip_height + 1 || p.parent_hash != st.tip_hash)
    return drop("cycle proposal off tip");
  if (st.pending) return;  // first valid proposal wins this height

  const NetworkConfiguration* signing = &st.active_config;
  if (p.first_of_epoch) {
    if (!step4_outstanding_ || p.strand != step4_strand_)
      return drop("unexpected first-of-epoch proposal");
    signing = &step4_signing_config_;
  } else {
    if (st.phase == StrandPhase::Reshuffling || !partition_grants(p.strand) ||
        (step4_outstanding_ && p.strand == step4_strand_))
      return drop("proposal for non-producing strand");
  }
  if (!(sender == topo::select_leader(*signing, cycle_)))
    return drop("cycle proposal from non-leader");
  for (const auto& d : p.tx_summary) {
    if (!pending_digests_.count(d))
      return drop("cycle proposal references unknown tx");
  }

  PendingBlock pb;
  pb.proposal = p;
  chain::CycleBlock stub;
  stub.strand = p.strand;
  stub.height = p.height;
  stub.parent_hash = p.parent_hash;
  stub.tx_summary = p.tx_summary;
  pb.hash = chain::hash_block(stub);
  st.pending = std::move(pb);

  if (participant_ && signing->contains(identity_)) {
    const auto* material = material_for(signing->ritual_id);
    if (material != nullptr) {
      CycleSignatureShare cs;
      cs.strand = p.strand;
      cs.height = p.height;
      cs.block_hash = st.pending->hash;
      cs.genesis_cosign = false;
      cs.share = crypto::sign_share(*material, identity_,
                                    chain::hash_span(st.pending->hash));
      emit(out, MessageKind::CycleSignatureShare, cs);
    }
  }
  if (!draining_) drain_buffer(out);
}

void NodeEngine::handle_cycle_share(Out& out, const NodeId& sender,
                                    const CycleSignatureShare& cs) {
  auto& st = strands_.at(cs.strand);
  if (cs.height <= st.tip_height) return;  // stale; idempotent no-op
  if (!st.pending || cs.block_hash != st.pending->hash)
    return drop("cycle share for unknown block");
  auto& pb = *st.pending;

  const NetworkConfiguration* signing = &st.active_config;
  if (pb.proposal.first_of_epoch && !cs.genesis_cosign)
    signing = &step4_signing_config_;
  if (cs.genesis_cosign && !pb.proposal.first_of_epoch)
    return drop("unexpected genesis cosign share");

  if (!verify_member_share(cs.share, *signing, cs.block_hash) ||
      !(cs.share.signer == sender))
    return drop("invalid cycle signature share");

  auto& bucket = cs.genesis_cosign ? pb.cosign_shares : pb.shares;
  bucket.emplace(cs.share.index, cs.share);  // duplicates are no-ops
  try_finalize_cycle(out, cs.strand);
}

void NodeEngine::try_finalize_cycle(Out& out, StrandId s) {
  auto& st = strands_.at(s);
  if (!st.pending) return;
  auto& pb = *st.pending;

  const bool step4 = pb.proposal.first_of_epoch;
  const NetworkConfiguration& primary_config =
      step4 ? step4_signing_config_ : st.active_config;
  std::uint32_t t_primary = majority_threshold(
      static_cast<std::uint32_t>(primary_config.ordered_members.size()));
  if (pb.shares.size() < t_primary) return;

  if (!pb.primary_agg)
    pb.primary_agg = aggregate_first_t(pb.shares, t_primary);

  chain::CycleBlock block;
  block.strand = s;
  block.height = pb.proposal.height;
  block.parent_hash = pb.proposal.parent_hash;
  block.tx_summary = pb.proposal.tx_summary;
  block.signature = *pb.primary_agg;

  if (step4) {
    // Step 5: the newly agreed configuration countersigns; the combined
    // signatures seed the first-cycle topology permutation.
    std::uint32_t t_new = majority_threshold(
        static_cast<std::uint32_t>(st.active_config.ordered_members.size()));
    if (!pb.cosign_requested) {
      pb.cosign_requested = true;
      if (participant_ && st.active_config.contains(identity_)) {
        const auto* material = material_for(st.active_config.ritual_id);
        if (material != nullptr) {
          CycleSignatureShare cs;
          cs.strand = s;
          cs.height = pb.proposal.height;
          cs.block_hash = pb.hash;
          cs.genesis_cosign = true;
          cs.share = crypto::sign_share(*material, identity_,
                                        chain::hash_span(pb.hash));
          emit(out, MessageKind::CycleSignatureShare, cs);
        }
      }
    }
    if (pb.cosign_shares.size() < t_new) return;
    block.genesis_cosignature = aggregate_first_t(pb.cosign_shares, t_new);
    crypto::VrfSeed seed;
    seed.bytes = HashWriter()
                     .tag("unitychain.vrf.combined")
                     .group(block.signature.value)
                     .group(block.genesis_cosignature->value)
                     .finalize();
    block.configuration = topo::permute_configuration(st.active_config, seed);
    step4_outstanding_ = false;
  } else {
    block.configuration = topo::permute_configuration(
        st.active_config, crypto::derive_vrf_seed(block.signature));
  }
  NodeId leader = topo::select_leader(primary_config, pb.proposal.cycle);
  accept_cycle_block(out, s, std::move(block), leader);
}

void NodeEngine::accept_cycle_block(Out& out, StrandId s,
                                    chain::CycleBlock block,
                                    const NodeId& leader) {
  auto& st = strands_.at(s);
  st.tip_hash = chain::hash_block(block);
  st.tip_height = block.height;
  st.active_config = block.configuration;
  for (const auto& d : block.tx_summary) {
    if (pending_digests_.erase(d)) {
      finalized_digests_.insert(d);
      ++finalized_tx_count_;
    }
  }
  if (!block.tx_summary.empty()) {
    std::erase_if(pending_txs_, [&](const Transaction& tx) {
      return finalized_digests_.count(tx_digest(tx)) > 0;
    });
  }
  st.pending.reset();
  st.blocks.push_back(block);
  if (hooks_.on_cycle_block)
    hooks_.on_cycle_block(st.blocks.back(), leader, cycle_);
  if (!draining_) drain_buffer(out);
}

// --- epoch blocks ----------------------------------------------------------

void NodeEngine::start_epoch_round(Out& out) {
  for (auto& [s, st] : strands_) {
    if (st.phase == StrandPhase::Diverged)
      change_phase(s, StrandPhase::EpochConverging);
  }
  StrandId ascending = next_ascending();
  const auto& asc_cfg = strands_.at(ascending).active_config;
  if (!i_lead(asc_cfg)) return;
  if (epoch_round_ && epoch_round_->cycle == cycle_) return;

  chain::EpochBlock block;
  block.height = epoch_blocks_.size();
  block.ascending = ascending;
  block.descending = counterpart(ascending);
  block.responsibilities = topo::KeyRangePartition::full_keyspace(ascending);
  for (const auto& [s, st] : strands_) block.parent_hashes[s] = st.tip_hash;

  EpochProposal p;
  p.block = block;
  p.cycle = cycle_;
  emit(out, MessageKind::EpochProposal, p);
}

void NodeEngine::handle_epoch_proposal(Out& out, const NodeId& sender,
                                       const EpochProposal& p) {
  const auto& block = p.block;
  if (block.height != epoch_blocks_.size())
    return drop("epoch proposal at wrong height");
  if (p.cycle != cycle_ || cycle_ < next_epoch_cycle())
    return drop("epoch proposal before schedule");
  if (!(block.ascending == next_ascending()) ||
      !(block.descending == counterpart(block.ascending)))
    return drop("epoch proposal breaks alternation");
  if (block.responsibilities.mode != topo::PartitionMode::FullKeyspace ||
      !(block.responsibilities.full_owner == block.ascending))
    return drop("epoch proposal with incomplete responsibilities");
  for (const auto& [s, st] : strands_) {
    auto it = block.parent_hashes.find(s);
    if (it == block.parent_hashes.end() || !(it->second == st.tip_hash))
      return drop("epoch proposal off tips");
  }
  const auto& asc_cfg = strands_.at(block.ascending).active_config;
  if (!(sender == topo::select_leader(asc_cfg, cycle_)))
    return drop("epoch proposal from non-leader");
  BlockHash h = chain::hash_block(block);
  if (epoch_round_) return;  // first valid proposal wins the round

  EpochRound round;
  round.block = block;
  round.hash = h;
  round.cycle = cycle_;
  epoch_round_ = std::move(round);

  if (participant_ && asc_cfg.contains(identity_)) {
    const auto* material = material_for(asc_cfg.ritual_id);
    if (material != nullptr) {
      EpochSignatureShare es;
      es.epoch = block.height;
      es.descending = false;
      es.block_hash = h;
      es.share =
          crypto::sign_share(*material, identity_, chain::hash_span(h));
      emit(out, MessageKind::EpochSignatureShare, es);
    }
  }
  if (!draining_) drain_buffer(out);
}

void NodeEngine::handle_epoch_share(Out& out, const NodeId& sender,
                                    const EpochSignatureShare& es) {
  if (!epoch_round_ || es.block_hash != epoch_round_->hash)
    return drop("epoch share for unknown round");
  auto& round = *epoch_round_;
  const auto& asc_cfg = strands_.at(round.block.ascending).active_config;
  const auto& desc_cfg = strands_.at(round.block.descending).active_config;
  const auto& cfg = es.descending ? desc_cfg : asc_cfg;
  if (!verify_member_share(es.share, cfg, es.block_hash) ||
      !(es.share.signer == sender))
    return drop("invalid epoch signature share");
  auto& bucket = es.descending ? round.descending_shares : round.ascending_shares;
  bucket.emplace(es.share.index, es.share);

  std::uint32_t t_asc = majority_threshold(
      static_cast<std::uint32_t>(asc_cfg.ordered_members.size()));
  std::uint32_t t_desc = majority_threshold(
      static_cast<std::uint32_t>(desc_cfg.ordered_members.size()));

  // The descending strand countersigns only a proposal already verifiably
  // majority-signed by the ascending strand.
  if (round.ascending_shares.size() >= t_asc && !round.descending_requested) {
    round.descending_requested = true;
    if (participant_ && desc_cfg.contains(identity_)) {
      const auto* material = material_for(desc_cfg.ritual_id);
      if (material != nullptr) {
        EpochSignatureShare mine;
        mine.epoch = round.block.height;
        mine.descending = true;
        mine.block_hash = round.hash;
        mine.share = crypto::sign_share(*material, identity_,
                                        chain::hash_span(round.hash));
        emit(out, MessageKind::EpochSignatureShare, mine);
      }
    }
  }
  if (round.ascending_shares.size() >= t_asc &&
      round.descending_shares.size() >= t_desc)
    accept_epoch_block(out);
}

void NodeEngine::accept_epoch_block(Out& out) {
  auto round = std::move(*epoch_round_);
  epoch_round_.reset();

  const auto& asc_cfg = strands_.at(round.block.ascending).active_config;
  const auto& desc_cfg = strands_.at(round.block.descending).active_config;
  chain::EpochBlock block = round.block;
  block.ascending_signature = aggregate_first_t(
      round.ascending_shares,
      majority_threshold(
          static_cast<std::uint32_t>(asc_cfg.ordered_members.size())));
  block.descending_signature = aggregate_first_t(
      round.descending_shares,
      majority_threshold(
          static_cast<std::uint32_t>(desc_cfg.ordered_members.size())));

  epoch_blocks_.push_back(block);
  epoch_hashes_.push_back(round.hash);
  last_epoch_cycle_ = static_cast<std::int64_t>(cycle_);
  current_ascending_ = block.ascending;
  active_partition_ = block.responsibilities;
  change_phase(block.ascending, StrandPhase::DominantFullKeyspace);
  change_phase(block.descending, StrandPhase::Reshuffling);
  if (hooks_.on_epoch_block)
    hooks_.on_epoch_block(block, round.hash, cycle_);

  begin_reshuffle(out, cycle_);
  if (!draining_) drain_buffer(out);
}

// --- reshuffle + DKG -------------------------------------------------------

void NodeEngine::begin_reshuffle(Out& out, std::uint64_t accept_cycle) {
  reshuffle_done_ = false;
  rituals_.clear();
  next_configs_.clear();
  next_materials_.clear();
  genesis_round_.reset();
  epoch_left_.clear();
  epoch_joined_.clear();
  ritual_attempt_ = 0;

  shuffling_epoch_ = epoch_shuffles(epoch_blocks_.back().height);
  if (!shuffling_epoch_) {
    // Pass-through epoch: membership and key material are retained; the
    // genesis is proposed at the next mid-cycle.
    new_membership_.assign(current_members_.begin(), current_members_.end());
    reshuffle_ready_cycle_ = accept_cycle + 1;
    return;
  }

  // Apply churn deterministically: departures in ascending id order while the
  // carryover majority (and a 4-node floor) holds, then admissions in
  // ascending id order up to the join threshold.
  const std::set<NodeId> prior = current_members_;
  std::set<NodeId> stay = prior;
  std::uint32_t floor = std::max(
      majority_threshold(static_cast<std::uint32_t>(prior.size())), 4u);
  for (const auto& leaver : pending_leaves_) {
    if (!stay.count(leaver)) continue;
    if (stay.size() - 1 < floor) break;
    stay.erase(leaver);
    epoch_left_.push_back(leaver);
  }
  std::set<NodeId> next = stay;
  for (const auto& joiner : pending_joins_) {
    if (epoch_joined_.size() >=
        static_cast<std::size_t>(config_.params.join_threshold))
      break;
    if (next.count(joiner)) continue;
    next.insert(joiner);
    epoch_joined_.push_back(joiner);
  }
  for (const auto& n : epoch_left_) pending_leaves_.erase(n);
  for (const auto& n : epoch_joined_) pending_joins_.erase(n);
  new_membership_.assign(next.begin(), next.end());

  reshuffle_ready_cycle_ =
      accept_cycle + config_.params.reshuffle_duration + 1;
  deal_rituals(out);
}

void NodeEngine::deal_rituals(Out& out) {
  const Digest32& epoch_hash = epoch_hashes_.back().bytes;
  std::uint32_t n = static_cast<std::uint32_t>(new_membership_.size());
  std::uint32_t t = majority_threshold(n);
  for (StrandId s : {kPositive, kNegative}) {
    RitualState r;
    r.id = HashWriter()
               .tag("unitychain.ritual")
               .digest(epoch_hash)
               .u8(static_cast<std::uint8_t>(s.valence))
               .u64(ritual_attempt_)
               .finalize();
    r.strand = s;
    r.threshold = t;
    r.participants = new_membership_;
    rituals_[s] = std::move(r);
  }
  bool i_participate = std::binary_search(new_membership_.begin(),
                                          new_membership_.end(), identity_);
  if (!i_participate) return;
  for (StrandId s : {kPositive, kNegative}) {
    const auto& r = rituals_.at(s);
    SplitMix64 rng(seed_from_digest(HashWriter()
                                        .tag("unitychain.deal")
                                        .u64(config_.node_seed)
                                        .digest(r.id)
                                        .finalize()));
    crypto::Dealing d = crypto::shamir_split(FieldElement(rng.next()), n, t,
                                             rng, r.participants);
    d.commitment.dealer = identity_;
    for (std::size_t i = 0; i < r.participants.size(); ++i)
      d.shares[i].holder = r.participants[i];
    DkgDealingMsg dm;
    dm.ritual_id = r.id;
    dm.dealing = std::move(d);
    emit(out, MessageKind::DkgDealing, dm);
  }
}

void NodeEngine::handle_dkg_dealing(Out& out, const NodeId& sender,
                                    const DkgDealingMsg& dm) {
  for (auto& [s, r] : rituals_) {
    if (!(r.id == dm.ritual_id)) continue;
    if (!(dm.dealing.commitment.dealer == sender))
      return drop("dealing with mismatched dealer");
    if (!std::binary_search(r.participants.begin(), r.participants.end(),
                            sender))
      return drop("dealing from non-participant");
    if (r.dealings.count(sender)) return;  // duplicate
    r.dealings[sender] = dm.dealing;

    // Verify our own share; a bad one triggers a complaint.
    auto self = std::lower_bound(r.participants.begin(), r.participants.end(),
                                 identity_);
    if (participant_ && self != r.participants.end() && *self == identity_) {
      std::uint32_t my_index = static_cast<std::uint32_t>(
          std::distance(r.participants.begin(), self) + 1);
      if (my_index <= dm.dealing.shares.size()) {
        const auto& share = dm.dealing.shares[my_index - 1];
        if (!crypto::verify_share(dm.dealing.commitment, my_index,
                                  share.value)) {
          DkgComplaintMsg cm;
          cm.ritual_id = r.id;
          cm.accused = sender;
          emit(out, MessageKind::DkgComplaint, cm);
        }
      }
    }
    return;
  }
}

void NodeEngine::handle_dkg_complaint(Out& out, const NodeId& sender,
                                      const DkgComplaintMsg& cm) {
  (void)out;
  for (auto& [s, r] : rituals_) {
    if (!(r.id == cm.ritual_id)) continue;
    auto it = r.dealings.find(cm.accused);
    if (it == r.dealings.end()) return;
    bool justified = false;
    for (const auto& share : it->second.shares) {
      if (!crypto::verify_share(it->second.commitment, share.index,
                                share.value)) {
        justified = true;
        break;
      }
    }
    if (justified) {
      r.excluded.insert(cm.accused);
      if (hooks_.on_complaint) hooks_.on_complaint(sender, cm.accused, cycle_);
    }
    return;
  }
}

void NodeEngine::finalize_reshuffle(Out& out) {
  if (!shuffling_epoch_) {
    for (StrandId s : {kPositive, kNegative})
      next_configs_[s] = strands_.at(s).active_config;
    reshuffle_done_ = true;
  } else {
    std::map<StrandId, crypto::GroupKeyMaterial> produced;
    bool ok = true;
    for (StrandId s : {kPositive, kNegative}) {
      auto& r = rituals_.at(s);
      std::vector<crypto::Dealing> ordered;
      for (const auto& p : r.participants) {
        if (r.excluded.count(p)) continue;
        auto it = r.dealings.find(p);
        if (it != r.dealings.end()) ordered.push_back(it->second);
      }
      auto material = crypto::run_dkg_with_dealings(
          r.participants, r.threshold, ordered, r.id, *registry_);
      if (!material) {
        ok = false;
        if (hooks_.on_ritual)
          hooks_.on_ritual(r.id, false,
                           {r.excluded.begin(), r.excluded.end()}, cycle_);
        continue;
      }
      if (hooks_.on_ritual)
        hooks_.on_ritual(r.id, true, {r.excluded.begin(), r.excluded.end()},
                         cycle_);
      produced[s] = std::move(*material);
    }
    if (!ok) {
      // Ritual failure: retry next cycle with fresh randomness.
      ++ritual_attempt_;
      reshuffle_ready_cycle_ = cycle_ + 1;
      deal_rituals(out);
      return;
    }
    const Digest32& epoch_hash = epoch_hashes_.back().bytes;
    std::vector<NetworkConfiguration> configs;
    for (StrandId s : {kPositive, kNegative}) {
      NetworkConfiguration cfg;
      cfg.strand = s;
      cfg.ordered_members = new_membership_;
      cfg.group_key = produced.at(s).group_public_key;
      cfg.ritual_id = produced.at(s).ritual_id;
      crypto::VrfSeed seed;
      seed.bytes = HashWriter()
                       .tag("unitychain.genesis.topology")
                       .digest(epoch_hash)
                       .u8(static_cast<std::uint8_t>(s.valence))
                       .group(cfg.group_key)
                       .finalize();
      configs.push_back(topo::permute_configuration(cfg, seed));
    }
    topo::resolve_leadership_conflict(configs);
    for (auto& cfg : configs) next_configs_[cfg.strand] = cfg;
    for (const auto& [s, m] : produced) next_materials_[s] = m;
    reshuffle_done_ = true;
  }

  // Every engine builds the expected genesis block; the submissive strand's
  // leader proposes it (Step 1).
  chain::EpochGenesisBlock block;
  block.parent = epoch_hashes_.back();
  for (StrandId s : {kPositive, kNegative})
    block.new_configurations.push_back(next_configs_.at(s));
  block.partition = config_.diverged_partition;

  GenesisRound round;
  round.block = block;
  round.hash = chain::hash_block(block);
  genesis_round_ = std::move(round);

  StrandId submissive = epoch_blocks_.back().descending;
  StrandId dominant = epoch_blocks_.back().ascending;
  change_phase(submissive, StrandPhase::GenesisPending);
  change_phase(dominant, StrandPhase::GenesisPending);
}

void NodeEngine::propose_genesis(Out& out) {
  StrandId submissive = epoch_blocks_.back().descending;
  const auto& sub_cfg = strands_.at(submissive).active_config;
  if (!i_lead(sub_cfg)) return;
  GenesisProposal p;
  p.block = genesis_round_->block;
  p.epoch = epoch_blocks_.back().height;
  emit(out, MessageKind::GenesisProposal, p);
}

void NodeEngine::handle_genesis_proposal(Out& out, const NodeId& sender,
                                         const GenesisProposal& p) {
  if (!genesis_round_) return drop("genesis proposal with no round");
  if (!(chain::hash_block(p.block) == genesis_round_->hash))
    return drop("genesis proposal does not match reshuffle outcome");
  StrandId submissive = epoch_blocks_.back().descending;
  const auto& sub_cfg = strands_.at(submissive).active_config;
  if (!(sender == topo::select_leader(sub_cfg, cycle_)))
    return drop("genesis proposal from non-leader");

  // Step 2: the submissive strand's nodes majority-sign.
  if (participant_ && sub_cfg.contains(identity_)) {
    const auto* material = material_for(sub_cfg.ritual_id);
    if (material != nullptr) {
      GenesisSignatureShare gs;
      gs.epoch = p.epoch;
      gs.dominant = false;
      gs.block_hash = genesis_round_->hash;
      gs.share = crypto::sign_share(*material, identity_,
                                    chain::hash_span(genesis_round_->hash));
      emit(out, MessageKind::GenesisSignatureShare, gs);
    }
  }
}

void NodeEngine::handle_genesis_share(Out& out, const NodeId& sender,
                                      const GenesisSignatureShare& gs) {
  if (!genesis_round_ || gs.block_hash != genesis_round_->hash)
    return drop("genesis share for unknown round");
  auto& round = *genesis_round_;
  StrandId submissive = epoch_blocks_.back().descending;
  StrandId dominant = epoch_blocks_.back().ascending;
  const auto& sub_cfg = strands_.at(submissive).active_config;
  const auto& dom_cfg = strands_.at(dominant).active_config;
  const auto& cfg = gs.dominant ? dom_cfg : sub_cfg;
  if (!verify_member_share(gs.share, cfg, gs.block_hash) ||
      !(gs.share.signer == sender))
    return drop("invalid genesis signature share");
  auto& bucket = gs.dominant ? round.dominant_shares : round.submissive_shares;
  bucket.emplace(gs.share.index, gs.share);

  std::uint32_t t_sub = majority_threshold(
      static_cast<std::uint32_t>(sub_cfg.ordered_members.size()));
  std::uint32_t t_dom = majority_threshold(
      static_cast<std::uint32_t>(dom_cfg.ordered_members.size()));

  // Step 3: the dominant strand approves once Step 2 is complete.
  if (round.submissive_shares.size() >= t_sub && !round.dominant_requested) {
    round.dominant_requested = true;
    if (participant_ && dom_cfg.contains(identity_)) {
      const auto* material = material_for(dom_cfg.ritual_id);
      if (material != nullptr) {
        GenesisSignatureShare mine;
        mine.epoch = gs.epoch;
        mine.dominant = true;
        mine.block_hash = round.hash;
        mine.share = crypto::sign_share(*material, identity_,
                                        chain::hash_span(round.hash));
        emit(out, MessageKind::GenesisSignatureShare, mine);
      }
    }
  }
  if (round.submissive_shares.size() >= t_sub &&
      round.dominant_shares.size() >= t_dom)
    accept_genesis(out);
}

void NodeEngine::accept_genesis(Out& out) {
  auto round = std::move(*genesis_round_);
  genesis_round_.reset();

  StrandId submissive = epoch_blocks_.back().descending;
  StrandId dominant = epoch_blocks_.back().ascending;
  const auto& sub_cfg = strands_.at(submissive).active_config;
  const auto& dom_cfg = strands_.at(dominant).active_config;

  chain::EpochGenesisBlock block = round.block;
  block.submissive_signature = aggregate_first_t(
      round.submissive_shares,
      majority_threshold(
          static_cast<std::uint32_t>(sub_cfg.ordered_members.size())));
  block.dominant_signature = aggregate_first_t(
      round.dominant_shares,
      majority_threshold(
          static_cast<std::uint32_t>(dom_cfg.ordered_members.size())));

  // The genesis data becomes the live and active network topology.
  step4_signing_config_ = dom_cfg;
  for (const auto& [s, m] : next_materials_) materials_[m.ritual_id] = m;
  for (auto& [s, st] : strands_) {
    st.active_config = next_configs_.at(s);
    change_phase(s, StrandPhase::Diverged);
  }
  current_members_ =
      std::set<NodeId>(new_membership_.begin(), new_membership_.end());
  active_partition_ = block.partition;
  last_genesis_cycle_ = static_cast<std::int64_t>(cycle_);
  genesis_blocks_.push_back(block);
  genesis_hashes_.push_back(round.hash);
  if (hooks_.on_genesis)
    hooks_.on_genesis(block, round.hash, cycle_, epoch_left_, epoch_joined_);

  // Steps 4-5: the reshuffled (newly ascending) strand's first cycle block,
  // proposed by the old dominant majority and countersigned by the genesis
  // configuration.
  step4_outstanding_ = true;
  step4_strand_ = submissive;
  if (i_lead(step4_signing_config_)) {
    auto& st = strands_.at(submissive);
    CycleProposal p;
    p.strand = submissive;
    p.height = st.tip_height + 1;
    p.parent_hash = st.tip_hash;
    p.tx_summary = routed_pending_txs(submissive);
    p.cycle = cycle_;
    p.first_of_epoch = true;
    emit(out, MessageKind::CycleProposal, p);
  }
  if (!draining_) drain_buffer(out);
}

}  // namespace unitychain::engine
