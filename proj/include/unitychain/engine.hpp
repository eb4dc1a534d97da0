#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "unitychain/chain.hpp"
#include "unitychain/crypto.hpp"
#include "unitychain/topology.hpp"

namespace unitychain::engine {

using chain::BlockHash;
using topo::NetworkConfiguration;
using topo::StrandId;

enum class StrandPhase : std::uint8_t {
  Diverged,
  EpochConverging,
  Reshuffling,
  DominantFullKeyspace,
  GenesisPending,
};

std::string phase_name(StrandPhase p);
bool legal_phase_transition(StrandPhase from, StrandPhase to);

struct Transaction {
  std::uint64_t key = 0;
  Digest32 payload{};
  std::uint64_t submitted_at = 0;  // tick
  std::uint64_t seq = 0;           // global submission order
};

// --- Protocol messages -----------------------------------------------------

struct CycleProposal {
  StrandId strand;
  std::uint64_t height = 0;
  BlockHash parent_hash;
  std::vector<Digest32> tx_summary;
  std::uint64_t cycle = 0;
  bool first_of_epoch = false;  // Step 4 block right after an Epoch Genesis
};

struct CycleSignatureShare {
  StrandId strand;
  std::uint64_t height = 0;
  BlockHash block_hash;
  bool genesis_cosign = false;  // Step 5 countersignature
  crypto::SignatureShare share;
};

struct EpochProposal {
  chain::EpochBlock block;  // signatures empty
  std::uint64_t cycle = 0;
};

struct EpochSignatureShare {
  std::uint64_t epoch = 0;
  bool descending = false;
  BlockHash block_hash;
  crypto::SignatureShare share;
};

struct GenesisProposal {
  chain::EpochGenesisBlock block;  // signatures empty
  std::uint64_t epoch = 0;
};

struct GenesisSignatureShare {
  std::uint64_t epoch = 0;
  bool dominant = false;
  BlockHash block_hash;
  crypto::SignatureShare share;
};

struct DkgDealingMsg {
  Digest32 ritual_id{};
  crypto::Dealing dealing;
};

struct DkgComplaintMsg {
  Digest32 ritual_id{};
  NodeId accused;
};

struct JoinRequestMsg {
  NodeId joiner;
};

struct LeaveNoticeMsg {
  NodeId leaver;
};

struct TxSubmit {
  Transaction tx;
};

enum class MessageKind : std::uint8_t {
  CycleProposal,
  CycleSignatureShare,
  EpochProposal,
  EpochSignatureShare,
  GenesisProposal,
  GenesisSignatureShare,
  DkgDealing,
  DkgComplaint,
  JoinRequest,
  LeaveNotice,
  TxSubmit,
};

struct ProtocolMessage {
  MessageKind kind;
  NodeId sender;
  std::variant<CycleProposal, CycleSignatureShare, EpochProposal,
               EpochSignatureShare, GenesisProposal, GenesisSignatureShare,
               DkgDealingMsg, DkgComplaintMsg, JoinRequestMsg, LeaveNoticeMsg,
               TxSubmit>
      payload;
};

struct TimerTick {
  enum class Kind : std::uint8_t { CycleStart, MidCycle, CycleEnd };
  Kind kind = Kind::CycleStart;
  std::uint64_t cycle = 0;
  std::uint64_t tick = 0;
};

// --- Observer hooks --------------------------------------------------------

struct EngineHooks {
  std::function<void(const chain::CycleBlock&, const NodeId& leader,
                     std::uint64_t cycle)>
      on_cycle_block;
  std::function<void(const chain::EpochBlock&, const BlockHash&,
                     std::uint64_t cycle)>
      on_epoch_block;
  std::function<void(const chain::EpochGenesisBlock&, const BlockHash&,
                     std::uint64_t cycle, const std::vector<NodeId>& left,
                     const std::vector<NodeId>& joined)>
      on_genesis;
  std::function<void(StrandId, StrandPhase, StrandPhase, std::uint64_t cycle)>
      on_phase_change;
  std::function<void(const Digest32& ritual_id, bool ok,
                     const std::vector<NodeId>& excluded, std::uint64_t cycle)>
      on_ritual;
  std::function<void(const NodeId& accuser, const NodeId& accused,
                     std::uint64_t cycle)>
      on_complaint;
  std::function<void(const std::string& reason)> on_drop;
};

// --- Engine ----------------------------------------------------------------

struct EngineConfig {
  chain::GenesisParams params;
  topo::KeyRangePartition diverged_partition;  // partition while diverged
  std::uint64_t master_seed = 0;
  std::uint64_t node_seed = 0;  // distinct per node, for DKG dealing draws
};

struct BootstrapState {
  chain::OriginBlock origin;
  BlockHash origin_hash;
  std::map<StrandId, NetworkConfiguration> initial_configs;
  std::vector<crypto::GroupKeyMaterial> materials;  // origin + per strand
};

/// Deterministic single-threaded state machine for one node. Engines interact
/// only through ProtocolMessages and TimerTicks delivered by the simulator;
/// every emitted message is a broadcast.
class NodeEngine {
 public:
  NodeEngine(NodeId identity, bool participant, EngineConfig config,
             std::shared_ptr<crypto::KeyRegistry> registry,
             const BootstrapState& bootstrap);

  /// Fork a synchronized engine as a freshly joining node (state snapshot;
  /// the clone signs as `identity` once admitted at an Epoch Genesis).
  NodeEngine fork_as(NodeId identity, std::uint64_t node_seed) const;

  void set_hooks(EngineHooks hooks) { hooks_ = std::move(hooks); }

  std::vector<ProtocolMessage> on_tick(const TimerTick& tick);
  std::vector<ProtocolMessage> handle_message(const ProtocolMessage& msg);

  // --- inspection ---
  const NodeId& identity() const { return identity_; }
  bool is_active_member() const;
  std::uint64_t current_cycle() const { return cycle_; }
  StrandPhase phase(StrandId s) const { return strands_.at(s).phase; }
  const std::vector<std::pair<StrandPhase, std::uint64_t>>& phase_history(
      StrandId s) const {
    return strands_.at(s).phase_history;
  }
  const topo::KeyRangePartition& active_partition() const {
    return active_partition_;
  }
  const NetworkConfiguration& active_config(StrandId s) const {
    return strands_.at(s).active_config;
  }
  std::uint64_t tip_height(StrandId s) const { return strands_.at(s).tip_height; }
  const BlockHash& tip_hash(StrandId s) const { return strands_.at(s).tip_hash; }
  const std::vector<BlockHash>& epoch_hashes() const { return epoch_hashes_; }
  const std::vector<BlockHash>& genesis_hashes() const {
    return genesis_hashes_;
  }
  const std::set<NodeId>& current_members() const { return current_members_; }
  std::size_t pending_tx_count() const { return pending_txs_.size(); }
  std::uint64_t finalized_tx_count() const { return finalized_tx_count_; }
  std::size_t epoch_count() const { return epoch_blocks_.size(); }
  std::size_t genesis_count() const { return genesis_blocks_.size(); }
  const std::vector<chain::CycleBlock>& strand_blocks(StrandId s) const {
    return strands_.at(s).blocks;
  }

 private:
  struct PendingBlock {
    CycleProposal proposal;
    BlockHash hash;
    std::map<std::uint32_t, crypto::SignatureShare> shares;
    std::map<std::uint32_t, crypto::SignatureShare> cosign_shares;
    std::optional<crypto::AggregateSignature> primary_agg;
    bool cosign_requested = false;
  };

  struct StrandState {
    StrandPhase phase = StrandPhase::Diverged;
    std::vector<std::pair<StrandPhase, std::uint64_t>> phase_history;
    NetworkConfiguration active_config;
    BlockHash tip_hash;
    std::uint64_t tip_height = 0;
    std::optional<PendingBlock> pending;
    std::vector<chain::CycleBlock> blocks;  // finalized, in height order
  };

  struct RitualState {
    Digest32 id{};
    StrandId strand;
    std::uint32_t threshold = 0;
    std::vector<NodeId> participants;  // sorted
    std::map<NodeId, crypto::Dealing> dealings;
    std::set<NodeId> excluded;
  };

  struct EpochRound {
    chain::EpochBlock block;
    BlockHash hash;
    std::uint64_t cycle = 0;
    std::map<std::uint32_t, crypto::SignatureShare> ascending_shares;
    std::map<std::uint32_t, crypto::SignatureShare> descending_shares;
    bool descending_requested = false;
  };

  struct GenesisRound {
    chain::EpochGenesisBlock block;
    BlockHash hash;
    std::map<std::uint32_t, crypto::SignatureShare> submissive_shares;
    std::map<std::uint32_t, crypto::SignatureShare> dominant_shares;
    bool dominant_requested = false;
  };

  using Out = std::vector<ProtocolMessage>;

  void change_phase(StrandId s, StrandPhase to);
  bool i_lead(const NetworkConfiguration& config) const;
  bool partition_grants(StrandId s) const;
  bool epoch_shuffles(std::uint64_t epoch_index) const;
  std::uint64_t next_epoch_cycle() const;
  StrandId next_ascending() const;
  const crypto::GroupKeyMaterial* material_for(const Digest32& ritual_id) const;
  std::vector<Digest32> routed_pending_txs(StrandId s) const;
  bool verify_member_share(const crypto::SignatureShare& share,
                           const NetworkConfiguration& config,
                           const BlockHash& message) const;

  void emit(Out& out, MessageKind kind,
            decltype(ProtocolMessage::payload) payload);
  void maybe_propose_cycle(Out& out, StrandId s);
  void handle_cycle_proposal(Out& out, const NodeId& sender,
                             const CycleProposal& p);
  void handle_cycle_share(Out& out, const NodeId& sender,
                          const CycleSignatureShare& cs);
  void try_finalize_cycle(Out& out, StrandId s);
  void accept_cycle_block(Out& out, StrandId s, chain::CycleBlock block,
                          const NodeId& leader);

  void start_epoch_round(Out& out);
  void handle_epoch_proposal(Out& out, const NodeId& sender,
                             const EpochProposal& p);
  void handle_epoch_share(Out& out, const NodeId& sender,
                          const EpochSignatureShare& es);
  void accept_epoch_block(Out& out);

  void begin_reshuffle(Out& out, std::uint64_t accept_cycle);
  void deal_rituals(Out& out);
  void finalize_reshuffle(Out& out);
  void handle_dkg_dealing(Out& out, const NodeId& sender,
                          const DkgDealingMsg& dm);
  void handle_dkg_complaint(Out& out, const NodeId& sender,
                            const DkgComplaintMsg& cm);

  void propose_genesis(Out& out);
  void handle_genesis_proposal(Out& out, const NodeId& sender,
                               const GenesisProposal& p);
  void handle_genesis_share(Out& out, const NodeId& sender,
                            const GenesisSignatureShare& gs);
  void accept_genesis(Out& out);

  void drop(const std::string& reason);

  // --- identity / environment ---
  NodeId identity_;
  bool participant_ = false;
  EngineConfig config_;
  std::shared_ptr<crypto::KeyRegistry> registry_;
  EngineHooks hooks_;
  std::uint64_t cycle_ = 0;

  // --- chain / topology state ---
  std::map<StrandId, StrandState> strands_;
  topo::KeyRangePartition active_partition_;
  std::set<NodeId> current_members_;
  std::map<Digest32, crypto::GroupKeyMaterial> materials_;

  // --- epoch state ---
  std::vector<chain::EpochBlock> epoch_blocks_;
  std::vector<chain::EpochGenesisBlock> genesis_blocks_;
  std::vector<BlockHash> epoch_hashes_;
  std::vector<BlockHash> genesis_hashes_;
  std::int64_t last_epoch_cycle_ = -1;
  std::int64_t last_genesis_cycle_ = -1;
  std::optional<StrandId> current_ascending_;  // dominant strand of the epoch
  std::optional<EpochRound> epoch_round_;
  std::optional<GenesisRound> genesis_round_;

  // --- reshuffle state ---
  std::set<NodeId> pending_joins_;
  std::set<NodeId> pending_leaves_;
  std::vector<NodeId> new_membership_;  // sorted
  std::map<StrandId, RitualState> rituals_;
  std::map<StrandId, NetworkConfiguration> next_configs_;
  std::map<StrandId, crypto::GroupKeyMaterial> next_materials_;
  std::uint32_t ritual_attempt_ = 0;
  std::uint64_t reshuffle_ready_cycle_ = 0;
  bool reshuffle_done_ = false;
  bool shuffling_epoch_ = false;
  std::vector<NodeId> epoch_left_;
  std::vector<NodeId> epoch_joined_;
  NetworkConfiguration step4_signing_config_;  // old dominant config
  bool step4_outstanding_ = false;
  StrandId step4_strand_;

  // --- transactions ---
  std::vector<Transaction> pending_txs_;  // submission order
  std::set<Digest32> pending_digests_;
  std::set<Digest32> finalized_digests_;
  std::uint64_t finalized_tx_count_ = 0;

  // Messages that arrived ahead of the state they apply to.
  struct Buffered {
    ProtocolMessage msg;
    std::uint64_t cycle = 0;
  };
  std::deque<Buffered> buffer_;
  bool draining_ = false;

  void drain_buffer(Out& out);
  bool dispatch(Out& out, const ProtocolMessage& msg);  // true = buffered
};

}  // namespace unitychain::engine
