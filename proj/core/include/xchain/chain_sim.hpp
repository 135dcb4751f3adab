#pragma once

// A simulated proof-of-work chain: a block tree with a mempool, a canonical
// tip picked by the longest-chain rule and a ledger snapshot per block.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xchain/block.hpp"
#include "xchain/contracts.hpp"
#include "xchain/tx.hpp"

namespace xchain {

struct Block {
  BlockHeader header;
  std::vector<ChainTx> txs;
};

struct DroppedTx {
  Digest tx;
  std::string reason;
  std::uint64_t height = 0;
};

struct TxLocation {
  BlockId block;
  std::uint64_t height = 0;
  std::size_t index = 0;
};

/// Shared logical clock; Δ is the synchrony bound used by the protocols.
struct SimClock {
  Tick now = 0;
  Tick delta = 1;

  void advance_to(Tick t);
};

class SimChain {
 public:
  SimChain(ChainParams params, std::map<PublicKey, Amount> genesis_balances);

  const ChainParams& params() const { return params_; }
  const ChainId& id() const { return params_.chain_id; }

  /// Throws DuplicateTx when the tx is pending or already canonical.
  void submit_tx(const ChainTx& tx);

  /// Mines one block on the canonical tip with every valid pending tx.
  /// With probability fork_probability an empty competing sibling is mined
  /// on the same parent by a different miner.
  BlockId mine_block(Rng& rng, Tick now, bool allow_fork = true);

  /// Longest chain wins; equal heights go to the smaller digest.
  BlockId resolve_tip();

  /// Empty when the block is not canonical. Throws UnknownBlock.
  std::optional<std::uint64_t> confirmations(const BlockId& block) const;
  bool is_stable(const BlockId& block, std::uint32_t d) const;

  /// Adversarial branch of `branch_len` blocks on top of `at`. Invalid txs in
  /// `txs_per_block` are skipped. Returns the new block ids, lowest first.
  std::vector<BlockId> inject_fork(const BlockId& at, std::size_t branch_len,
                                   const std::vector<std::vector<ChainTx>>& txs_per_block, Tick now,
                                   const std::string& miner = "adversary");

  const BlockId& genesis() const { return canon_.front(); }
  const BlockId& tip() const { return canon_.back(); }
  std::uint64_t height() const { return canon_.size() - 1; }
  const std::vector<BlockId>& canonical() const { return canon_; }
  bool is_canonical(const BlockId& block) const;
  bool contains(const BlockId& block) const { return nodes_.count(block) != 0; }
  bool is_ancestor_or_self(const BlockId& ancestor, const BlockId& of) const;

  const Block& block(const BlockId& id) const;
  const LedgerState& state() const { return state_at(tip()); }
  const LedgerState& state_at(const BlockId& id) const;
  const std::vector<LogEntry>& logs_at(const BlockId& id) const;

  std::optional<TxLocation> locate_tx(const Digest& tx) const;  // canonical only
  bool in_any_block(const Digest& tx) const;

  std::vector<ChainTx> mempool() const;
  bool in_mempool(const Digest& tx) const;
  const std::vector<DroppedTx>& dropped() const { return dropped_; }
  std::optional<DroppedTx> drop_record(const Digest& tx) const;

  std::vector<BlockId> tips() const { return {tips_.begin(), tips_.end()}; }
  std::vector<BlockId> all_blocks() const;  // by height, then digest
  std::size_t block_count() const { return nodes_.size(); }
  std::size_t sibling_count() const { return siblings_; }

  /// Re-executes the canonical chain from genesis; must equal state().
  LedgerState replay_canonical() const;

 private:
  struct Node {
    Block block;
    std::shared_ptr<const LedgerState> state;
    std::vector<LogEntry> logs;
  };

  const Node& node(const BlockId& id) const;
  ApplyContext context_for(const BlockId& parent, std::uint64_t height, Tick tick) const;
  std::set<Digest> branch_txs(const BlockId& tip) const;
  BlockId build_and_add(const BlockId& parent, const std::vector<ChainTx>& candidates, Tick now,
                        const std::string& miner, bool record_drops);

  ChainParams params_;
  std::map<PublicKey, Amount> genesis_balances_;
  std::map<BlockId, std::shared_ptr<const Node>> nodes_;
  std::set<BlockId> tips_;
  std::vector<BlockId> canon_;
  std::map<BlockId, std::uint64_t> canon_index_;
  std::map<Digest, TxLocation> canon_txs_;
  std::vector<ChainTx> submitted_;
  std::set<Digest> submitted_ids_;
  std::vector<DroppedTx> dropped_;
  std::set<Digest> dropped_ids_;
  std::size_t siblings_ = 0;
};

}  // namespace xchain
