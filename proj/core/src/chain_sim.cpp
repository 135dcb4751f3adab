#include "xchain/chain_sim.hpp"

#include <algorithm>

#include "xchain/error.hpp"

namespace xchain {

void SimClock::advance_to(Tick t) {
  if (t < now) throw Error(Errc::invalid_params, "clock cannot move backwards");
  now = t;
}

SimChain::SimChain(ChainParams params, std::map<PublicKey, Amount> genesis_balances)
    : params_(std::move(params)), genesis_balances_(std::move(genesis_balances)) {
  if (params_.fork_probability < 0.0 || params_.fork_probability > 1.0)
    throw Error(Errc::invalid_params, "fork probability outside [0, 1]");
  if (params_.block_interval <= 0) throw Error(Errc::invalid_params, "block interval must be positive");
  auto genesis = std::make_shared<Node>();
  genesis->block.header.payload = payload_digest({});
  genesis->block.header.miner = "genesis/" + params_.chain_id;
  solve_pow(genesis->block.header, params_.pow_difficulty);
  genesis->state = std::make_shared<const LedgerState>(genesis_balances_);
  const BlockId id = genesis->block.header.digest();
  nodes_.emplace(id, genesis);
  tips_.insert(id);
  canon_.push_back(id);
  canon_index_.emplace(id, 0);
}

const SimChain::Node& SimChain::node(const BlockId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(Errc::unknown_block, "unknown block " + id.hex().substr(0, 12));
  return *it->second;
}

const Block& SimChain::block(const BlockId& id) const { return node(id).block; }
const LedgerState& SimChain::state_at(const BlockId& id) const { return *node(id).state; }
const std::vector<LogEntry>& SimChain::logs_at(const BlockId& id) const { return node(id).logs; }

bool SimChain::is_canonical(const BlockId& block) const { return canon_index_.count(block) != 0; }

bool SimChain::is_ancestor_or_self(const BlockId& ancestor, const BlockId& of) const {
  auto a = nodes_.find(ancestor);
  if (a == nodes_.end()) return false;
  const std::uint64_t target = a->second->block.header.height;
  BlockId cur = of;
  while (true) {
    const Node& n = node(cur);
    if (n.block.header.height == target) return cur == ancestor;
    if (n.block.header.height < target) return false;
    if (is_canonical(cur)) return is_canonical(ancestor);
    cur = n.block.header.prev;
  }
}

void SimChain::submit_tx(const ChainTx& tx) {
  if (canon_txs_.count(tx.id())) throw Error(Errc::duplicate_tx, "tx already on the canonical chain");
  if (submitted_ids_.count(tx.id()) && !dropped_ids_.count(tx.id()))
    throw Error(Errc::duplicate_tx, "tx already pending");
  if (dropped_ids_.erase(tx.id()) == 0) {
    submitted_.push_back(tx);
    submitted_ids_.insert(tx.id());
  }
}

std::vector<ChainTx> SimChain::mempool() const {
  std::vector<ChainTx> out;
  for (const auto& tx : submitted_)
    if (!canon_txs_.count(tx.id()) && !dropped_ids_.count(tx.id())) out.push_back(tx);
  return out;
}

bool SimChain::in_mempool(const Digest& tx) const {
  return submitted_ids_.count(tx) && !canon_txs_.count(tx) && !dropped_ids_.count(tx);
}

std::optional<DroppedTx> SimChain::drop_record(const Digest& tx) const {
  if (!dropped_ids_.count(tx)) return std::nullopt;
  for (auto it = dropped_.rbegin(); it != dropped_.rend(); ++it)
    if (it->tx == tx) return *it;
  return std::nullopt;
}

std::optional<TxLocation> SimChain::locate_tx(const Digest& tx) const {
  auto it = canon_txs_.find(tx);
  if (it == canon_txs_.end()) return std::nullopt;
  return it->second;
}

bool SimChain::in_any_block(const Digest& tx) const {
  if (canon_txs_.count(tx)) return true;
  for (const auto& [_, n] : nodes_)
    for (const auto& t : n->block.txs)
      if (t.id() == tx) return true;
  return false;
}

ApplyContext SimChain::context_for(const BlockId& parent, std::uint64_t height, Tick tick) const {
  ApplyContext ctx;
  ctx.chain_id = params_.chain_id;
  ctx.tick = tick;
  ctx.height = height;
  ctx.pow_difficulty = params_.pow_difficulty;
  ctx.in_history = [this, parent](const Digest& d) { return is_ancestor_or_self(d, parent); };
  return ctx;
}

// Tx ids on the non-canonical stretch of the branch ending at `tip`.
std::set<Digest> SimChain::branch_txs(const BlockId& tip) const {
  std::set<Digest> out;
  BlockId cur = tip;
  while (!is_canonical(cur)) {
    const Node& n = node(cur);
    for (const auto& t : n.block.txs) out.insert(t.id());
    cur = n.block.header.prev;
  }
  return out;
}

BlockId SimChain::build_and_add(const BlockId& parent, const std::vector<ChainTx>& candidates, Tick now,
                                const std::string& miner, bool record_drops) {
  const Node& p = node(parent);
  auto n = std::make_shared<Node>();
  BlockHeader& h = n->block.header;
  h.height = p.block.header.height + 1;
  h.prev = parent;
  h.tick = now;
  h.miner = miner;

  // Canonical meeting point of the parent's branch; txs at or below it are
  // found through the canonical index.
  BlockId meet = parent;
  while (!is_canonical(meet)) meet = node(meet).block.header.prev;
  const std::uint64_t meet_height = node(meet).block.header.height;
  std::set<Digest> seen = branch_txs(parent);
  auto in_branch = [&](const Digest& id) {
    if (seen.count(id)) return true;
    auto it = canon_txs_.find(id);
    return it != canon_txs_.end() && it->second.height <= meet_height;
  };

  LedgerState state = *p.state;
  const ApplyContext ctx = context_for(parent, h.height, now);
  apply_timelocks(state, ctx, n->logs);
  for (const auto& tx : candidates) {
    std::optional<std::string> reason;
    if (in_branch(tx.id()))
      reason = "DuplicateTx: already included on this branch";
    else
      reason = apply_tx(state, tx, ctx, n->logs);
    if (reason) {
      if (record_drops) {
        dropped_.push_back({tx.id(), *reason, h.height});
        dropped_ids_.insert(tx.id());
      }
      continue;
    }
    seen.insert(tx.id());
    n->block.txs.push_back(tx);
  }
  h.payload = payload_digest(n->block.txs);
  solve_pow(h, params_.pow_difficulty);
  n->state = std::make_shared<const LedgerState>(std::move(state));

  const BlockId id = h.digest();
  nodes_.emplace(id, n);
  tips_.erase(parent);
  tips_.insert(id);
  return id;
}

BlockId SimChain::mine_block(Rng& rng, Tick now, bool allow_fork) {
  const BlockId parent = tip();
  const std::string miner = "miner/" + params_.chain_id;
  const BlockId main = build_and_add(parent, mempool(), now, miner, true);
  // Drawn unconditionally so the random stream does not depend on allow_fork.
  const bool fork = rng.bernoulli(params_.fork_probability);
  if (allow_fork && fork) {
    build_and_add(parent, {}, now, miner + "/rival", false);
    ++siblings_;
  }
  resolve_tip();
  return main;
}

BlockId SimChain::resolve_tip() {
  BlockId best = *tips_.begin();
  std::uint64_t best_height = node(best).block.header.height;
  for (const auto& t : tips_) {
    const std::uint64_t h = node(t).block.header.height;
    if (h > best_height || (h == best_height && t < best)) {
      best = t;
      best_height = h;
    }
  }
  if (best == tip()) return best;

  std::vector<BlockId> path;
  BlockId cur = best;
  while (!is_canonical(cur)) {
    path.push_back(cur);
    cur = node(cur).block.header.prev;
  }
  const std::uint64_t keep = canon_index_.at(cur) + 1;
  while (canon_.size() > keep) {
    const BlockId gone = canon_.back();
    for (const auto& tx : node(gone).block.txs) canon_txs_.erase(tx.id());
    canon_index_.erase(gone);
    canon_.pop_back();
  }
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    const Node& n = node(*it);
    canon_index_.emplace(*it, canon_.size());
    for (std::size_t i = 0; i < n.block.txs.size(); ++i)
      canon_txs_[n.block.txs[i].id()] = TxLocation{*it, n.block.header.height, i};
    canon_.push_back(*it);
  }
  return best;
}

std::optional<std::uint64_t> SimChain::confirmations(const BlockId& block) const {
  const Node& n = node(block);
  if (!is_canonical(block)) return std::nullopt;
  return height() - n.block.header.height;
}

bool SimChain::is_stable(const BlockId& block, std::uint32_t d) const {
  auto c = confirmations(block);
  return c && *c >= d;
}

std::vector<BlockId> SimChain::inject_fork(const BlockId& at, std::size_t branch_len,
                                           const std::vector<std::vector<ChainTx>>& txs_per_block, Tick now,
                                           const std::string& miner) {
  node(at);
  std::vector<BlockId> out;
  BlockId parent = at;
  for (std::size_t i = 0; i < branch_len; ++i) {
    static const std::vector<ChainTx> none;
    const auto& txs = i < txs_per_block.size() ? txs_per_block[i] : none;
    parent = build_and_add(parent, txs, now, miner, false);
    out.push_back(parent);
  }
  resolve_tip();
  return out;
}

std::vector<BlockId> SimChain::all_blocks() const {
  std::vector<BlockId> out;
  for (const auto& [id, _] : nodes_) out.push_back(id);
  std::stable_sort(out.begin(), out.end(), [this](const BlockId& a, const BlockId& b) {
    return node(a).block.header.height < node(b).block.header.height;
  });
  return out;
}

LedgerState SimChain::replay_canonical() const {
  LedgerState state(genesis_balances_);
  for (std::size_t i = 1; i < canon_.size(); ++i) {
    const Block& b = block(canon_[i]);
    std::vector<LogEntry> log;
    const ApplyContext ctx = context_for(b.header.prev, b.header.height, b.header.tick);
    apply_timelocks(state, ctx, log);
    for (const auto& tx : b.txs)
      if (auto reason = apply_tx(state, tx, ctx, log))
        throw Error(Errc::invalid_tx, "canonical replay rejected a tx: " + *reason);
  }
  return state;
}

}  // namespace xchain
