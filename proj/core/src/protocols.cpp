#include "xchain/protocols.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "xchain/error.hpp"

namespace xchain {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::ac3tw: return "AC3TW";
    case Protocol::ac3wn: return "AC3WN";
    case Protocol::baseline: return "Baseline";
  }
  return "?";
}

std::optional<Protocol> parse_protocol(std::string_view text) {
  if (text == "AC3TW") return Protocol::ac3tw;
  if (text == "AC3WN") return Protocol::ac3wn;
  if (text == "Baseline") return Protocol::baseline;
  return std::nullopt;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::all_redeemed: return "AllRedeemed";
    case Verdict::all_refunded: return "AllRefunded";
    case Verdict::atomicity_violated: return "AtomicityViolated";
    case Verdict::stuck: return "Stuck";
  }
  return "?";
}

Tick Scenario::effective_delta() const {
  if (delta > 0) return delta;
  Tick out = 1;
  for (const auto& c : chains) out = std::max<Tick>(out, c.block_interval * (static_cast<Tick>(d) + 1));
  return out;
}

Tick Scenario::effective_horizon() const { return horizon > 0 ? horizon : 50 * effective_delta(); }

const ChainParams& Scenario::chain(const ChainId& id) const {
  for (const auto& c : chains)
    if (c.chain_id == id) return c;
  throw Error(Errc::scenario_invalid, "unknown chain " + id);
}

Verdict compute_verdict(const std::vector<std::optional<ContractState>>& edges) {
  bool rd = false, rf = false, pending = false, undeployed = false;
  for (const auto& s : edges) {
    if (!s) undeployed = true;
    else if (*s == ContractState::redeemed) rd = true;
    else if (*s == ContractState::refunded) rf = true;
    else pending = true;
  }
  if (rd && rf) return Verdict::atomicity_violated;
  if (rd && !pending && !undeployed) return Verdict::all_redeemed;
  if (!rd && !pending) return Verdict::all_refunded;
  return Verdict::stuck;
}

std::optional<Tick> RunOutcome::latency_ticks() const {
  if (!t_end) return std::nullopt;
  return *t_end - t_start;
}

std::optional<Rational> RunOutcome::latency_deltas() const {
  auto t = latency_ticks();
  if (!t) return std::nullopt;
  return Rational(*t, delta);
}

std::optional<Tick> RunOutcome::phase(std::string_view name) const {
  for (const auto& p : phases)
    if (p.name == name) return p.tick;
  return std::nullopt;
}

TrentStore::TrentStore(KeyPair keys) : keys_(std::move(keys)) {}

void TrentStore::register_graph(const Multisignature& ms, const SwapGraph& graph,
                                const std::map<ParticipantId, PublicKey>& pks) {
  if (kv_.count(ms.graph_digest)) throw Error(Errc::scenario_invalid, "graph already registered");
  if (!verify_multisig(ms, graph, pks)) throw Error(Errc::scenario_invalid, "multisignature does not verify");
  kv_.emplace(ms.graph_digest, Entry{});
}

std::optional<Signature> TrentStore::request_redeem(const Multisignature& ms, bool contracts_verified) {
  auto it = kv_.find(ms.graph_digest);
  if (it == kv_.end()) return std::nullopt;
  if (it->second.decision == Decision::redeem) return it->second.sig;
  if (it->second.decision == Decision::refund || !contracts_verified) return std::nullopt;
  it->second = Entry{Decision::redeem, sign(keys_.sk, trusted_witness_message(ms, WitnessTag::redeem))};
  ++issued_;
  return it->second.sig;
}

std::optional<Signature> TrentStore::request_refund(const Multisignature& ms) {
  auto it = kv_.find(ms.graph_digest);
  if (it == kv_.end()) return std::nullopt;
  if (it->second.decision == Decision::refund) return it->second.sig;
  if (it->second.decision == Decision::redeem) return std::nullopt;
  it->second = Entry{Decision::refund, sign(keys_.sk, trusted_witness_message(ms, WitnessTag::refund))};
  ++issued_;
  return it->second.sig;
}

TrentStore::Decision TrentStore::decision(const Digest& graph_digest) const {
  auto it = kv_.find(graph_digest);
  return it == kv_.end() ? Decision::none : it->second.decision;
}

std::vector<Participant> make_participants(const SwapGraph& graph, const std::vector<Fault>& faults) {
  std::vector<Participant> out;
  for (const auto& v : graph.vertices()) {
    Behavior b = Honest{};
    for (const auto& f : faults)
      if (f.participant == v) b = f.behavior;
    out.push_back(Participant::from_id(v, b));
  }
  for (const auto& f : faults)
    if (!graph.contains(f.participant))
      throw Error(Errc::scenario_invalid, "fault names unknown participant " + f.participant);
  return out;
}

std::map<ParticipantId, PublicKey> participant_keys(const std::vector<Participant>& ps) {
  std::map<ParticipantId, PublicKey> out;
  for (const auto& p : ps) out.emplace(p.id, p.pk());
  return out;
}

ChainSet make_chains(const Scenario& sc, const std::vector<Participant>& ps, Rng& rng) {
  for (const auto& e : sc.graph.edges()) sc.chain(e.chain);
  if (sc.witness_chain) sc.chain(*sc.witness_chain);
  std::map<ParticipantId, PublicKey> pks = participant_keys(ps);
  ChainSet out;
  for (const auto& params : sc.chains) {
    std::map<PublicKey, Amount> genesis;
    if (auto it = sc.balances.find(params.chain_id); it != sc.balances.end()) {
      for (const auto& [who, amount] : it->second) {
        auto pk = pks.find(who);
        if (pk == pks.end()) throw Error(Errc::scenario_invalid, "balance for unknown participant " + who);
        genesis[pk->second] += amount;
      }
    } else {
      for (const auto& e : sc.graph.edges())
        if (e.chain == params.chain_id) genesis[pks.at(e.from)] += e.amount;
    }
    auto [it, fresh] = out.emplace(params.chain_id, SimChain(params, std::move(genesis)));
    if (!fresh) throw Error(Errc::scenario_invalid, "duplicate chain " + params.chain_id);
    for (std::uint32_t i = 0; i < sc.d; ++i) it->second.mine_block(rng, 0, false);
  }
  return out;
}

std::shared_ptr<const WitnessRegistration> make_registration(const SwapGraph& graph,
                                                              const std::vector<Participant>& ps,
                                                              const ChainSet& chains, std::uint32_t d) {
  auto reg = std::make_shared<WitnessRegistration>();
  reg->graph = graph;
  reg->pks = participant_keys(ps);
  reg->ms = multisign(graph, ps);
  reg->depth = d;
  for (const auto& e : graph.edges())
    if (!reg->anchors.count(e.chain)) reg->anchors.emplace(e.chain, record_anchor(chains.at(e.chain), d));
  return reg;
}

SwapContractArgs witness_ref_args(const PublicKey& recipient, const ChainId& witness_chain,
                                  const Digest& witness_contract, std::uint32_t d, const AnchorHeader& anchor) {
  const WitnessRef ref{witness_chain, witness_contract, d, anchor};
  return SwapContractArgs{recipient, ref, ref, std::nullopt};
}

SwapContractArgs trusted_args(const PublicKey& recipient, const Multisignature& ms, const PublicKey& trent) {
  const TrustedWitness tw{ms, trent};
  return SwapContractArgs{recipient, tw, tw, std::nullopt};
}

std::shared_ptr<const EvidenceBundle> build_bundle(const WitnessRegistration& reg, const ChainSet& chains,
                                                    const std::vector<Digest>& deploy_txs) {
  const auto& edges = reg.graph.edges();
  if (deploy_txs.size() != edges.size()) throw Error(Errc::invalid_params, "one deploy tx per edge required");
  auto bundle = std::make_shared<EvidenceBundle>();
  for (std::size_t i = 0; i < edges.size(); ++i)
    bundle->per_edge.push_back(
        build_evidence(chains.at(edges[i].chain), reg.anchors.at(edges[i].chain), deploy_txs[i], reg.depth));
  return bundle;
}

bool trusted_contracts_deployed(const SwapGraph& graph, const std::map<ParticipantId, PublicKey>& pks,
                                const Multisignature& ms, const PublicKey& trent, const ChainSet& chains,
                                const std::vector<std::optional<Digest>>& deploy_txs, std::uint32_t d) {
  const auto& edges = graph.edges();
  if (deploy_txs.size() != edges.size()) return false;
  const CommitmentScheme want = TrustedWitness{ms, trent};
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!deploy_txs[i]) return false;
    const SimChain& chain = chains.at(edges[i].chain);
    auto loc = chain.locate_tx(*deploy_txs[i]);
    if (!loc || !chain.is_stable(loc->block, d)) return false;
    const auto& tx = chain.block(loc->block).txs[loc->index];
    const auto* deploy = std::get_if<DeployTx>(&tx.body());
    const auto* args = deploy ? std::get_if<SwapContractArgs>(&deploy->args) : nullptr;
    if (!args || deploy->msg.sender != pks.at(edges[i].from) || args->recipient != pks.at(edges[i].to) ||
        deploy->msg.value != edges[i].amount || args->rd != want || args->rf != want || args->expiry)
      return false;
  }
  return true;
}

BaselinePlan plan_baseline(const SwapGraph& graph, Tick delta) {
  const auto cls = classify(graph);
  if (cls.kind != GraphClass::leader_acyclic)
    throw Error(Errc::baseline_inapplicable, std::string(to_string(cls.kind)));
  BaselinePlan plan;
  plan.leader = cls.leaders.front();
  std::map<ParticipantId, std::uint32_t> vertex_round;
  std::function<std::uint32_t(const ParticipantId&)> round_of = [&](const ParticipantId& v) -> std::uint32_t {
    if (v == plan.leader) return 1;
    if (auto it = vertex_round.find(v); it != vertex_round.end()) return it->second;
    std::uint32_t r = 1;
    for (const auto& e : graph.edges())
      if (e.to == v) r = std::max(r, round_of(e.from) + 1);
    vertex_round[v] = r;
    return r;
  };
  for (const auto& e : graph.edges()) {
    plan.round.push_back(round_of(e.from));
    plan.rounds = std::max(plan.rounds, plan.round.back());
  }
  for (auto r : plan.round) plan.expiry.push_back(static_cast<Tick>(2 * plan.rounds - r + 1) * delta);
  return plan;
}

std::map<ChainId, std::map<ParticipantId, Amount>> participant_balances(const ChainSet& chains,
                                                                         const std::vector<Participant>& ps) {
  std::map<ChainId, std::map<ParticipantId, Amount>> out;
  for (const auto& [id, chain] : chains)
    for (const auto& p : ps) out[id][p.id] = chain.state().balance(p.pk());
  return out;
}

std::map<ChainId, FeeCount> count_fees(const ChainSet& chains) {
  std::map<ChainId, FeeCount> out;
  for (const auto& [id, chain] : chains) {
    FeeCount& f = out[id];
    for (const auto& b : chain.canonical())
      for (const auto& tx : chain.block(b).txs) {
        if (tx.kind() == TxKind::contract_deploy) ++f.deploys;
        if (tx.kind() == TxKind::contract_call) ++f.calls;
      }
  }
  return out;
}

namespace {

int step_rank(Step s) { return s == Step::refund ? static_cast<int>(Step::redeem) : static_cast<int>(s); }

std::string short_hex(const Digest& d) { return d.hex().substr(0, 12); }

std::string edge_label(const SwapEdge& e) {
  return e.from + "->" + e.to + " " + std::to_string(e.amount) + e.unit + "@" + e.chain;
}

struct LogHit {
  BlockId block;
  LogEntry entry;
};

// First canonical log entry touching `contract` with one of the given kinds.
std::optional<LogHit> find_log(const SimChain& chain, const Digest& contract, std::initializer_list<LogKind> kinds) {
  for (const auto& b : chain.canonical())
    for (const auto& l : chain.logs_at(b))
      if (l.contract == contract && std::find(kinds.begin(), kinds.end(), l.kind) != kinds.end())
        return LogHit{b, l};
  return std::nullopt;
}

class Engine {
 public:
  Engine(const Scenario& sc, std::uint64_t seed)
      : sc_(sc),
        rng_(seed),
        ps_(make_participants(sc.graph, sc.faults)),
        chains_(make_chains(sc, ps_, rng_)),
        delta_(sc.effective_delta()),
        deploy_tx_(sc.graph.edges().size()) {
    out_.protocol = sc.protocol;
    out_.seed = seed;
    out_.delta = delta_;
    for (std::size_t i = 0; i < ps_.size(); ++i) index_[ps_[i].id] = i;
  }
  virtual ~Engine() = default;

  RunOutcome run() {
    const Tick horizon = sc_.effective_horizon();
    for (now_ = 0;; ++now_) {
      if (now_ > 0)
        for (auto& [id, chain] : chains_)
          if (now_ % chain.params().block_interval == 0) chain.mine_block(rng_, now_);
      after_mining();
      // A tip seen at the end of an earlier tick that left the canonical chain.
      for (const auto& [id, chain] : chains_) {
        auto [it, fresh] = seen_tip_.try_emplace(id, chain.tip());
        if (!fresh && !chain.is_canonical(it->second)) ++out_.reorgs;
        it->second = chain.tip();
      }
      if (now_ % delta_ == 0) {
        act();
        if (finished()) {
          out_.t_end = now_;
          break;
        }
      }
      if (now_ >= horizon) break;
    }
    finalize();
    out_.chains = std::make_shared<const ChainSet>(std::move(chains_));
    return std::move(out_);
  }

 protected:
  virtual void act() = 0;
  virtual bool finished() = 0;
  virtual void after_mining() {}
  virtual std::optional<WitnessState> witness_state() const { return std::nullopt; }
  virtual bool witness_converged() const { return false; }
  virtual std::optional<Tick> expiry_of(std::size_t) const { return std::nullopt; }

  const std::vector<SwapEdge>& edges() const { return sc_.graph.edges(); }
  const Participant& participant(const ParticipantId& id) const { return ps_[index_.at(id)]; }
  SimChain& chain(const ChainId& id) { return chains_.at(id); }
  const SimChain& chain(const ChainId& id) const { return chains_.at(id); }
  std::uint64_t nonce() { return ++nonce_; }

  bool active(const Participant& p, Step step) const {
    return std::visit(
        [&](const auto& b) {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, CrashAt>)
            return step_rank(step) < step_rank(b.step) || (b.recover_tick && now_ >= *b.recover_tick);
          else if constexpr (std::is_same_v<B, DeclinePublish>)
            return step != Step::deploy;
          else
            return true;
        },
        p.behavior);
  }

  bool publishes(const Participant& p) const {
    return !std::holds_alternative<DeclinePublish>(p.behavior) && active(p, Step::deploy);
  }

  const Participant* first_active(Step step) const {
    for (const auto& p : ps_)
      if (active(p, step)) return &p;
    return nullptr;
  }

  std::vector<const Participant*> coalition() const {
    std::vector<const Participant*> out;
    for (const auto& p : ps_)
      if (std::holds_alternative<Coalition>(p.behavior) && active(p, Step::authorize)) out.push_back(&p);
    return out;
  }

  void trace(const std::string& actor, const std::string& event, const std::string& detail) {
    out_.trace.push_back({now_, actor, event, detail});
  }

  void submit(const ChainId& chain_id, const ChainTx& tx, const std::string& actor, const std::string& what) {
    chain(chain_id).submit_tx(tx);
    trace(actor, "submit", what + " on " + chain_id + " tx " + short_hex(tx.id()));
  }

  bool live(const ChainId& chain_id, const std::optional<Digest>& tx) const {
    if (!tx) return false;
    const SimChain& c = chain(chain_id);
    return c.in_mempool(*tx) || c.locate_tx(*tx).has_value();
  }

  // Intents remember the last tx submitted for some purpose so an actor does
  // not resubmit while it is still pending or included.
  bool intent_live(const std::string& key) const {
    auto it = intents_.find(key);
    return it != intents_.end() && live(it->second.first, it->second.second);
  }
  void set_intent(const std::string& key, const ChainId& chain_id, const Digest& tx) {
    intents_[key] = {chain_id, tx};
  }

  std::optional<TxLocation> stable_tx(const ChainId& chain_id, const std::optional<Digest>& tx) const {
    if (!tx) return std::nullopt;
    const SimChain& c = chain(chain_id);
    auto loc = c.locate_tx(*tx);
    if (!loc || !c.is_stable(loc->block, sc_.d)) return std::nullopt;
    return loc;
  }

  std::optional<Digest> contract_of(std::size_t edge) const {
    if (!deploy_tx_[edge] || !chain(edges()[edge].chain).locate_tx(*deploy_tx_[edge])) return std::nullopt;
    return contract_id_for(*deploy_tx_[edge]);
  }

  const SwapContract* contract_state(std::size_t edge) const {
    auto id = contract_of(edge);
    return id ? chain(edges()[edge].chain).state().swap(*id) : nullptr;
  }

  bool all_deploys_stable() const {
    for (std::size_t i = 0; i < edges().size(); ++i)
      if (!stable_tx(edges()[i].chain, deploy_tx_[i])) return false;
    return true;
  }

  // Deployed contract is terminal and its terminal block is d-deep.
  bool settled(std::size_t edge) const {
    auto id = contract_of(edge);
    if (!id) return false;
    const SimChain& c = chain(edges()[edge].chain);
    auto hit = find_log(c, *id, {LogKind::redeemed, LogKind::refunded, LogKind::timelock_refund});
    return hit && c.is_stable(hit->block, sc_.d);
  }

  bool deployed_all_settled() const {
    for (std::size_t i = 0; i < edges().size(); ++i) {
      if (contract_of(i) && !settled(i)) return false;
      if (!contract_of(i) && live(edges()[i].chain, deploy_tx_[i])) return false;
    }
    return true;
  }

  void mark(const std::string& phase) {
    if (!out_.phase(phase)) out_.phases.push_back({phase, now_});
  }

  void finalize() {
    std::map<std::pair<ChainId, Digest>, std::size_t> by_contract;
    std::vector<std::optional<ContractState>> states;
    for (std::size_t i = 0; i < edges().size(); ++i) {
      EdgeOutcome eo{edges()[i], contract_of(i), std::nullopt, expiry_of(i)};
      if (const auto* c = contract_state(i)) eo.state = c->state;
      if (eo.contract) by_contract[{edges()[i].chain, *eo.contract}] = i;
      states.push_back(eo.state);
      out_.edges.push_back(std::move(eo));
    }
    out_.verdict = compute_verdict(states);
    std::string detail;
    for (const auto& eo : out_.edges) {
      if (!detail.empty()) detail += ", ";
      detail += edge_label(eo.edge) + ":" + (eo.state ? std::string(to_string(*eo.state)) : "undeployed");
    }
    out_.verdict_detail = detail;
    out_.witness_state = witness_state();
    out_.witness_converged = witness_converged();
    out_.balances = participant_balances(chains_, ps_);
    out_.fees = count_fees(chains_);

    for (const auto& [id, c] : chains_)
      for (std::size_t h = 1; h < c.canonical().size(); ++h) {
        const BlockId& b = c.canonical()[h];
        const Tick tick = c.block(b).header.tick;
        if (tick == 0) continue;
        for (const auto& l : c.logs_at(b)) {
          if (l.kind == LogKind::transfer) continue;
          std::string detail = "contract " + short_hex(l.contract) + " block " + std::to_string(h);
          if (auto it = by_contract.find({id, l.contract}); it != by_contract.end()) {
            detail += " edge " + edge_label(edges()[it->second]);
            if (auto e = expiry_of(it->second); e && l.kind == LogKind::timelock_refund)
              detail += " expiry " + std::to_string(*e);
          }
          out_.trace.push_back({tick, "chain:" + id, std::string(to_string(l.kind)), detail});
        }
      }
    std::stable_sort(out_.trace.begin(), out_.trace.end(),
                     [](const TraceEvent& a, const TraceEvent& b) { return a.tick < b.tick; });
  }

  const Scenario& sc_;
  Rng rng_;
  std::vector<Participant> ps_;
  ChainSet chains_;
  Tick delta_;
  Tick now_ = 0;
  RunOutcome out_;
  std::vector<std::optional<Digest>> deploy_tx_;

 private:
  std::map<ParticipantId, std::size_t> index_;
  std::map<ChainId, BlockId> seen_tip_;
  std::map<std::string, std::pair<ChainId, Digest>> intents_;
  std::uint64_t nonce_ = 0;
};

class Ac3wnEngine final : public Engine {
 public:
  Ac3wnEngine(const Scenario& sc, std::uint64_t seed) : Engine(sc, seed) {
    if (!sc.witness_chain) throw Error(Errc::scenario_invalid, "AC3WN needs a witness chain");
    wchain_ = *sc.witness_chain;
    if (sc.adversary) {
      const std::uint32_t top = sc.d > 1 ? sc.d - 1 : 1;
      adv_conf_ = sc.adversary->at_confirmations ? *sc.adversary->at_confirmations
                                                 : static_cast<std::uint32_t>(rng_.below(top));
      adv_len_ = sc.adversary->branch_len ? *sc.adversary->branch_len
                                          : 1 + static_cast<std::uint32_t>(rng_.below(top));
    }
  }

 protected:
  void act() override {
    SimChain& w = chain(wchain_);
    if (!reg_) {
      reg_ = make_registration(sc_.graph, ps_, chains_, sc_.d);
      trace("all", "multisign", "graph " + short_hex(sc_.graph.digest()));
    }
    if (!sc_w_tx_) {
      const Participant* p = first_active(Step::deploy);
      if (!p) return;
      const ChainTx tx = make_witness_deploy(wchain_, p->keys, reg_, nonce());
      sc_w_tx_ = tx.id();
      sc_w_ = contract_id_for(tx.id());
      submit(wchain_, tx, p->id, "deploy witness contract " + short_hex(sc_w_));
    }
    auto w_loc = stable_tx(wchain_, sc_w_tx_);
    if (!w_loc) return;
    mark("witness_deployed");
    if (!t_w_) t_w_ = now_;
    anchor_ = anchor_at(w, w_loc->block);

    const auto decision = decision_hit();
    if (!decision) {
      for (std::size_t i = 0; i < edges().size(); ++i) {
        const auto& e = edges()[i];
        const Participant& s = participant(e.from);
        if (live(e.chain, deploy_tx_[i]) || !publishes(s)) continue;
        const ChainTx tx = make_swap_deploy(
            e.chain, s.keys, e.amount,
            witness_ref_args(participant(e.to).pk(), wchain_, sc_w_, sc_.d, *anchor_), nonce());
        deploy_tx_[i] = tx.id();
        submit(e.chain, tx, s.id, "deploy " + edge_label(e));
      }
    }
    const bool deployed = all_deploys_stable();
    if (deployed) mark("contracts_deployed");

    if (!decision) {
      if (deployed) {
        for (const Participant* p : coalition()) request_refund(*p, "coalition/" + p->id);
        const Participant* p = first_active(Step::authorize);
        if (p && !intent_live("authorize_redeem")) {
          std::vector<Digest> txs;
          for (const auto& t : deploy_tx_) txs.push_back(*t);
          const ChainTx tx = make_call(sc_w_, CallFn::authorize_redeem, build_bundle(*reg_, chains_, txs), nonce());
          set_intent("authorize_redeem", wchain_, tx.id());
          submit(wchain_, tx, p->id, "authorize redeem");
        }
      } else if (now_ >= *t_w_ + static_cast<Tick>(sc_.refund_timeout_deltas) * delta_) {
        if (const Participant* p = first_active(Step::authorize)) request_refund(*p, "authorize_refund");
      }
      return;
    }
    if (!w.is_stable(decision->block, sc_.d)) return;
    mark("decision");

    const bool redeem = decision->entry.kind == LogKind::authorized_redeem;
    for (std::size_t i = 0; i < edges().size(); ++i) {
      const auto* c = contract_state(i);
      if (!c || c->state != ContractState::published) continue;
      const auto& e = edges()[i];
      const Participant& p = participant(redeem ? e.to : e.from);
      const std::string key = "settle/" + std::to_string(i);
      if (!active(p, redeem ? Step::redeem : Step::refund) || intent_live(key)) continue;
      auto ev = std::make_shared<Evidence>(build_evidence(w, *anchor_, decision->entry.tx, sc_.d));
      const ChainTx tx = make_call(*contract_of(i), redeem ? CallFn::redeem : CallFn::refund, ev, nonce());
      set_intent(key, e.chain, tx.id());
      submit(e.chain, tx, p.id, std::string(redeem ? "redeem " : "refund ") + edge_label(e));
    }
    if (deployed_all_settled()) mark("settled");
  }

  bool finished() override {
    auto decision = decision_hit();
    return decision && chain(wchain_).is_stable(decision->block, sc_.d) && deployed_all_settled();
  }

  void after_mining() override {
    if (!sc_.adversary || adv_fired_ || !sc_w_tx_) return;
    SimChain& c = chain(sc_.adversary->chain);
    std::optional<BlockId> target;
    bool conflict = false;
    if (sc_.adversary->chain == wchain_) {
      if (auto hit = decision_hit()) {
        target = hit->block;
        conflict = hit->entry.kind == LogKind::authorized_redeem;
      }
    } else {
      for (std::size_t i = 0; i < edges().size() && !target; ++i)
        if (edges()[i].chain == c.id() && deploy_tx_[i])
          if (auto loc = c.locate_tx(*deploy_tx_[i])) target = loc->block;
    }
    if (!target) return;
    auto conf = c.confirmations(*target);
    if (!conf || *conf < adv_conf_) return;
    std::vector<std::vector<ChainTx>> txs;
    if (conflict) txs.push_back({make_call(sc_w_, CallFn::authorize_refund, std::monostate{}, nonce())});
    const BlockId parent = c.block(*target).header.prev;
    c.inject_fork(parent, adv_len_, txs, now_);
    adv_fired_ = true;
    trace("adversary", "fork",
          "branch of " + std::to_string(adv_len_) + " on " + c.id() + " at " + std::to_string(*conf) +
              " confirmations; target " + (c.is_canonical(*target) ? "kept" : "orphaned"));
  }

  std::optional<WitnessState> witness_state() const override {
    if (!sc_w_tx_) return std::nullopt;
    const auto* w = chain(wchain_).state().witness(sc_w_);
    return w ? std::optional(w->state) : std::nullopt;
  }

  bool witness_converged() const override {
    auto hit = decision_hit();
    return hit && chain(wchain_).is_stable(hit->block, sc_.d);
  }

 private:
  std::optional<LogHit> decision_hit() const {
    if (!sc_w_tx_) return std::nullopt;
    return find_log(chain(wchain_), sc_w_, {LogKind::authorized_redeem, LogKind::authorized_refund});
  }

  void request_refund(const Participant& p, const std::string& key) {
    if (intent_live(key)) return;
    const ChainTx tx = make_call(sc_w_, CallFn::authorize_refund, std::monostate{}, nonce());
    set_intent(key, wchain_, tx.id());
    submit(wchain_, tx, p.id, "authorize refund");
  }

  ChainId wchain_;
  std::shared_ptr<const WitnessRegistration> reg_;
  std::optional<Digest> sc_w_tx_;
  Digest sc_w_;
  std::optional<AnchorHeader> anchor_;
  std::optional<Tick> t_w_;
  std::uint32_t adv_conf_ = 0;
  std::uint32_t adv_len_ = 1;
  bool adv_fired_ = false;
};

class Ac3twEngine final : public Engine {
 public:
  Ac3twEngine(const Scenario& sc, std::uint64_t seed)
      : Engine(sc, seed), trent_(KeyPair::from_label("xchain/trent")) {}

 protected:
  void act() override {
    if (!ms_) {
      ms_ = multisign(sc_.graph, ps_);
      trace("all", "multisign", "graph " + short_hex(sc_.graph.digest()));
      trent_.register_graph(*ms_, sc_.graph, participant_keys(ps_));
      trace("trent", "register", "graph " + short_hex(ms_->graph_digest));
    }
    auto decision = trent_.decision(ms_->graph_digest);
    if (decision == TrentStore::Decision::none) {
      for (std::size_t i = 0; i < edges().size(); ++i) {
        const auto& e = edges()[i];
        const Participant& s = participant(e.from);
        if (live(e.chain, deploy_tx_[i]) || !publishes(s)) continue;
        const ChainTx tx =
            make_swap_deploy(e.chain, s.keys, e.amount, trusted_args(participant(e.to).pk(), *ms_, trent_.pk()),
                             nonce());
        deploy_tx_[i] = tx.id();
        submit(e.chain, tx, s.id, "deploy " + edge_label(e));
      }
    }
    const bool deployed = all_deploys_stable();
    if (deployed) mark("contracts_deployed");

    if (decision == TrentStore::Decision::none) {
      if (deployed) {
        if (sc_.trent_race)
          for (auto it = ps_.rbegin(); it != ps_.rend(); ++it)
            if (active(*it, Step::authorize)) {
              ask_refund(*it);
              break;
            }
        for (const Participant* p : coalition()) ask_refund(*p);
        if (const Participant* p = first_active(Step::authorize)) {
          const bool ok = trusted_contracts_deployed(sc_.graph, participant_keys(ps_), *ms_, trent_.pk(), chains_,
                                                     deploy_tx_, sc_.d);
          auto sig = trent_.request_redeem(*ms_, ok);
          trace(p->id, "request_redeem", sig ? "granted" : "denied");
        }
      } else if (now_ >= static_cast<Tick>(sc_.refund_timeout_deltas) * delta_) {
        if (const Participant* p = first_active(Step::authorize)) ask_refund(*p);
      }
      decision = trent_.decision(ms_->graph_digest);
      out_.trent_signatures = trent_.signatures_issued();
      if (decision == TrentStore::Decision::none) return;
    }
    mark("decision");

    const bool redeem = decision == TrentStore::Decision::redeem;
    const auto sig = redeem ? trent_.request_redeem(*ms_, false) : trent_.request_refund(*ms_);
    for (std::size_t i = 0; i < edges().size(); ++i) {
      const auto* c = contract_state(i);
      if (!c || c->state != ContractState::published) continue;
      const auto& e = edges()[i];
      const Participant& p = participant(redeem ? e.to : e.from);
      const std::string key = "settle/" + std::to_string(i);
      if (!active(p, redeem ? Step::redeem : Step::refund) || intent_live(key)) continue;
      const ChainTx tx = make_call(*contract_of(i), redeem ? CallFn::redeem : CallFn::refund, *sig, nonce());
      set_intent(key, e.chain, tx.id());
      submit(e.chain, tx, p.id, std::string(redeem ? "redeem " : "refund ") + edge_label(e));
    }
    if (deployed_all_settled()) mark("settled");
  }

  bool finished() override {
    return ms_ && trent_.decision(ms_->graph_digest) != TrentStore::Decision::none && deployed_all_settled();
  }

 private:
  void ask_refund(const Participant& p) {
    auto sig = trent_.request_refund(*ms_);
    trace(p.id, "request_refund", sig ? "granted" : "denied");
  }

  TrentStore trent_;
  std::optional<Multisignature> ms_;
};

class BaselineEngine final : public Engine {
 public:
  BaselineEngine(const Scenario& sc, std::uint64_t seed)
      : Engine(sc, seed), plan_(plan_baseline(sc.graph, delta_)) {
    Encoder enc;
    enc.str("xchain/baseline-secret").blob(sc.graph.digest()).u64(seed);
    const Digest s = sha256(enc.buffer());
    secret_.assign(s.bytes.begin(), s.bytes.end());
    hash_ = sha256(secret_);
    known_.insert(plan_.leader);
  }

 protected:
  void act() override {
    if (now_ == 0) trace(plan_.leader, "secret", "leader picks s, h = " + short_hex(hash_));
    for (const auto& v : sc_.graph.vertices()) {
      const Participant& p = participant(v);
      if (!publishes(p) || (v != plan_.leader && !incoming_stable(v))) continue;
      for (std::size_t i = 0; i < edges().size(); ++i) {
        const auto& e = edges()[i];
        if (e.from != v || live(e.chain, deploy_tx_[i])) continue;
        const ChainTx tx = make_swap_deploy(
            e.chain, p.keys, e.amount,
            SwapContractArgs{participant(e.to).pk(), HashLock{hash_}, HashLock{hash_}, plan_.expiry[i]}, nonce());
        deploy_tx_[i] = tx.id();
        submit(e.chain, tx, v, "deploy " + edge_label(e) + " expiry " + std::to_string(plan_.expiry[i]));
      }
    }
    if (all_deploys_stable()) mark("contracts_deployed");

    learn_secret();
    for (std::size_t i = 0; i < edges().size(); ++i) {
      const auto& e = edges()[i];
      const auto* c = contract_state(i);
      if (!c || c->state != ContractState::published || !known_.count(e.to) || now_ >= plan_.expiry[i]) continue;
      if (e.to == plan_.leader && !incoming_stable(plan_.leader)) continue;
      const Participant& p = participant(e.to);
      const std::string key = "redeem/" + std::to_string(i);
      if (!active(p, Step::redeem) || intent_live(key)) continue;
      const ChainTx tx = make_call(*contract_of(i), CallFn::redeem, Preimage{secret_}, nonce());
      set_intent(key, e.chain, tx.id());
      submit(e.chain, tx, p.id, "redeem " + edge_label(e) + " revealing s");
    }
    if (all_settled()) mark("settled");
  }

  bool finished() override { return all_settled(); }

  std::optional<Tick> expiry_of(std::size_t edge) const override { return plan_.expiry[edge]; }

 private:
  bool incoming_stable(const ParticipantId& v) const {
    for (std::size_t i = 0; i < edges().size(); ++i)
      if (edges()[i].to == v && !stable_tx(edges()[i].chain, deploy_tx_[i])) return false;
    return true;
  }

  // A participant learns s once one of its outgoing contracts was redeemed
  // with it on a d-deep block.
  void learn_secret() {
    for (std::size_t i = 0; i < edges().size(); ++i) {
      const auto& e = edges()[i];
      if (known_.count(e.from)) continue;
      auto id = contract_of(i);
      if (!id) continue;
      const SimChain& c = chain(e.chain);
      auto hit = find_log(c, *id, {LogKind::redeemed});
      if (!hit || !c.is_stable(hit->block, sc_.d)) continue;
      for (const auto& tx : c.block(hit->block).txs)
        if (tx.id() == hit->entry.tx)
          if (std::holds_alternative<Preimage>(std::get<CallTx>(tx.body()).arg)) {
            known_.insert(e.from);
            trace(e.from, "learn_secret", "from redeem of " + edge_label(e));
          }
    }
  }

  bool all_settled() const {
    if (!deployed_all_settled()) return false;
    for (std::size_t i = 0; i < edges().size(); ++i)
      if (!contract_of(i) && now_ < *std::max_element(plan_.expiry.begin(), plan_.expiry.end())) return false;
    return true;
  }

  BaselinePlan plan_;
  Bytes secret_;
  Digest hash_;
  std::set<ParticipantId> known_;
};

}  // namespace

RunOutcome run_ac3tw(const Scenario& sc, std::uint64_t seed) {
  if (sc.protocol != Protocol::ac3tw) throw Error(Errc::scenario_invalid, "scenario is not AC3TW");
  return Ac3twEngine(sc, seed).run();
}

RunOutcome run_ac3wn(const Scenario& sc, std::uint64_t seed) {
  if (sc.protocol != Protocol::ac3wn) throw Error(Errc::scenario_invalid, "scenario is not AC3WN");
  return Ac3wnEngine(sc, seed).run();
}

RunOutcome run_baseline(const Scenario& sc, std::uint64_t seed) {
  if (sc.protocol != Protocol::baseline) throw Error(Errc::scenario_invalid, "scenario is not Baseline");
  return BaselineEngine(sc, seed).run();
}

RunOutcome run_scenario(const Scenario& sc, std::uint64_t seed) {
  switch (sc.protocol) {
    case Protocol::ac3tw: return run_ac3tw(sc, seed);
    case Protocol::ac3wn: return run_ac3wn(sc, seed);
    case Protocol::baseline: return run_baseline(sc, seed);
  }
  throw Error(Errc::scenario_invalid, "unknown protocol");
}

}  // namespace xchain
