#include "xchain/interleave.hpp"

#include <algorithm>
#include <stdexcept>

namespace xchain {
namespace {

int rank(Step s) { return s == Step::refund ? static_cast<int>(Step::redeem) : static_cast<int>(s); }

// Whether the participant ever performs `step` (crashes with recovery
// eventually do).
bool can(const Participant& p, Step step) {
  if (std::holds_alternative<DeclinePublish>(p.behavior)) return step != Step::deploy;
  if (const auto* c = std::get_if<CrashAt>(&p.behavior)) return c->recover_tick || rank(step) < rank(c->step);
  return true;
}

std::string edge_name(const std::string& kind, std::size_t i, const SwapEdge& e) {
  return kind + "#" + std::to_string(i) + ":" + e.from + "->" + e.to + "@" + e.chain;
}

Scenario without_forks(const Scenario& sc) {
  Scenario out = sc;
  for (auto& c : out.chains) c.fork_probability = 0.0;
  out.adversary.reset();
  return out;
}

struct ChainState {
  ChainSet chains;
  std::vector<std::optional<Digest>> deploy;
  Tick clock = 0;
};

class ModelBase {
 public:
  explicit ModelBase(const Scenario& sc)
      : sc_(without_forks(sc)), ps_(make_participants(sc_.graph, sc_.faults)), rng_(0) {
    for (std::size_t i = 0; i < ps_.size(); ++i) index_[ps_[i].id] = i;
  }

  const std::vector<std::string>& names() const { return names_; }
  bool anomaly(const ChainState&) const { return false; }

 protected:
  const std::vector<SwapEdge>& edges() const { return sc_.graph.edges(); }
  const Participant& participant(const ParticipantId& id) const { return ps_[index_.at(id)]; }

  ChainState fresh() {
    ChainState s{make_chains(sc_, ps_, rng_), std::vector<std::optional<Digest>>(edges().size()), 0};
    return s;
  }

  void mine_settled(ChainState& s, const ChainId& chain) {
    ++s.clock;
    for (std::uint32_t i = 0; i <= sc_.d; ++i) s.chains.at(chain).mine_block(rng_, s.clock, false);
  }

  void include(ChainState& s, const ChainId& chain, const ChainTx& tx) {
    SimChain& c = s.chains.at(chain);
    c.submit_tx(tx);
    mine_settled(s, chain);
    if (!c.locate_tx(tx.id())) {
      auto why = c.drop_record(tx.id());
      throw std::logic_error("enabled event was rejected: " + (why ? why->reason : std::string("not mined")));
    }
  }

  const SwapContract* contract(const ChainState& s, std::size_t i) const {
    if (!s.deploy[i]) return nullptr;
    return s.chains.at(edges()[i].chain).state().swap(contract_id_for(*s.deploy[i]));
  }

  bool published(const ChainState& s, std::size_t i) const {
    const auto* c = contract(s, i);
    return c && c->state == ContractState::published;
  }

  bool all_deployed(const ChainState& s) const {
    return std::all_of(s.deploy.begin(), s.deploy.end(), [](const auto& d) { return d.has_value(); });
  }

  bool any_can(Step step) const {
    return std::any_of(ps_.begin(), ps_.end(), [&](const Participant& p) { return can(p, step); });
  }

  Verdict verdict(const ChainState& s) const {
    std::vector<std::optional<ContractState>> states;
    for (std::size_t i = 0; i < edges().size(); ++i) {
      const auto* c = contract(s, i);
      states.push_back(c ? std::optional(c->state) : std::nullopt);
    }
    return compute_verdict(states);
  }

  Scenario sc_;
  std::vector<Participant> ps_;
  Rng rng_;
  std::vector<std::string> names_;

 private:
  std::map<ParticipantId, std::size_t> index_;
};

// Events: deploy_i, authorize_redeem, authorize_refund, redeem_i, refund_i.
class WitnessNetworkModel : public ModelBase {
 public:
  using State = ChainState;

  explicit WitnessNetworkModel(const Scenario& sc) : ModelBase(sc) {
    if (!sc_.witness_chain) throw Error(Errc::scenario_invalid, "AC3WN needs a witness chain");
    wchain_ = *sc_.witness_chain;
    const std::size_t n = edges().size();
    for (std::size_t i = 0; i < n; ++i) names_.push_back(edge_name("deploy", i, edges()[i]));
    names_.push_back("authorize_redeem");
    names_.push_back("authorize_refund");
    for (std::size_t i = 0; i < n; ++i) names_.push_back(edge_name("redeem", i, edges()[i]));
    for (std::size_t i = 0; i < n; ++i) names_.push_back(edge_name("refund", i, edges()[i]));

    initial_ = fresh();
    reg_ = make_registration(sc_.graph, ps_, initial_.chains, sc_.d);
    const ChainTx tx = make_witness_deploy(wchain_, ps_.front().keys, reg_, 1);
    include(initial_, wchain_, tx);
    sc_w_ = contract_id_for(tx.id());
    anchor_ = anchor_at(initial_.chains.at(wchain_), initial_.chains.at(wchain_).locate_tx(tx.id())->block);
  }

  const State& initial() const { return initial_; }

  bool enabled(const State& s, std::size_t ev) const {
    const std::size_t n = edges().size();
    const WitnessState ws = witness(s);
    if (ev < n) return !s.deploy[ev] && can(participant(edges()[ev].from), Step::deploy);
    if (ev == n) return ws == WitnessState::published && all_deployed(s) && any_can(Step::authorize);
    if (ev == n + 1) return ws == WitnessState::published && any_can(Step::authorize);
    if (ev < 2 * n + 2) {
      const std::size_t i = ev - n - 2;
      return ws == WitnessState::redeem_authorized && published(s, i) && can(participant(edges()[i].to), Step::redeem);
    }
    const std::size_t i = ev - 2 * n - 2;
    return ws == WitnessState::refund_authorized && published(s, i) && can(participant(edges()[i].from), Step::refund);
  }

  void apply(State& s, std::size_t ev) {
    const std::size_t n = edges().size();
    const std::uint64_t nonce = 100 + ev;
    if (ev < n) {
      const auto& e = edges()[ev];
      const ChainTx tx = make_swap_deploy(e.chain, participant(e.from).keys, e.amount,
                                          witness_ref_args(participant(e.to).pk(), wchain_, sc_w_, sc_.d, anchor_),
                                          nonce);
      s.deploy[ev] = tx.id();
      include(s, e.chain, tx);
    } else if (ev == n) {
      std::vector<Digest> txs;
      for (const auto& d : s.deploy) txs.push_back(*d);
      include(s, wchain_, make_call(sc_w_, CallFn::authorize_redeem, build_bundle(*reg_, s.chains, txs), nonce));
    } else if (ev == n + 1) {
      include(s, wchain_, make_call(sc_w_, CallFn::authorize_refund, std::monostate{}, nonce));
    } else {
      const bool redeem = ev < 2 * n + 2;
      const std::size_t i = redeem ? ev - n - 2 : ev - 2 * n - 2;
      const SimChain& w = s.chains.at(wchain_);
      auto ev_ptr = std::make_shared<Evidence>(build_evidence(w, anchor_, decision_tx(w), sc_.d));
      include(s, edges()[i].chain,
              make_call(contract_id_for(*s.deploy[i]), redeem ? CallFn::redeem : CallFn::refund, ev_ptr, nonce));
    }
  }

  using ModelBase::verdict;

 private:
  WitnessState witness(const State& s) const { return s.chains.at(wchain_).state().witness(sc_w_)->state; }

  Digest decision_tx(const SimChain& w) const {
    for (const auto& b : w.canonical())
      for (const auto& l : w.logs_at(b))
        if (l.contract == sc_w_ && (l.kind == LogKind::authorized_redeem || l.kind == LogKind::authorized_refund))
          return l.tx;
    throw std::logic_error("no witness decision on canon");
  }

  ChainId wchain_;
  State initial_;
  std::shared_ptr<const WitnessRegistration> reg_;
  Digest sc_w_;
  AnchorHeader anchor_;
};

struct TrustedState : ChainState {
  TrentStore trent{KeyPair::from_label("xchain/trent")};
};

// Events: deploy_i, request_redeem, request_refund, redeem_i, refund_i.
class TrustedWitnessModel : public ModelBase {
 public:
  using State = TrustedState;

  explicit TrustedWitnessModel(const Scenario& sc) : ModelBase(sc) {
    const std::size_t n = edges().size();
    for (std::size_t i = 0; i < n; ++i) names_.push_back(edge_name("deploy", i, edges()[i]));
    names_.push_back("request_redeem");
    names_.push_back("request_refund");
    for (std::size_t i = 0; i < n; ++i) names_.push_back(edge_name("redeem", i, edges()[i]));
    for (std::size_t i = 0; i < n; ++i) names_.push_back(edge_name("refund", i, edges()[i]));
    static_cast<ChainState&>(initial_) = fresh();
    pks_ = participant_keys(ps_);
    ms_ = multisign(sc_.graph, ps_);
    initial_.trent.register_graph(ms_, sc_.graph, pks_);
  }

  const State& initial() const { return initial_; }

  bool enabled(const State& s, std::size_t ev) const {
    const std::size_t n = edges().size();
    const auto decision = s.trent.decision(ms_.graph_digest);
    if (ev < n) return !s.deploy[ev] && can(participant(edges()[ev].from), Step::deploy);
    if (ev == n) return decision == TrentStore::Decision::none && all_deployed(s) && any_can(Step::authorize);
    if (ev == n + 1) return decision == TrentStore::Decision::none && any_can(Step::authorize);
    if (ev < 2 * n + 2) {
      const std::size_t i = ev - n - 2;
      return decision == TrentStore::Decision::redeem && published(s, i) &&
             can(participant(edges()[i].to), Step::redeem);
    }
    const std::size_t i = ev - 2 * n - 2;
    return decision == TrentStore::Decision::refund && published(s, i) &&
           can(participant(edges()[i].from), Step::refund);
  }

  void apply(State& s, std::size_t ev) {
    const std::size_t n = edges().size();
    const std::uint64_t nonce = 100 + ev;
    if (ev < n) {
      const auto& e = edges()[ev];
      const ChainTx tx = make_swap_deploy(e.chain, participant(e.from).keys, e.amount,
                                          trusted_args(participant(e.to).pk(), ms_, s.trent.pk()), nonce);
      s.deploy[ev] = tx.id();
      include(s, e.chain, tx);
    } else if (ev == n) {
      const bool ok = trusted_contracts_deployed(sc_.graph, pks_, ms_, s.trent.pk(), s.chains, s.deploy, sc_.d);
      if (!s.trent.request_redeem(ms_, ok)) throw std::logic_error("Trent refused an enabled redeem request");
    } else if (ev == n + 1) {
      if (!s.trent.request_refund(ms_)) throw std::logic_error("Trent refused an enabled refund request");
    } else {
      const bool redeem = ev < 2 * n + 2;
      const std::size_t i = redeem ? ev - n - 2 : ev - 2 * n - 2;
      const auto sig = redeem ? s.trent.request_redeem(ms_, false) : s.trent.request_refund(ms_);
      include(s, edges()[i].chain,
              make_call(contract_id_for(*s.deploy[i]), redeem ? CallFn::redeem : CallFn::refund, *sig, nonce));
    }
  }

  bool anomaly(const State& s) const { return s.trent.signatures_issued() != 1; }

  using ModelBase::verdict;

 private:
  State initial_;
  std::map<ParticipantId, PublicKey> pks_;
  Multisignature ms_;
};

// Events: deploy_i, redeem_i, expire_i. Time only passes an expiry when the
// contract's recipient cannot redeem it right now.
class BaselineModel : public ModelBase {
 public:
  using State = ChainState;

  explicit BaselineModel(const Scenario& sc) : ModelBase(sc), plan_(plan_baseline(sc_.graph, sc_.effective_delta())) {
    const std::size_t n = edges().size();
    for (std::size_t i = 0; i < n; ++i) names_.push_back(edge_name("deploy", i, edges()[i]));
    for (std::size_t i = 0; i < n; ++i) names_.push_back(edge_name("redeem", i, edges()[i]));
    for (std::size_t i = 0; i < n; ++i) names_.push_back(edge_name("expire", i, edges()[i]));
    const Digest s = sha256(std::string_view("xchain/baseline-interleave-secret"));
    secret_.assign(s.bytes.begin(), s.bytes.end());
    hash_ = sha256(secret_);
    initial_ = fresh();
  }

  const State& initial() const { return initial_; }

  bool enabled(const State& s, std::size_t ev) const {
    const std::size_t n = edges().size();
    if (ev < n) {
      const auto& e = edges()[ev];
      return !s.deploy[ev] && s.clock < plan_.expiry[ev] && can(participant(e.from), Step::deploy) &&
             (e.from == plan_.leader || incoming_deployed(s, e.from));
    }
    if (ev < 2 * n) return redeemable(s, ev - n);
    return published(s, ev - 2 * n) && !redeemable(s, ev - 2 * n);
  }

  void apply(State& s, std::size_t ev) {
    const std::size_t n = edges().size();
    const std::uint64_t nonce = 100 + ev;
    if (ev < n) {
      const auto& e = edges()[ev];
      const ChainTx tx = make_swap_deploy(
          e.chain, participant(e.from).keys, e.amount,
          SwapContractArgs{participant(e.to).pk(), HashLock{hash_}, HashLock{hash_}, plan_.expiry[ev]}, nonce);
      s.deploy[ev] = tx.id();
      include(s, e.chain, tx);
    } else if (ev < 2 * n) {
      const std::size_t i = ev - n;
      include(s, edges()[i].chain, make_call(contract_id_for(*s.deploy[i]), CallFn::redeem, Preimage{secret_}, nonce));
    } else {
      s.clock = std::max(s.clock, plan_.expiry[ev - 2 * n]);
      for (auto& [id, chain] : s.chains)
        for (std::uint32_t k = 0; k <= sc_.d; ++k) chain.mine_block(rng_, s.clock, false);
    }
  }

  using ModelBase::verdict;

 private:
  bool incoming_deployed(const State& s, const ParticipantId& v) const {
    for (std::size_t i = 0; i < edges().size(); ++i)
      if (edges()[i].to == v && !s.deploy[i]) return false;
    return true;
  }

  bool knows_secret(const State& s, const ParticipantId& v) const {
    if (v == plan_.leader) return true;
    for (std::size_t i = 0; i < edges().size(); ++i) {
      const auto* c = contract(s, i);
      if (edges()[i].from == v && c && c->state == ContractState::redeemed) return true;
    }
    return false;
  }

  bool redeemable(const State& s, std::size_t i) const {
    const auto& e = edges()[i];
    return published(s, i) && s.clock < plan_.expiry[i] && knows_secret(s, e.to) &&
           can(participant(e.to), Step::redeem) && (e.to != plan_.leader || incoming_deployed(s, e.to));
  }

  BaselinePlan plan_;
  Bytes secret_;
  Digest hash_;
  State initial_;
};

template <class Model>
InterleaveReport explore(Model& m, Protocol p, std::size_t max_events, std::uint64_t max_schedules,
                         std::size_t keep) {
  InterleaveReport r;
  r.protocol = p;
  r.events = m.names();
  if (r.events.size() > max_events)
    throw Error(Errc::too_many_schedules, std::to_string(r.events.size()) + " events exceed the bound of " +
                                               std::to_string(max_events));
  r.schedules = enumerate_schedules(
      m.initial(), r.events.size(), [&](const auto& s, std::size_t ev) { return m.enabled(s, ev); },
      [&](auto& s, std::size_t ev) { m.apply(s, ev); },
      [&](const auto& s, const std::vector<std::size_t>& schedule) {
        const Verdict v = m.verdict(s);
        ++r.verdicts[v];
        if (m.anomaly(s)) ++r.signature_anomalies;
        if (v != Verdict::atomicity_violated) return;
        ++r.violations;
        if (r.violating.size() >= keep) return;
        std::vector<std::string> names;
        for (auto ev : schedule) names.push_back(r.events[ev]);
        r.violating.push_back(std::move(names));
      },
      max_schedules);
  return r;
}

template <class Model>
Verdict replay(Model& m, const std::vector<std::string>& schedule) {
  auto s = m.initial();
  for (const auto& name : schedule) {
    auto it = std::find(m.names().begin(), m.names().end(), name);
    if (it == m.names().end()) throw Error(Errc::invalid_params, "unknown event " + name);
    const auto ev = static_cast<std::size_t>(it - m.names().begin());
    if (!m.enabled(s, ev)) throw Error(Errc::invalid_params, "event " + name + " is not enabled");
    m.apply(s, ev);
  }
  return m.verdict(s);
}

}  // namespace

InterleaveReport run_interleavings(const Scenario& sc, std::size_t max_events, std::uint64_t max_schedules,
                                   std::size_t keep_traces) {
  switch (sc.protocol) {
    case Protocol::ac3wn: {
      WitnessNetworkModel m(sc);
      return explore(m, sc.protocol, max_events, max_schedules, keep_traces);
    }
    case Protocol::ac3tw: {
      TrustedWitnessModel m(sc);
      return explore(m, sc.protocol, max_events, max_schedules, keep_traces);
    }
    case Protocol::baseline: {
      BaselineModel m(sc);
      return explore(m, sc.protocol, max_events, max_schedules, keep_traces);
    }
  }
  throw Error(Errc::scenario_invalid, "unknown protocol");
}

Verdict replay_schedule(const Scenario& sc, const std::vector<std::string>& schedule) {
  switch (sc.protocol) {
    case Protocol::ac3wn: {
      WitnessNetworkModel m(sc);
      return replay(m, schedule);
    }
    case Protocol::ac3tw: {
      TrustedWitnessModel m(sc);
      return replay(m, schedule);
    }
    case Protocol::baseline: {
      BaselineModel m(sc);
      return replay(m, schedule);
    }
  }
  throw Error(Errc::scenario_invalid, "unknown protocol");
}

std::vector<std::string> interleave_events(const Scenario& sc) {
  switch (sc.protocol) {
    case Protocol::ac3wn: return WitnessNetworkModel(sc).names();
    case Protocol::ac3tw: return TrustedWitnessModel(sc).names();
    case Protocol::baseline: return BaselineModel(sc).names();
  }
  return {};
}

}  // namespace xchain
