#include "xchain/contracts.hpp"

#include "xchain/error.hpp"
#include "xchain/evidence.hpp"

namespace xchain {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool same_family(const CommitmentScheme& a, const CommitmentScheme& b) { return a.index() == b.index(); }

bool trusted_signature_valid(const TrustedWitness& tw, const CallArg& witness, WitnessTag tag) {
  const auto* sig = std::get_if<Signature>(&witness);
  return sig && verify(tw.witness_pk, trusted_witness_message(tw.ms, tag), *sig);
}

bool witness_state_proven(const WitnessRef& ref, const CallArg& witness, WitnessState wanted) {
  const auto* ev = std::get_if<std::shared_ptr<const Evidence>>(&witness);
  if (!ev || !*ev || (*ev)->chain_id != ref.witness_chain) return false;
  return validate_evidence(ref.anchor, **ev, ref.min_depth, ExpectedWitnessState{ref.witness_contract, wanted});
}

}  // namespace

std::string_view to_string(LogKind kind) {
  switch (kind) {
    case LogKind::transfer: return "transfer";
    case LogKind::deployed: return "deployed";
    case LogKind::redeemed: return "redeemed";
    case LogKind::refunded: return "refunded";
    case LogKind::timelock_refund: return "timelock_refund";
    case LogKind::authorized_redeem: return "authorized_redeem";
    case LogKind::authorized_refund: return "authorized_refund";
  }
  return "?";
}

Amount LedgerState::balance(const PublicKey& who) const {
  auto it = balances_.find(who);
  return it == balances_.end() ? 0 : it->second;
}

void LedgerState::credit(const PublicKey& who, Amount amount) { balances_[who] += amount; }

void LedgerState::debit(const PublicKey& who, Amount amount) {
  auto it = balances_.find(who);
  const Amount have = it == balances_.end() ? 0 : it->second;
  if (have < amount)
    throw Error(Errc::insufficient_funds,
                "balance " + std::to_string(have) + " < " + std::to_string(amount) + " for " + who.hex().substr(0, 12));
  if (amount == 0) return;
  it->second -= amount;
}

const Contract* LedgerState::find(const Digest& id) const {
  auto it = contracts_.find(id);
  return it == contracts_.end() ? nullptr : &it->second;
}

const SwapContract* LedgerState::swap(const Digest& id) const {
  const auto* c = find(id);
  return c ? std::get_if<SwapContract>(c) : nullptr;
}

const WitnessContract* LedgerState::witness(const Digest& id) const {
  const auto* c = find(id);
  return c ? std::get_if<WitnessContract>(c) : nullptr;
}

SwapContract& LedgerState::swap_mut(const Digest& id) {
  auto it = contracts_.find(id);
  auto* c = it == contracts_.end() ? nullptr : std::get_if<SwapContract>(&it->second);
  if (!c) throw Error(Errc::unknown_contract, "no swap contract " + id.hex().substr(0, 12));
  return *c;
}

WitnessContract& LedgerState::witness_mut(const Digest& id) {
  auto it = contracts_.find(id);
  auto* c = it == contracts_.end() ? nullptr : std::get_if<WitnessContract>(&it->second);
  if (!c) throw Error(Errc::unknown_contract, "no witness contract " + id.hex().substr(0, 12));
  return *c;
}

void LedgerState::insert(const Digest& id, Contract c) {
  if (!contracts_.emplace(id, std::move(c)).second)
    throw Error(Errc::invalid_tx, "contract id collision " + id.hex().substr(0, 12));
}

Amount LedgerState::total_supply() const {
  Amount total = 0;
  for (const auto& [_, v] : balances_) total += v;
  for (const auto& [_, c] : contracts_)
    if (const auto* s = std::get_if<SwapContract>(&c); s && s->state == ContractState::published) total += s->amount;
  return total;
}

Digest deploy_swap_contract(LedgerState& state, const Digest& deploy_tx_id, const DeployMessage& msg,
                            const SwapContractArgs& args) {
  if (!same_family(args.rd, args.rf))
    throw Error(Errc::invalid_tx, "redeem and refund schemes must use the same variant");
  if (args.expiry && !std::holds_alternative<HashLock>(args.rd))
    throw Error(Errc::invalid_tx, "timelock requires a hashlock redemption scheme");
  const Digest id = contract_id_for(deploy_tx_id);
  if (state.find(id)) throw Error(Errc::invalid_tx, "contract already deployed");
  state.debit(msg.sender, msg.value);
  state.insert(id, SwapContract{msg.sender, args.recipient, msg.value, ContractState::published, args.rd, args.rf,
                                args.expiry});
  return id;
}

Digest deploy_witness_contract(LedgerState& state, const Digest& deploy_tx_id, const DeployMessage& msg,
                               const std::shared_ptr<const WitnessRegistration>& reg) {
  if (!reg) throw Error(Errc::invalid_tx, "missing registration");
  if (msg.value != 0) throw Error(Errc::invalid_tx, "witness contract holds no assets");
  if (!verify_multisig(reg->ms, reg->graph, reg->pks))
    throw Error(Errc::invalid_tx, "multisignature does not verify against the registered graph");
  for (const auto& e : reg->graph.edges())
    if (!reg->anchors.count(e.chain)) throw Error(Errc::invalid_tx, "no anchor for chain " + e.chain);
  const Digest id = contract_id_for(deploy_tx_id);
  if (state.find(id)) throw Error(Errc::invalid_tx, "contract already deployed");
  state.insert(id, WitnessContract{reg, WitnessState::published, msg.sender});
  return id;
}

bool is_redeemable(const SwapContract& c, const CallArg& witness) {
  return std::visit(overloaded{
                        [&](const TrustedWitness& tw) { return trusted_signature_valid(tw, witness, WitnessTag::redeem); },
                        [&](const WitnessRef& ref) {
                          return witness_state_proven(ref, witness, WitnessState::redeem_authorized);
                        },
                        [&](const HashLock& h) {
                          const auto* pre = std::get_if<Preimage>(&witness);
                          return pre && sha256(pre->value) == h.hash;
                        },
                    },
                    c.rd);
}

bool is_refundable(const SwapContract& c, const CallArg& witness) {
  return std::visit(overloaded{
                        [&](const TrustedWitness& tw) { return trusted_signature_valid(tw, witness, WitnessTag::refund); },
                        [&](const WitnessRef& ref) {
                          return witness_state_proven(ref, witness, WitnessState::refund_authorized);
                        },
                        // Baseline refunds are driven by the timelock only.
                        [](const HashLock&) { return false; },
                    },
                    c.rf);
}

ContractState redeem(LedgerState& state, const Digest& id, const CallArg& secret, const ApplyContext& ctx) {
  auto& c = state.swap_mut(id);
  if (c.state != ContractState::published)
    throw Error(Errc::wrong_state, "redeem in state " + std::string(to_string(c.state)));
  if (c.expiry && ctx.tick >= *c.expiry) throw Error(Errc::wrong_state, "timelock expired");
  if (!is_redeemable(c, secret)) throw Error(Errc::invalid_secret, "redemption witness rejected");
  state.credit(c.recipient, c.amount);
  c.state = ContractState::redeemed;
  return c.state;
}

ContractState refund(LedgerState& state, const Digest& id, const CallArg& secret, const ApplyContext&) {
  auto& c = state.swap_mut(id);
  if (c.state != ContractState::published)
    throw Error(Errc::wrong_state, "refund in state " + std::string(to_string(c.state)));
  if (!is_refundable(c, secret)) throw Error(Errc::invalid_secret, "refund witness rejected");
  state.credit(c.sender, c.amount);
  c.state = ContractState::refunded;
  return c.state;
}

WitnessState witness_authorize_redeem(LedgerState& state, const Digest& id, const EvidenceBundle& bundle,
                                      const ApplyContext& ctx) {
  auto& w = state.witness_mut(id);
  if (w.state != WitnessState::published)
    throw Error(Errc::wrong_state, "authorize redeem in state " + std::string(to_string(w.state)));
  if (!verify_contracts(*w.reg, ctx.chain_id, id, bundle))
    throw Error(Errc::bad_evidence, "contracts do not match the registered graph");
  // Each asset contract anchors its witness evidence on a header of this chain;
  // the witness chain can check that against its own history.
  for (const auto& ev : bundle.per_edge) {
    const auto* tx = evidence_target(ev);
    const auto& deploy = std::get<DeployTx>(tx->body());
    const auto& ref = std::get<WitnessRef>(std::get<SwapContractArgs>(deploy.args).rd);
    if (ref.anchor.chain_id != ctx.chain_id || ref.anchor.pow_difficulty != ctx.pow_difficulty || !ctx.in_history ||
        !ctx.in_history(ref.anchor.header.digest()))
      throw Error(Errc::bad_evidence, "contract anchors a header outside the witness chain");
  }
  w.state = WitnessState::redeem_authorized;
  return w.state;
}

WitnessState witness_authorize_refund(LedgerState& state, const Digest& id) {
  auto& w = state.witness_mut(id);
  if (w.state != WitnessState::published)
    throw Error(Errc::wrong_state, "authorize refund in state " + std::string(to_string(w.state)));
  w.state = WitnessState::refund_authorized;
  return w.state;
}

std::optional<ContractState> timelock_tick(LedgerState& state, const Digest& id, Tick now) {
  auto& c = state.swap_mut(id);
  if (!c.expiry || c.state != ContractState::published || now < *c.expiry) return std::nullopt;
  state.credit(c.sender, c.amount);
  c.state = ContractState::refunded;
  return c.state;
}

void apply_timelocks(LedgerState& state, const ApplyContext& ctx, std::vector<LogEntry>& log) {
  std::vector<Digest> due;
  for (const auto& [id, c] : state.contracts())
    if (const auto* s = std::get_if<SwapContract>(&c);
        s && s->expiry && s->state == ContractState::published && ctx.tick >= *s->expiry)
      due.push_back(id);
  for (const auto& id : due)
    if (timelock_tick(state, id, ctx.tick)) log.push_back({LogKind::timelock_refund, id, Digest{}});
}

std::optional<std::string> apply_tx(LedgerState& state, const ChainTx& tx, const ApplyContext& ctx,
                                    std::vector<LogEntry>& log) {
  try {
    if (!authorization_valid(ctx.chain_id, tx)) return std::string("InvalidTx: bad authorization signature");
    std::visit(overloaded{
                   [&](const TransferTx& t) {
                     state.debit(t.from, t.amount);
                     state.credit(t.to, t.amount);
                     log.push_back({LogKind::transfer, Digest{}, tx.id()});
                   },
                   [&](const DeployTx& d) {
                     Digest id;
                     if (const auto* swap = std::get_if<SwapContractArgs>(&d.args))
                       id = deploy_swap_contract(state, tx.id(), d.msg, *swap);
                     else
                       id = deploy_witness_contract(state, tx.id(), d.msg,
                                                    std::get<std::shared_ptr<const WitnessRegistration>>(d.args));
                     log.push_back({LogKind::deployed, id, tx.id()});
                   },
                   [&](const CallTx& c) {
                     switch (c.fn) {
                       case CallFn::redeem:
                         redeem(state, c.contract, c.arg, ctx);
                         log.push_back({LogKind::redeemed, c.contract, tx.id()});
                         break;
                       case CallFn::refund:
                         refund(state, c.contract, c.arg, ctx);
                         log.push_back({LogKind::refunded, c.contract, tx.id()});
                         break;
                       case CallFn::authorize_redeem: {
                         const auto* bundle = std::get_if<std::shared_ptr<const EvidenceBundle>>(&c.arg);
                         if (!bundle || !*bundle) throw Error(Errc::bad_evidence, "missing evidence bundle");
                         witness_authorize_redeem(state, c.contract, **bundle, ctx);
                         log.push_back({LogKind::authorized_redeem, c.contract, tx.id()});
                         break;
                       }
                       case CallFn::authorize_refund:
                         witness_authorize_refund(state, c.contract);
                         log.push_back({LogKind::authorized_refund, c.contract, tx.id()});
                         break;
                     }
                   },
               },
               tx.body());
    return std::nullopt;
  } catch (const Error& e) {
    return std::string(e.what());
  }
}

}  // namespace xchain
