#include "xchain/tx.hpp"

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

void encode_call_arg(Encoder& enc, const CallArg& arg) {
  enc.u8(static_cast<std::uint8_t>(arg.index()));
  std::visit(overloaded{
                 [](const std::monostate&) {},
                 [&](const Signature& s) { enc.blob(s); },
                 [&](const Preimage& p) { enc.bytes(p.value); },
                 [&](const std::shared_ptr<const Evidence>& e) {
                   if (!e) throw Error(Errc::invalid_tx, "null evidence argument");
                   e->encode(enc);
                 },
                 [&](const std::shared_ptr<const EvidenceBundle>& b) {
                   if (!b) throw Error(Errc::invalid_tx, "null evidence bundle argument");
                   b->encode(enc);
                 },
             },
             arg);
}

// Everything except authorization signatures.
void encode_unsigned(Encoder& enc, const ChainTx::Body& body) {
  enc.u8(static_cast<std::uint8_t>(body.index() + 1));
  std::visit(overloaded{
                 [&](const TransferTx& t) { enc.blob(t.from).blob(t.to).u64(t.amount); },
                 [&](const DeployTx& d) {
                   enc.blob(d.msg.sender).u64(d.msg.value).u8(static_cast<std::uint8_t>(d.args.index()));
                   if (const auto* swap = std::get_if<SwapContractArgs>(&d.args)) {
                     enc.blob(swap->recipient);
                     encode(enc, swap->rd);
                     encode(enc, swap->rf);
                     enc.boolean(swap->expiry.has_value()).i64(swap->expiry.value_or(0));
                   } else {
                     const auto& reg = std::get<std::shared_ptr<const WitnessRegistration>>(d.args);
                     if (!reg) throw Error(Errc::invalid_tx, "null witness registration");
                     reg->encode(enc);
                   }
                 },
                 [&](const CallTx& c) {
                   enc.blob(c.contract).u8(static_cast<std::uint8_t>(c.fn));
                   encode_call_arg(enc, c.arg);
                 },
             },
             body);
}

}  // namespace

std::string_view to_string(ContractState s) {
  switch (s) {
    case ContractState::published: return "P";
    case ContractState::redeemed: return "RD";
    case ContractState::refunded: return "RF";
  }
  return "?";
}

std::string_view to_string(WitnessState s) {
  switch (s) {
    case WitnessState::published: return "P";
    case WitnessState::redeem_authorized: return "RD_auth";
    case WitnessState::refund_authorized: return "RF_auth";
  }
  return "?";
}

std::string_view to_string(CallFn fn) {
  switch (fn) {
    case CallFn::redeem: return "redeem";
    case CallFn::refund: return "refund";
    case CallFn::authorize_redeem: return "authorize_redeem";
    case CallFn::authorize_refund: return "authorize_refund";
  }
  return "?";
}

std::string_view to_string(TxKind kind) {
  switch (kind) {
    case TxKind::asset_transfer: return "asset-transfer";
    case TxKind::contract_deploy: return "contract-deploy";
    case TxKind::contract_call: return "contract-call";
  }
  return "?";
}

void AnchorHeader::encode(Encoder& enc) const {
  enc.str(chain_id);
  header.encode(enc);
  enc.u32(pow_difficulty);
}

void encode(Encoder& enc, const CommitmentScheme& scheme) {
  enc.u8(static_cast<std::uint8_t>(scheme.index()));
  std::visit(overloaded{
                 [&](const TrustedWitness& t) {
                   t.ms.encode(enc);
                   enc.blob(t.witness_pk);
                 },
                 [&](const WitnessRef& w) {
                   enc.str(w.witness_chain).blob(w.witness_contract).u32(w.min_depth);
                   w.anchor.encode(enc);
                 },
                 [&](const HashLock& h) { enc.blob(h.hash); },
             },
             scheme);
}

Bytes trusted_witness_message(const Multisignature& ms, WitnessTag tag) {
  Encoder enc;
  enc.bytes(ms.canonical_bytes()).u8(static_cast<std::uint8_t>(tag));
  return enc.take();
}

void WitnessRegistration::encode(Encoder& enc) const {
  graph.encode(enc);
  enc.u32(static_cast<std::uint32_t>(pks.size()));
  for (const auto& [id, pk] : pks) enc.str(id).blob(pk);
  ms.encode(enc);
  enc.u32(static_cast<std::uint32_t>(anchors.size()));
  for (const auto& [chain, anchor] : anchors) {
    enc.str(chain);
    anchor.encode(enc);
  }
  enc.u32(depth);
}

ChainTx::ChainTx(Body body, std::uint64_t nonce) : body_(std::move(body)), nonce_(nonce) { id_ = compute_id(); }

TxKind ChainTx::kind() const { return static_cast<TxKind>(body_.index() + 1); }

void ChainTx::encode(Encoder& enc) const {
  encode_unsigned(enc, body_);
  if (const auto* t = std::get_if<TransferTx>(&body_)) enc.blob(t->auth);
  if (const auto* d = std::get_if<DeployTx>(&body_)) enc.blob(d->auth);
  enc.u64(nonce_);
}

Digest ChainTx::compute_id() const {
  Encoder enc;
  encode(enc);
  return sha256(enc.buffer());
}

Bytes signing_bytes(const ChainId& chain, const ChainTx::Body& body, std::uint64_t nonce) {
  Encoder enc;
  enc.str("xchain.tx.auth").str(chain);
  encode_unsigned(enc, body);
  enc.u64(nonce);
  return enc.take();
}

ChainTx make_transfer(const ChainId& chain, const KeyPair& from, const PublicKey& to, Amount amount,
                      std::uint64_t nonce) {
  TransferTx t{from.pk, to, amount, {}};
  t.auth = sign(from.sk, signing_bytes(chain, ChainTx::Body{t}, nonce));
  return ChainTx(std::move(t), nonce);
}

ChainTx make_swap_deploy(const ChainId& chain, const KeyPair& sender, Amount value, SwapContractArgs args,
                         std::uint64_t nonce) {
  DeployTx d{{sender.pk, value}, std::move(args), {}};
  d.auth = sign(sender.sk, signing_bytes(chain, ChainTx::Body{d}, nonce));
  return ChainTx(std::move(d), nonce);
}

ChainTx make_witness_deploy(const ChainId& chain, const KeyPair& sender,
                            std::shared_ptr<const WitnessRegistration> reg, std::uint64_t nonce) {
  DeployTx d{{sender.pk, 0}, std::move(reg), {}};
  d.auth = sign(sender.sk, signing_bytes(chain, ChainTx::Body{d}, nonce));
  return ChainTx(std::move(d), nonce);
}

ChainTx make_call(const Digest& contract, CallFn fn, CallArg arg, std::uint64_t nonce) {
  return ChainTx(CallTx{contract, fn, std::move(arg)}, nonce);
}

bool authorization_valid(const ChainId& chain, const ChainTx& tx) {
  const auto& body = tx.body();
  if (const auto* t = std::get_if<TransferTx>(&body))
    return verify(t->from, signing_bytes(chain, body, tx.nonce()), t->auth);
  if (const auto* d = std::get_if<DeployTx>(&body))
    return verify(d->msg.sender, signing_bytes(chain, body, tx.nonce()), d->auth);
  return true;
}

void encode_tx_list(Encoder& enc, std::span<const ChainTx> txs) {
  enc.u32(static_cast<std::uint32_t>(txs.size()));
  for (const auto& tx : txs) tx.encode(enc);
}

Digest payload_digest(std::span<const ChainTx> txs) {
  Encoder enc;
  encode_tx_list(enc, txs);
  return sha256(enc.buffer());
}

Digest contract_id_for(const Digest& deploy_tx_id) {
  Encoder enc;
  enc.str("xchain.contract").blob(deploy_tx_id);
  return sha256(enc.buffer());
}

}  // namespace xchain
