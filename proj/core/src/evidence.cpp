#include "xchain/evidence.hpp"

#include <set>

#include "xchain/chain_sim.hpp"
#include "xchain/error.hpp"

namespace xchain {
namespace {

bool refs_witness(const CommitmentScheme& s, const ExpectedDeploy& want) {
  const auto* ref = std::get_if<WitnessRef>(&s);
  return ref && ref->witness_chain == want.witness_chain && ref->witness_contract == want.witness_contract &&
         ref->min_depth == want.depth;
}

bool effect_matches(const ChainTx& tx, const ExpectedDeploy& want) {
  const auto* deploy = std::get_if<DeployTx>(&tx.body());
  if (!deploy) return false;
  const auto* args = std::get_if<SwapContractArgs>(&deploy->args);
  return args && deploy->msg.sender == want.sender && args->recipient == want.recipient &&
         deploy->msg.value == want.amount && !args->expiry && refs_witness(args->rd, want) &&
         refs_witness(args->rf, want);
}

bool effect_matches(const ChainTx& tx, const ExpectedWitnessState& want) {
  const auto* call = std::get_if<CallTx>(&tx.body());
  if (!call || call->contract != want.witness_contract) return false;
  switch (want.state) {
    case WitnessState::redeem_authorized: return call->fn == CallFn::authorize_redeem;
    case WitnessState::refund_authorized: return call->fn == CallFn::authorize_refund;
    case WitnessState::published: return false;
  }
  return false;
}

}  // namespace

void Evidence::encode(Encoder& enc) const {
  enc.str("xchain.evidence.v1").str(chain_id).u32(static_cast<std::uint32_t>(headers.size()));
  for (const auto& h : headers) h.encode(enc);
  enc.u64(target_index);
  encode_tx_list(enc, target_txs);
  enc.blob(tx_id);
}

void EvidenceBundle::encode(Encoder& enc) const {
  enc.u32(static_cast<std::uint32_t>(per_edge.size()));
  for (const auto& e : per_edge) e.encode(enc);
}

AnchorHeader record_anchor(const SimChain& chain, std::uint32_t d) {
  if (chain.height() < d)
    throw Error(Errc::chain_too_short,
                chain.id() + " has height " + std::to_string(chain.height()) + " < " + std::to_string(d));
  return anchor_at(chain, chain.canonical()[chain.height() - d]);
}

AnchorHeader anchor_at(const SimChain& chain, const BlockId& block) {
  return AnchorHeader{chain.id(), chain.block(block).header, chain.params().pow_difficulty};
}

Evidence build_evidence(const SimChain& chain, const AnchorHeader& anchor, const Digest& tx_id, std::uint32_t d) {
  const BlockId anchor_id = anchor.header.digest();
  if (anchor.chain_id != chain.id() || !chain.is_canonical(anchor_id))
    throw Error(Errc::not_canonical, "anchor is not on the canonical chain of " + chain.id());
  const auto loc = chain.locate_tx(tx_id);
  if (!loc) throw Error(Errc::not_canonical, "tx " + tx_id.hex().substr(0, 12) + " is not canonical");
  if (loc->height <= anchor.header.height) throw Error(Errc::below_anchor, "tx is at or below the anchor");
  const std::uint64_t conf = chain.height() - loc->height;
  if (conf < d)
    throw Error(Errc::not_stable_yet, std::to_string(conf) + " confirmations, " + std::to_string(d) + " needed");

  Evidence e;
  e.chain_id = chain.id();
  const auto& canon = chain.canonical();
  for (std::uint64_t h = anchor.header.height + 1; h <= chain.height(); ++h) e.headers.push_back(chain.block(canon[h]).header);
  e.target_index = loc->height - anchor.header.height - 1;
  e.target_txs = chain.block(loc->block).txs;
  e.tx_id = tx_id;
  return e;
}

const ChainTx* evidence_target(const Evidence& e) {
  for (const auto& tx : e.target_txs)
    if (tx.compute_id() == e.tx_id) return &tx;
  return nullptr;
}

bool validate_evidence(const AnchorHeader& anchor, const Evidence& e, std::uint32_t d, const ExpectedEffect& expected) {
  if (e.chain_id != anchor.chain_id || e.headers.empty() || e.target_index >= e.headers.size()) return false;
  Digest prev = anchor.header.digest();
  std::uint64_t height = anchor.header.height;
  for (const auto& h : e.headers) {
    if (h.prev != prev || h.height != height + 1 || !pow_valid(h, anchor.pow_difficulty)) return false;
    prev = h.digest();
    height = h.height;
  }
  if (e.headers.size() - 1 - e.target_index < d) return false;
  if (payload_digest(e.target_txs) != e.headers[e.target_index].payload) return false;
  const ChainTx* tx = evidence_target(e);
  if (!tx) return false;
  return std::visit([&](const auto& want) { return effect_matches(*tx, want); }, expected);
}

bool verify_contracts(const WitnessRegistration& reg, const ChainId& witness_chain, const Digest& witness_contract,
                      const EvidenceBundle& bundle) {
  const auto& edges = reg.graph.edges();
  if (bundle.per_edge.size() != edges.size()) return false;
  std::set<Digest> seen;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& edge = edges[i];
    const auto& ev = bundle.per_edge[i];
    if (ev.chain_id != edge.chain || !seen.insert(ev.tx_id).second) return false;
    auto anchor = reg.anchors.find(edge.chain);
    auto from = reg.pks.find(edge.from);
    auto to = reg.pks.find(edge.to);
    if (anchor == reg.anchors.end() || from == reg.pks.end() || to == reg.pks.end()) return false;
    const ExpectedDeploy want{from->second, to->second, edge.amount, witness_chain, witness_contract, reg.depth};
    if (!validate_evidence(anchor->second, ev, reg.depth, want)) return false;
  }
  return true;
}

}  // namespace xchain
