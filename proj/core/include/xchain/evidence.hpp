#pragma once

// Cross-chain evidence: a header chain linking forward from a stored stable
// anchor, plus the full transaction list of the block that holds the target
// transaction. Validation needs only the anchor and the evidence itself.

#include <cstdint>
#include <variant>
#include <vector>

#include "xchain/commitment.hpp"
#include "xchain/tx.hpp"

namespace xchain {

class SimChain;

struct Evidence {
  ChainId chain_id;
  std::vector<BlockHeader> headers;  // anchor+1 .. tip at build time
  std::size_t target_index = 0;      // index into headers of the block holding the tx
  std::vector<ChainTx> target_txs;   // that block's full tx list
  Digest tx_id;

  void encode(Encoder& enc) const;
};

/// One evidence per graph edge, in the graph's canonical edge order.
struct EvidenceBundle {
  std::vector<Evidence> per_edge;

  void encode(Encoder& enc) const;
};

/// A swap contract deployed with the edge's sender, recipient and amount whose
/// redeem and refund schemes both reference the given witness contract.
struct ExpectedDeploy {
  PublicKey sender;
  PublicKey recipient;
  Amount amount = 0;
  ChainId witness_chain;
  Digest witness_contract;
  std::uint32_t depth = 1;
};

/// A successful state change of the witness contract to `state`.
struct ExpectedWitnessState {
  Digest witness_contract;
  WitnessState state = WitnessState::redeem_authorized;
};

using ExpectedEffect = std::variant<ExpectedDeploy, ExpectedWitnessState>;

/// Header at depth exactly d below the canonical tip. Throws ChainTooShort.
AnchorHeader record_anchor(const SimChain& chain, std::uint32_t d);

/// Anchor on a specific stored block (used for the witness contract's own
/// deployment block).
AnchorHeader anchor_at(const SimChain& chain, const BlockId& block);

/// Minimal evidence for a canonical tx: headers anchor+1 through the tip.
/// Throws NotCanonical, BelowAnchor or NotStableYet.
Evidence build_evidence(const SimChain& chain, const AnchorHeader& anchor, const Digest& tx_id, std::uint32_t d);

bool validate_evidence(const AnchorHeader& anchor, const Evidence& e, std::uint32_t d, const ExpectedEffect& expected);

/// The witness contract's VerifyContracts check over a bundle.
bool verify_contracts(const WitnessRegistration& reg, const ChainId& witness_chain, const Digest& witness_contract,
                      const EvidenceBundle& bundle);

/// Target tx of a piece of evidence located by recomputed id, or nullptr.
const ChainTx* evidence_target(const Evidence& e);

}  // namespace xchain
