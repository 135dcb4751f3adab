#pragma once

#include <cstdint>
#include <string_view>
#include <variant>

#include "xchain/block.hpp"
#include "xchain/swap_graph.hpp"

namespace xchain {

enum class ContractState : std::uint8_t { published, redeemed, refunded };
enum class WitnessState : std::uint8_t { published, redeem_authorized, refund_authorized };

std::string_view to_string(ContractState s);  // "P" / "RD" / "RF"
std::string_view to_string(WitnessState s);   // "P" / "RD_auth" / "RF_auth"

/// Header of a stable block of some validated chain, stored by a validator
/// contract at registration time. Evidence must link forward from it.
struct AnchorHeader {
  ChainId chain_id;
  BlockHeader header;
  std::uint32_t pow_difficulty = 0;

  void encode(Encoder& enc) const;
  bool operator==(const AnchorHeader&) const = default;
};

/// Redeem/refund are both conditioned on a signature from a known witness
/// over (ms, tag).
struct TrustedWitness {
  Multisignature ms;
  PublicKey witness_pk;
  bool operator==(const TrustedWitness&) const = default;
};

/// Redeem/refund are conditioned on the state of a witness contract living on
/// another chain, proven by evidence at least `min_depth` deep.
struct WitnessRef {
  ChainId witness_chain;
  Digest witness_contract;
  std::uint32_t min_depth = 1;
  AnchorHeader anchor;
  bool operator==(const WitnessRef&) const = default;
};

struct HashLock {
  Digest hash;
  bool operator==(const HashLock&) const = default;
};

using CommitmentScheme = std::variant<TrustedWitness, WitnessRef, HashLock>;

void encode(Encoder& enc, const CommitmentScheme& scheme);

enum class WitnessTag : std::uint8_t { redeem = 0x01, refund = 0x02 };

/// Message Trent signs: canonical (ms, tag).
Bytes trusted_witness_message(const Multisignature& ms, WitnessTag tag);

}  // namespace xchain
