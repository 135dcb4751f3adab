#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <variant>

#include "xchain/commitment.hpp"
#include "xchain/crypto.hpp"
#include "xchain/swap_graph.hpp"

namespace xchain {

struct Evidence;
struct EvidenceBundle;

/// Constructor arguments of a witness contract: the signed graph, participant
/// keys, and one stable anchor per asset chain for validating deploy evidence.
struct WitnessRegistration {
  SwapGraph graph;
  std::map<ParticipantId, PublicKey> pks;
  Multisignature ms;
  std::map<ChainId, AnchorHeader> anchors;
  std::uint32_t depth = 1;

  void encode(Encoder& enc) const;
};

struct TransferTx {
  PublicKey from;
  PublicKey to;
  Amount amount = 0;
  Signature auth;
};

/// msg.sender / msg.value of a deployment.
struct DeployMessage {
  PublicKey sender;
  Amount value = 0;
};

struct SwapContractArgs {
  PublicKey recipient;
  CommitmentScheme rd;
  CommitmentScheme rf;
  std::optional<Tick> expiry;  // set for timelocked baseline contracts
};

struct DeployTx {
  DeployMessage msg;
  std::variant<SwapContractArgs, std::shared_ptr<const WitnessRegistration>> args;
  Signature auth;
};

enum class CallFn : std::uint8_t { redeem = 1, refund = 2, authorize_redeem = 3, authorize_refund = 4 };
std::string_view to_string(CallFn fn);

struct Preimage {
  Bytes value;
};

using CallArg = std::variant<std::monostate, Signature, Preimage, std::shared_ptr<const Evidence>,
                             std::shared_ptr<const EvidenceBundle>>;

struct CallTx {
  Digest contract;
  CallFn fn = CallFn::redeem;
  CallArg arg;
};

enum class TxKind : std::uint8_t { asset_transfer = 1, contract_deploy = 2, contract_call = 3 };
std::string_view to_string(TxKind kind);

class ChainTx {
 public:
  using Body = std::variant<TransferTx, DeployTx, CallTx>;

  ChainTx(Body body, std::uint64_t nonce);

  const Body& body() const { return body_; }
  std::uint64_t nonce() const { return nonce_; }
  const Digest& id() const { return id_; }
  TxKind kind() const;

  void encode(Encoder& enc) const;
  /// Recomputes the id from content; validators use this instead of id().
  Digest compute_id() const;

 private:
  Body body_;
  std::uint64_t nonce_ = 0;
  Digest id_;
};

/// Bytes covered by a transfer/deploy authorization signature. The chain id
/// is included so a signed tx cannot be replayed on another chain.
Bytes signing_bytes(const ChainId& chain, const ChainTx::Body& body, std::uint64_t nonce);

ChainTx make_transfer(const ChainId& chain, const KeyPair& from, const PublicKey& to, Amount amount,
                      std::uint64_t nonce);
ChainTx make_swap_deploy(const ChainId& chain, const KeyPair& sender, Amount value, SwapContractArgs args,
                         std::uint64_t nonce);
ChainTx make_witness_deploy(const ChainId& chain, const KeyPair& sender,
                            std::shared_ptr<const WitnessRegistration> reg, std::uint64_t nonce);
ChainTx make_call(const Digest& contract, CallFn fn, CallArg arg, std::uint64_t nonce);

bool authorization_valid(const ChainId& chain, const ChainTx& tx);

void encode_tx_list(Encoder& enc, std::span<const ChainTx> txs);
Digest payload_digest(std::span<const ChainTx> txs);

/// contract_id = digest of the deploying tx id.
Digest contract_id_for(const Digest& deploy_tx_id);

}  // namespace xchain
