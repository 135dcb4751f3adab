#pragma once

// Contract object model. All contract state lives in a LedgerState owned by a
// chain's block tree; it only changes through block application.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "xchain/commitment.hpp"
#include "xchain/tx.hpp"

namespace xchain {

/// Atomic swap template: s locks `amount` until redeemed to r or refunded to s.
/// A set `expiry` makes it the hashlock/timelock baseline contract.
struct SwapContract {
  PublicKey sender;
  PublicKey recipient;
  Amount amount = 0;
  ContractState state = ContractState::published;
  CommitmentScheme rd;
  CommitmentScheme rf;
  std::optional<Tick> expiry;

  bool timelocked() const { return expiry.has_value(); }
  bool operator==(const SwapContract&) const = default;
};

/// Coordinator contract on the witness chain.
struct WitnessContract {
  std::shared_ptr<const WitnessRegistration> reg;
  WitnessState state = WitnessState::published;
  PublicKey registrant;

  bool operator==(const WitnessContract& o) const {
    return reg == o.reg && state == o.state && registrant == o.registrant;
  }
};

using Contract = std::variant<SwapContract, WitnessContract>;

enum class LogKind : std::uint8_t {
  transfer,
  deployed,
  redeemed,
  refunded,
  timelock_refund,
  authorized_redeem,
  authorized_refund,
};
std::string_view to_string(LogKind kind);

struct LogEntry {
  LogKind kind = LogKind::transfer;
  Digest contract;
  Digest tx;  // zero for timelock refunds, which have no tx
  bool operator==(const LogEntry&) const = default;
};

/// Block-level facts a contract may consult while executing.
struct ApplyContext {
  ChainId chain_id;
  Tick tick = 0;
  std::uint64_t height = 0;
  std::uint32_t pow_difficulty = 0;
  // True iff the digest is the parent of the block being applied or one of its ancestors.
  std::function<bool(const Digest&)> in_history;
};

class LedgerState {
 public:
  LedgerState() = default;
  explicit LedgerState(std::map<PublicKey, Amount> balances) : balances_(std::move(balances)) {}

  Amount balance(const PublicKey& who) const;
  void credit(const PublicKey& who, Amount amount);
  void debit(const PublicKey& who, Amount amount);  // throws InsufficientFunds

  const Contract* find(const Digest& id) const;
  const SwapContract* swap(const Digest& id) const;
  const WitnessContract* witness(const Digest& id) const;
  SwapContract& swap_mut(const Digest& id);        // throws UnknownContract
  WitnessContract& witness_mut(const Digest& id);  // throws UnknownContract
  void insert(const Digest& id, Contract c);       // throws InvalidTx on collision

  const std::map<PublicKey, Amount>& balances() const { return balances_; }
  const std::map<Digest, Contract>& contracts() const { return contracts_; }

  /// Sum of balances plus amounts locked in published swap contracts.
  Amount total_supply() const;

  bool operator==(const LedgerState&) const = default;

 private:
  std::map<PublicKey, Amount> balances_;
  std::map<Digest, Contract> contracts_;
};

Digest deploy_swap_contract(LedgerState& state, const Digest& deploy_tx_id, const DeployMessage& msg,
                            const SwapContractArgs& args);
Digest deploy_witness_contract(LedgerState& state, const Digest& deploy_tx_id, const DeployMessage& msg,
                               const std::shared_ptr<const WitnessRegistration>& reg);

bool is_redeemable(const SwapContract& c, const CallArg& witness);
bool is_refundable(const SwapContract& c, const CallArg& witness);

/// Throws WrongState or InvalidSecret; state is untouched on failure.
ContractState redeem(LedgerState& state, const Digest& id, const CallArg& secret, const ApplyContext& ctx);
ContractState refund(LedgerState& state, const Digest& id, const CallArg& secret, const ApplyContext& ctx);

/// Throws WrongState or BadEvidence.
WitnessState witness_authorize_redeem(LedgerState& state, const Digest& id, const EvidenceBundle& bundle,
                                      const ApplyContext& ctx);
WitnessState witness_authorize_refund(LedgerState& state, const Digest& id);

/// Refunds a timelocked contract once `now` reaches its expiry.
std::optional<ContractState> timelock_tick(LedgerState& state, const Digest& id, Tick now);

/// Runs timelock_tick over every timelocked contract, in contract-id order.
void apply_timelocks(LedgerState& state, const ApplyContext& ctx, std::vector<LogEntry>& log);

/// Applies one tx. Returns the rejection reason on failure (state untouched).
std::optional<std::string> apply_tx(LedgerState& state, const ChainTx& tx, const ApplyContext& ctx,
                                    std::vector<LogEntry>& log);

}  // namespace xchain
