#pragma once

// End-to-end protocol runs: participant actors driven by one tick loop over a
// set of simulated chains, with fault injection and an atomicity verdict.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xchain/chain_sim.hpp"
#include "xchain/evidence.hpp"
#include "xchain/swap_graph.hpp"

namespace xchain {

using ChainSet = std::map<ChainId, SimChain>;

enum class Protocol { ac3tw, ac3wn, baseline };
std::string_view to_string(Protocol p);  // "AC3TW" / "AC3WN" / "Baseline"
std::optional<Protocol> parse_protocol(std::string_view text);

struct FeeSchedule {
  Amount deploy = 0;
  Amount call = 0;
};

struct SecurityParams {
  Rational value_at_risk{0};
  Rational hourly_attack_cost{0};
  Rational blocks_per_hour{0};
};

/// One-shot fork injection. When the target block (the witness decision on
/// the witness chain, else the first contract deployment on that chain)
/// reaches `at_confirmations`, a branch of `branch_len` blocks is mined on its
/// parent. Empty fields are drawn per seed: confirmations in [0, d-1], length
/// in [1, d-1].
struct AdversaryPlan {
  ChainId chain;
  std::optional<std::uint32_t> at_confirmations;
  std::optional<std::uint32_t> branch_len;
};

struct Fault {
  ParticipantId participant;
  Behavior behavior;
};

struct Scenario {
  std::string name;
  std::string digest;  // of the source document, when loaded from one
  SwapGraph graph;
  Protocol protocol = Protocol::ac3wn;
  std::vector<ChainParams> chains;  // every chain, asset and witness
  std::optional<ChainId> witness_chain;
  // Explicit genesis balances; chains left out fund every sender with the
  // sum of its outgoing edges on that chain.
  std::map<ChainId, std::map<ParticipantId, Amount>> balances;
  std::uint32_t d = 6;
  Tick delta = 0;  // 0 means max over chains of block_interval * (d + 1)
  FeeSchedule fees;
  std::optional<SecurityParams> security;
  std::vector<Fault> faults;
  std::optional<AdversaryPlan> adversary;
  std::vector<std::uint64_t> seeds;
  Tick horizon = 0;  // 0 means 50 * delta
  std::uint32_t refund_timeout_deltas = 2;
  bool trent_race = false;

  Tick effective_delta() const;
  Tick effective_horizon() const;
  const ChainParams& chain(const ChainId& id) const;  // throws ScenarioInvalid
};

enum class Verdict { all_redeemed, all_refunded, atomicity_violated, stuck };
std::string_view to_string(Verdict v);  // "AllRedeemed" ...

/// State per edge; empty means the edge's contract was never deployed.
Verdict compute_verdict(const std::vector<std::optional<ContractState>>& edges);

struct EdgeOutcome {
  SwapEdge edge;
  std::optional<Digest> contract;
  std::optional<ContractState> state;
  std::optional<Tick> expiry;
};

struct PhaseMark {
  std::string name;
  Tick tick = 0;
};

struct TraceEvent {
  Tick tick = 0;
  std::string actor;  // participant id, "trent", "adversary" or "chain:<id>"
  std::string event;
  std::string detail;
};

struct FeeCount {
  std::uint64_t deploys = 0;
  std::uint64_t calls = 0;
};

struct RunOutcome {
  Protocol protocol = Protocol::ac3wn;
  std::uint64_t seed = 0;
  Tick delta = 1;
  Verdict verdict = Verdict::stuck;
  std::string verdict_detail;
  std::vector<EdgeOutcome> edges;
  std::optional<WitnessState> witness_state;
  bool witness_converged = false;  // terminal and at least d deep on canon
  std::map<ChainId, std::map<ParticipantId, Amount>> balances;
  std::vector<PhaseMark> phases;
  Tick t_start = 0;
  std::optional<Tick> t_end;
  std::map<ChainId, FeeCount> fees;
  std::uint64_t trent_signatures = 0;
  std::uint64_t reorgs = 0;
  std::vector<TraceEvent> trace;
  std::shared_ptr<const ChainSet> chains;  // final block trees

  std::optional<Tick> latency_ticks() const;
  std::optional<Rational> latency_deltas() const;
  std::optional<Tick> phase(std::string_view name) const;
};

/// Trent's key/value store: graph digest -> RD or RF signature, write-once.
class TrentStore {
 public:
  enum class Decision { none, redeem, refund };

  explicit TrentStore(KeyPair keys);

  const PublicKey& pk() const { return keys_.pk; }

  /// Throws ScenarioInvalid on re-registration or an invalid multisignature.
  void register_graph(const Multisignature& ms, const SwapGraph& graph,
                      const std::map<ParticipantId, PublicKey>& pks);
  bool registered(const Digest& graph_digest) const { return kv_.count(graph_digest) != 0; }

  /// Signs (ms, RD) when the key is unset and every contract was verified;
  /// returns the stored RD signature on repeats and nothing once RF is set.
  std::optional<Signature> request_redeem(const Multisignature& ms, bool contracts_verified);
  std::optional<Signature> request_refund(const Multisignature& ms);

  Decision decision(const Digest& graph_digest) const;
  std::uint64_t signatures_issued() const { return issued_; }

 private:
  struct Entry {
    Decision decision = Decision::none;
    Signature sig;
  };
  KeyPair keys_;
  std::map<Digest, Entry> kv_;
  std::uint64_t issued_ = 0;
};

std::vector<Participant> make_participants(const SwapGraph& graph, const std::vector<Fault>& faults);
std::map<ParticipantId, PublicKey> participant_keys(const std::vector<Participant>& ps);

/// Genesis chains for a scenario, each pre-mined with d empty blocks so that
/// d-deep anchors exist from tick 0.
ChainSet make_chains(const Scenario& sc, const std::vector<Participant>& ps, Rng& rng);

std::shared_ptr<const WitnessRegistration> make_registration(const SwapGraph& graph,
                                                              const std::vector<Participant>& ps,
                                                              const ChainSet& chains, std::uint32_t d);

SwapContractArgs witness_ref_args(const PublicKey& recipient, const ChainId& witness_chain,
                                  const Digest& witness_contract, std::uint32_t d, const AnchorHeader& anchor);
SwapContractArgs trusted_args(const PublicKey& recipient, const Multisignature& ms, const PublicKey& trent);

/// Evidence bundle over the deploy txs of every edge, canonical edge order.
/// Throws NotCanonical / NotStableYet / BelowAnchor when not yet buildable.
std::shared_ptr<const EvidenceBundle> build_bundle(const WitnessRegistration& reg, const ChainSet& chains,
                                                    const std::vector<Digest>& deploy_txs);

/// Trent's check: every edge has a stable canonical deploy locked to (ms, pk).
bool trusted_contracts_deployed(const SwapGraph& graph, const std::map<ParticipantId, PublicKey>& pks,
                                const Multisignature& ms, const PublicKey& trent, const ChainSet& chains,
                                const std::vector<std::optional<Digest>>& deploy_txs, std::uint32_t d);

/// Rounds and expiries of the hashlock/timelock baseline. Throws
/// BaselineInapplicable unless the graph is leader_acyclic.
struct BaselinePlan {
  ParticipantId leader;
  std::vector<std::uint32_t> round;  // per edge, 1-based
  std::uint32_t rounds = 0;
  std::vector<Tick> expiry;  // per edge, (2k - round + 1) * delta
};
BaselinePlan plan_baseline(const SwapGraph& graph, Tick delta);

RunOutcome run_ac3tw(const Scenario& sc, std::uint64_t seed);
RunOutcome run_ac3wn(const Scenario& sc, std::uint64_t seed);
RunOutcome run_baseline(const Scenario& sc, std::uint64_t seed);
RunOutcome run_scenario(const Scenario& sc, std::uint64_t seed);

/// Final canonical balances of every participant on every chain.
std::map<ChainId, std::map<ParticipantId, Amount>> participant_balances(const ChainSet& chains,
                                                                         const std::vector<Participant>& ps);

/// Canonical deploy and call counts per chain.
std::map<ChainId, FeeCount> count_fees(const ChainSet& chains);

}  // namespace xchain
