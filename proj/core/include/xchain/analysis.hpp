#pragma once

// Closed-form latency, fee, throughput and confirmation-depth calculators,
// plus a comparison of simulated runs against them. Exact arithmetic only.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xchain/protocols.hpp"
#include "xchain/rational.hpp"

namespace xchain {

using ThroughputTable = std::map<ChainId, Rational>;

/// 2 * delta * diam. Throws UnboundedDiameter for an empty diameter and
/// InvalidParams for diam < 2 or delta < 1.
Tick latency_baseline(std::optional<std::uint32_t> diam, Tick delta);

/// 4 * delta regardless of the graph.
Tick latency_ac3wn(Tick delta);

/// Baseline and AC3TW: N * (f_d + f_fc); AC3WN: (N + 1) * (f_d + f_fc).
Amount total_fee(Protocol protocol, std::uint64_t n_edges, const FeeSchedule& fees);

/// (AC3WN - baseline) / baseline, which reduces to 1/N.
Rational fee_overhead(std::uint64_t n_edges, const FeeSchedule& fees);

/// Throws EmptyList.
Rational min_throughput(const std::vector<Rational>& tps);

/// Minimum over the involved chains and the witness chain. Throws
/// InvalidParams for chains missing from the table.
Rational min_throughput(const ThroughputTable& table, const std::vector<ChainId>& involved, const ChainId& witness);

/// Smallest integer d with d > V_a * d_h / C_h (at least 1).
std::uint64_t min_confirmation_depth(const SecurityParams& p);

struct LatencyRow {
  std::uint32_t diam = 0;
  Tick baseline = 0;
  Tick ac3wn = 0;
};

std::vector<LatencyRow> latency_sweep(std::uint32_t lo, std::uint32_t hi, Tick delta);
std::string latency_csv(const std::vector<LatencyRow>& rows);
std::string throughput_csv(const ThroughputTable& table);

struct Comparison {
  Protocol protocol = Protocol::ac3wn;
  std::optional<Rational> measured_latency;   // in delta units
  std::optional<Rational> predicted_latency;  // none for AC3TW
  std::optional<Rational> deviation;          // measured - predicted
  std::uint64_t deploys = 0;
  std::uint64_t calls = 0;
  std::uint64_t predicted_deploys = 0;
  std::uint64_t predicted_calls = 0;
  Amount measured_fee = 0;
  Amount predicted_fee = 0;
  std::vector<std::string> flags;  // one line per mismatch

  bool matches() const { return flags.empty(); }
};

Comparison measured_vs_predicted(const RunOutcome& outcome, const Scenario& sc);

}  // namespace xchain
