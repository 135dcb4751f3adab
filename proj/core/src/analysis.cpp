#include "xchain/analysis.hpp"

#include <algorithm>
#include <sstream>

#include "xchain/error.hpp"

namespace xchain {

Tick latency_baseline(std::optional<std::uint32_t> diam, Tick delta) {
  if (!diam) throw Error(Errc::unbounded_diameter, "graph is not strongly connected");
  if (*diam < 2) throw Error(Errc::invalid_params, "diameter must be at least 2");
  if (delta < 1) throw Error(Errc::invalid_params, "delta must be positive");
  return 2 * delta * static_cast<Tick>(*diam);
}

Tick latency_ac3wn(Tick delta) {
  if (delta < 1) throw Error(Errc::invalid_params, "delta must be positive");
  return 4 * delta;
}

Amount total_fee(Protocol protocol, std::uint64_t n_edges, const FeeSchedule& fees) {
  if (n_edges < 1) throw Error(Errc::invalid_params, "at least one edge required");
  const std::uint64_t contracts = protocol == Protocol::ac3wn ? n_edges + 1 : n_edges;
  return contracts * (fees.deploy + fees.call);
}

Rational fee_overhead(std::uint64_t n_edges, const FeeSchedule& fees) {
  const Amount base = total_fee(Protocol::baseline, n_edges, fees);
  if (base == 0) throw Error(Errc::invalid_params, "fees must not both be zero");
  const Amount wn = total_fee(Protocol::ac3wn, n_edges, fees);
  return Rational(static_cast<std::int64_t>(wn - base), static_cast<std::int64_t>(base));
}

Rational min_throughput(const std::vector<Rational>& tps) {
  if (tps.empty()) throw Error(Errc::empty_list, "no chains given");
  return *std::min_element(tps.begin(), tps.end());
}

Rational min_throughput(const ThroughputTable& table, const std::vector<ChainId>& involved, const ChainId& witness) {
  std::vector<Rational> tps;
  auto lookup = [&](const ChainId& id) {
    auto it = table.find(id);
    if (it == table.end()) throw Error(Errc::invalid_params, "no throughput for chain " + id);
    tps.push_back(it->second);
  };
  for (const auto& id : involved) lookup(id);
  lookup(witness);
  return min_throughput(tps);
}

std::uint64_t min_confirmation_depth(const SecurityParams& p) {
  if (p.hourly_attack_cost <= Rational(0) || p.blocks_per_hour <= Rational(0) || p.value_at_risk < Rational(0))
    throw Error(Errc::invalid_params, "need C_h > 0, d_h > 0 and V_a >= 0");
  const Rational threshold = p.value_at_risk * p.blocks_per_hour / p.hourly_attack_cost;
  const auto floor = threshold.numerator() / threshold.denominator();
  return static_cast<std::uint64_t>(floor) + 1;
}

std::vector<LatencyRow> latency_sweep(std::uint32_t lo, std::uint32_t hi, Tick delta) {
  if (lo > hi) throw Error(Errc::invalid_params, "empty diameter range");
  std::vector<LatencyRow> rows;
  for (std::uint32_t d = lo; d <= hi; ++d) rows.push_back({d, latency_baseline(d, delta), latency_ac3wn(delta)});
  return rows;
}

std::string latency_csv(const std::vector<LatencyRow>& rows) {
  std::ostringstream out;
  out << "diam,baseline_latency,ac3wn_latency\n";
  for (const auto& r : rows) out << r.diam << ',' << r.baseline << ',' << r.ac3wn << '\n';
  return out.str();
}

std::string throughput_csv(const ThroughputTable& table) {
  std::ostringstream out;
  out << "chain,tps\n";
  for (const auto& [id, tps] : table) out << id << ',' << format_rational(tps) << '\n';
  return out.str();
}

Comparison measured_vs_predicted(const RunOutcome& outcome, const Scenario& sc) {
  Comparison c;
  c.protocol = outcome.protocol;
  c.measured_latency = outcome.latency_deltas();
  const std::uint64_t n = sc.graph.edges().size();
  if (outcome.protocol == Protocol::ac3wn) {
    c.predicted_latency = Rational(latency_ac3wn(1));
  } else if (outcome.protocol == Protocol::baseline) {
    c.predicted_latency = Rational(latency_baseline(diameter(sc.graph), 1));
  }
  if (c.measured_latency && c.predicted_latency) {
    c.deviation = *c.measured_latency - *c.predicted_latency;
    if (c.deviation->numerator() != 0)
      c.flags.push_back("latency deviates by " + format_rational(*c.deviation) + " delta");
  } else if (!c.measured_latency) {
    c.flags.push_back("run did not finish");
  }

  for (const auto& [_, f] : outcome.fees) {
    c.deploys += f.deploys;
    c.calls += f.calls;
  }
  c.predicted_deploys = outcome.protocol == Protocol::ac3wn ? n + 1 : n;
  c.predicted_calls = c.predicted_deploys;
  c.measured_fee = c.deploys * sc.fees.deploy + c.calls * sc.fees.call;
  c.predicted_fee = total_fee(outcome.protocol, n, sc.fees);
  if (c.deploys != c.predicted_deploys)
    c.flags.push_back("deploys " + std::to_string(c.deploys) + " vs " + std::to_string(c.predicted_deploys));
  if (c.calls != c.predicted_calls)
    c.flags.push_back("calls " + std::to_string(c.calls) + " vs " + std::to_string(c.predicted_calls));
  if (c.measured_fee != c.predicted_fee)
    c.flags.push_back("fee " + std::to_string(c.measured_fee) + " vs " + std::to_string(c.predicted_fee));
  return c;
}

}  // namespace xchain
