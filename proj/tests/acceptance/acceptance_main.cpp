// Acceptance driver: one PASS/FAIL line per criterion, exit 0 only when all pass.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evidence_fuzz.hpp"
#include "support.hpp"
#include "xchain/analysis.hpp"
#include "xchain/crypto.hpp"
#include "xchain/interleave.hpp"
#include "xchain/scenario.hpp"

namespace {

using namespace xchain;
using xchain::testing::bundled;

struct Result {
  bool pass = true;
  std::vector<std::string> problems;
  std::ostringstream out;  // deterministic transcript compared by criterion 10

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      problems.push_back(what);
    }
  }
};

using Criterion = std::function<void(Result&)>;

struct Entry {
  int id;
  const char* name;
  double limit_s;
  Criterion fn;
};

std::string str(const Rational& r) { return format_rational(r); }

std::uint64_t total(const std::map<ChainId, FeeCount>& fees, bool deploys) {
  std::uint64_t n = 0;
  for (const auto& [chain, f] : fees) n += deploys ? f.deploys : f.calls;
  return n;
}

bool has_event(const RunOutcome& o, const std::string& event, const std::string& part) {
  for (const auto& t : o.trace)
    if (t.event == event && t.detail.find(part) != std::string::npos) return true;
  return false;
}

void latency(Result& r) {
  for (Tick delta : {Tick{1}, Tick{7}}) {
    const auto rows = latency_sweep(2, 10, delta);
    r.check(rows.size() == 9, "sweep covers diam 2..10");
    for (const auto& row : rows) {
      r.check(row.baseline == 2 * delta * row.diam, "baseline = 2*delta*diam at diam " + std::to_string(row.diam));
      r.check(row.ac3wn == 4 * delta, "ac3wn = 4*delta at diam " + std::to_string(row.diam));
    }
    r.out << latency_csv(rows);
  }
  for (const char* name : {"two_party_baseline", "two_party_ac3wn"}) {
    const auto sc = bundled(name);
    const auto o = run_scenario(sc, sc.seeds.front());
    const Tick delta = sc.effective_delta();
    const Tick predicted =
        sc.protocol == Protocol::baseline ? latency_baseline(diameter(sc.graph), delta) : latency_ac3wn(delta);
    r.check(o.verdict == Verdict::all_redeemed, std::string(name) + " redeems");
    r.check(o.latency_deltas() && *o.latency_deltas() == Rational(4), std::string(name) + " measures 4 delta");
    r.check(o.latency_ticks() && *o.latency_ticks() == predicted, std::string(name) + " matches the closed form");
    r.out << name << ' ' << (o.latency_deltas() ? str(*o.latency_deltas()) : "none") << '\n';
  }
}

// N parties in a ring, one asset chain per edge.
Scenario ring(std::size_t n) {
  Scenario sc = bundled("two_party_ac3wn");
  const ChainParams proto = sc.chains.front();
  std::vector<ChainParams> chains;
  std::vector<ParticipantId> vs;
  std::vector<SwapEdge> es;
  for (std::size_t i = 0; i < n; ++i) vs.push_back("p" + std::to_string(i));
  for (std::size_t i = 0; i < n; ++i) {
    ChainParams c = proto;
    c.chain_id = "c" + std::to_string(i);
    c.unit = "U" + std::to_string(i);
    chains.push_back(c);
    es.push_back(SwapEdge{vs[i], vs[(i + 1) % n], 10 + i, c.unit, c.chain_id});
  }
  for (const auto& c : sc.chains)
    if (sc.witness_chain && c.chain_id == *sc.witness_chain) chains.push_back(c);
  sc.name = "ring" + std::to_string(n);
  sc.digest.clear();
  sc.graph = SwapGraph(vs, es, 0);
  sc.chains = chains;
  sc.balances.clear();
  return sc;
}

void overhead(Result& r) {
  const FeeSchedule fees = bundled("two_party_ac3wn").fees;
  for (std::uint64_t n : {1u, 2u, 5u, 10u}) {
    const Amount base = total_fee(Protocol::baseline, n, fees);
    const Amount wn = total_fee(Protocol::ac3wn, n, fees);
    const Rational ratio(static_cast<std::int64_t>(wn - base), static_cast<std::int64_t>(base));
    r.check(ratio == Rational(1, static_cast<std::int64_t>(n)), "fee ratio 1/N at N=" + std::to_string(n));
    r.check(fee_overhead(n, fees) == ratio, "fee_overhead agrees at N=" + std::to_string(n));
    r.out << n << ' ' << base << ' ' << wn << ' ' << str(ratio) << '\n';
  }
  std::vector<Scenario> runs{bundled("two_party_ac3wn"), bundled("cyclic3_ac3wn"), ring(5)};
  for (const auto& sc : runs) {
    const auto o = run_scenario(sc, 1);
    const std::uint64_t n = sc.graph.edges().size();
    const auto deploys = total(o.fees, true), calls = total(o.fees, false);
    r.check(o.verdict == Verdict::all_redeemed, sc.name + " redeems");
    r.check(deploys == n + 1, sc.name + " records N+1 deploys");
    r.check(calls == n + 1, sc.name + " records N+1 calls");
    r.out << sc.name << " N=" << n << " deploys=" << deploys << " calls=" << calls << '\n';
  }
}

void throughput(Result& r) {
  const ThroughputTable table{{"btc", Rational(7)}, {"eth", Rational(25)}, {"ltc", Rational(56)}, {"bch", Rational(61)}};
  const auto outside = min_throughput(table, {"eth", "ltc"}, "btc");
  const auto inside = min_throughput(table, {"eth", "ltc"}, "eth");
  r.check(outside == Rational(7), "eth+ltc with btc witness gives 7");
  r.check(inside == Rational(25), "eth+ltc with eth witness gives 25");
  r.out << throughput_csv(table) << str(outside) << ' ' << str(inside) << '\n';
}

void depth(Result& r) {
  const SecurityParams p{Rational(1'000'000), Rational(300'000), Rational(6)};
  const auto d = min_confirmation_depth(p);
  const Rational bound = p.value_at_risk * p.blocks_per_hour / p.hourly_attack_cost;
  std::uint64_t scan = 0;
  for (std::uint64_t k = 1; k <= 1000 && !scan; ++k)
    if (Rational(static_cast<std::int64_t>(k)) > bound) scan = k;
  r.check(d == 21, "minimal strict depth is 21");
  r.check(scan == d, "brute-force scan agrees");
  r.out << str(bound) << ' ' << d << ' ' << scan << '\n';
}

void interleavings(Result& r) {
  for (const char* name : {"interleave_ac3wn_2edge", "interleave_ac3wn_3edge"}) {
    const auto sc = bundled(name);
    const auto rep = run_interleavings(sc, 12, 100'000);
    r.check(sc.graph.edges().size() == (std::string(name).find("3edge") != std::string::npos ? 3u : 2u),
            std::string(name) + " edge count");
    for (const auto& c : sc.chains) r.check(c.fork_probability == 0.0, std::string(name) + " is fork free");
    r.check(rep.schedules > 0 && rep.schedules <= 100'000, std::string(name) + " schedule count in range");
    r.check(rep.violations == 0, std::string(name) + " has no violating schedule");
    r.out << interleave_to_json(rep).dump() << '\n';
  }
}

void forked(Result& r) {
  for (const auto& [name, eps] : {std::pair{"forked_eps01", 0.1}, std::pair{"forked_eps03", 0.3}}) {
    const auto sc = bundled(name);
    r.check(sc.seeds.size() >= 1000, std::string(name) + " has at least 1000 seeds");
    r.check(sc.d == 6, std::string(name) + " uses d = 6");
    r.check(sc.adversary.has_value(), std::string(name) + " has an adversary plan");
    for (const auto& c : sc.chains) r.check(c.fork_probability == eps, std::string(name) + " epsilon");
    const auto batch = run_batch(sc, sc.seeds);
    std::size_t violated = 0, stuck = 0, converged = 0, long_forks = 0;
    for (const auto& o : batch.outcomes) {
      violated += o.verdict == Verdict::atomicity_violated;
      stuck += o.verdict == Verdict::stuck;
      converged += o.witness_converged;
      for (const auto& t : o.trace)
        if (t.event == "fork") {
          const auto len = std::stoul(t.detail.substr(t.detail.find("branch of ") + 10));
          long_forks += len >= sc.d;
        }
    }
    r.check(violated == 0, std::string(name) + ": " + std::to_string(violated) + " AtomicityViolated");
    r.check(stuck == 0, std::string(name) + ": " + std::to_string(stuck) + " Stuck");
    r.check(converged == batch.outcomes.size(), std::string(name) + ": witness did not converge everywhere");
    r.check(long_forks == 0, std::string(name) + ": fork plan of length >= d");
    std::string all;
    for (const auto& line : batch.lines) all += line + '\n';
    r.out << name << ' ' << batch.outcomes.size() << ' ' << sha256(all).hex() << '\n';
  }
}

void baseline_crash(Result& r) {
  const auto sc = bundled("two_party_baseline_crash");
  const auto o = run_scenario(sc, sc.seeds.front());
  r.check(o.verdict == Verdict::atomicity_violated, "verdict is AtomicityViolated (CLI exit 1)");
  for (const auto& e : o.edges) {
    const auto it = o.balances.find(e.edge.chain);
    const Amount held = it == o.balances.end() || !it->second.count("alice") ? 0 : it->second.at("alice");
    r.check(held >= e.edge.amount, "alice holds the " + e.edge.unit + " asset");
  }
  std::optional<Tick> t1, t2;
  for (const auto& e : o.edges) (e.edge.from == "alice" ? t1 : t2) = e.expiry;
  r.check(t1 && t2 && *t1 > *t2, "alice's timelock outlasts bob's");
  r.check(t1 && has_event(o, "timelock_refund", "expiry " + std::to_string(*t1)), "trace shows the t1 refund");
  const auto replay = bundled("interleave_baseline_crash");
  r.check(run_interleavings(replay, 12, 100'000).violations > 0, "the schedule space contains the violation");
  r.out << run_record(o, sc).dump() << '\n';
}

// Every vertex-deleted subgraph still contains a cycle.
bool every_deletion_cyclic(const SwapGraph& g) {
  for (const auto& skip : g.vertices()) {
    std::map<ParticipantId, int> indeg;
    for (const auto& v : g.vertices())
      if (v != skip) indeg[v];
    for (const auto& e : g.edges())
      if (e.from != skip && e.to != skip) ++indeg[e.to];
    std::vector<ParticipantId> ready;
    for (const auto& [v, k] : indeg)
      if (k == 0) ready.push_back(v);
    std::size_t removed = 0;
    while (!ready.empty()) {
      const auto v = ready.back();
      ready.pop_back();
      ++removed;
      for (const auto& e : g.edges())
        if (e.from == v && e.to != skip && --indeg[e.to] == 0) ready.push_back(e.to);
    }
    if (removed == indeg.size()) return false;
  }
  return true;
}

void complex_graphs(Result& r) {
  for (const auto& [wn, base, kind] :
       {std::tuple{"cyclic3_ac3wn", "cyclic3_baseline", GraphClass::cyclic_all_leaders},
        std::tuple{"disconnected_ac3wn", "disconnected_baseline", GraphClass::disconnected}}) {
    const auto sc = bundled(wn);
    r.check(classify(sc.graph).kind == kind, std::string(wn) + " classifies as " + std::string(to_string(kind)));
    if (kind == GraphClass::cyclic_all_leaders) {
      r.check(sc.graph.vertices().size() == 3, "cyclic graph has 3 parties");
      r.check(every_deletion_cyclic(sc.graph), "every vertex-deleted subgraph is cyclic");
    } else {
      r.check(!diameter(sc.graph).has_value(), "disconnected graph has unbounded diameter");
    }
    const auto o = run_scenario(sc, sc.seeds.front());
    r.check(o.verdict == Verdict::all_redeemed, std::string(wn) + " redeems");
    r.out << wn << ' ' << to_string(o.verdict) << ' ' << str(o.latency_deltas().value_or(Rational(-1))) << '\n';
    std::string got = "ran";
    try {
      run_baseline(bundled(base), 1);
    } catch (const Error& e) {
      got = std::string(to_string(e.code()));
    }
    r.check(got == to_string(Errc::baseline_inapplicable), std::string(base) + " is inapplicable, got " + got);
    r.out << base << ' ' << got << '\n';
  }
}

void evidence_fuzz(Result& r) {
  const auto world = xchain::testing::make_evidence_world(6, 12);
  const std::size_t per_case = 1000 / world.cases.size() + 100;
  const auto s = xchain::testing::fuzz_evidence(world, per_case, 11);
  r.check(s.honest > 0 && s.honest_accepted == s.honest, "all honest evidence accepted");
  r.check(s.mutants >= 1000, "at least 1000 mutants");
  r.check(s.rejected == s.mutants, std::to_string(s.mutants - s.rejected) + " mutants accepted");
  std::size_t deep_ok = 0;
  for (const auto& c : world.deep_cases) deep_ok += validate_evidence(c.anchor, c.evidence, c.d, c.expected);
  r.check(deep_ok == world.deep_cases.size(), "deeper honest evidence accepted");
  r.out << s.honest << ' ' << s.honest_accepted << ' ' << s.mutants << ' ' << s.rejected << ' ' << deep_ok << '\n';
  for (const auto& l : s.accepted_labels) r.out << l << '\n';
}

const std::vector<Entry>& criteria() {
  static const std::vector<Entry> all{
      {1, "latency", 1.0, latency},
      {2, "fee_overhead", 1.0, overhead},
      {3, "throughput", 1.0, throughput},
      {4, "confirmation_depth", 1.0, depth},
      {5, "exhaustive_interleavings", 60.0, interleavings},
      {6, "forked_runs", 300.0, forked},
      {7, "baseline_counterexample", 1.0, baseline_crash},
      {8, "complex_graphs", 5.0, complex_graphs},
      {9, "evidence_fuzz", 30.0, evidence_fuzz},
  };
  return all;
}

struct Run {
  bool pass;
  double seconds;
  std::string note;
  std::string transcript;
};

Run run_one(const Entry& e) {
  Result r;
  const auto start = std::chrono::steady_clock::now();
  try {
    e.fn(r);
  } catch (const std::exception& ex) {
    r.check(false, std::string("threw: ") + ex.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs >= e.limit_s) r.check(false, "over the time limit");
  std::string note;
  for (const auto& p : r.problems) note += (note.empty() ? "" : "; ") + p;
  return {r.pass, secs, note, r.out.str()};
}

void report(bool pass, int id, const std::string& name, double secs, double limit, const std::string& note) {
  const std::string budget = limit > 0 ? " (limit " + std::to_string(static_cast<int>(limit)) + "s)" : "";
  std::printf("%s %d %s %.3fs%s%s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(), secs, budget.c_str(),
              note.empty() ? "" : " ", note.c_str());
  std::fflush(stdout);
}

}  // namespace

int main() {
  bool all = true;
  std::vector<std::string> first;
  for (const auto& e : criteria()) {
    const auto r = run_one(e);
    report(r.pass, e.id, e.name, r.seconds, e.limit_s, r.note);
    all = all && r.pass;
    first.push_back(r.transcript);
  }

  const auto start = std::chrono::steady_clock::now();
  std::string mismatched;
  for (std::size_t i = 0; i < criteria().size(); ++i) {
    const auto again = run_one(criteria()[i]);
    if (again.transcript != first[i] || first[i].empty())
      mismatched += (mismatched.empty() ? "" : ",") + std::to_string(criteria()[i].id);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool same = mismatched.empty();
  report(same, 10, "determinism", secs, 0, same ? "" : "differs: " + mismatched);
  all = all && same;
  return all ? 0 : 1;
}
