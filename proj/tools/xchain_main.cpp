// xchain: run, enumerate and analyze cross-chain commitment scenarios.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <thread>

#include "xchain/analysis.hpp"
#include "xchain/error.hpp"
#include "xchain/interleave.hpp"
#include "xchain/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUnsafe = 1;
constexpr int kUsage = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("xchain");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("XCHAIN_LOG");
  const std::string level = env ? env : "off";
  spdlog::set_level(spdlog::level::from_str(level));
}

std::pair<std::uint32_t, std::uint32_t> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = static_cast<std::uint32_t>(std::stoul(text));
      return {v, v};
    }
    return {static_cast<std::uint32_t>(std::stoul(text.substr(0, dots))),
            static_cast<std::uint32_t>(std::stoul(text.substr(dots + 2)))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--diam", "expected N or LO..HI, got " + text);
  }
}

xchain::Rational rational_arg(const std::string& text, const std::string& flag) {
  auto r = xchain::parse_rational(text);
  if (!r) throw CLI::ValidationError(flag, "expected an integer or p/q, got " + text);
  return *r;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(sep, start);
    const auto part = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!part.empty()) out.push_back(part);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

int cmd_run(const std::string& file, const std::optional<std::uint64_t>& seed, bool allow_stuck, bool timing,
            bool compare, unsigned workers) {
  xchain::Scenario sc;
  try {
    sc = xchain::load_scenario(file);
  } catch (const xchain::Error& e) {
    std::cerr << "xchain: " << file << ": " << e.what() << '\n';
    return kUsage;
  }
  const std::vector<std::uint64_t> seeds = seed ? std::vector<std::uint64_t>{*seed} : sc.seeds;
  spdlog::info("running {} ({}) over {} seed(s)", sc.name, xchain::to_string(sc.protocol), seeds.size());
  xchain::BatchResult batch;
  try {
    batch = xchain::run_batch(sc, seeds, {workers, timing});
  } catch (const xchain::Error& e) {
    std::cerr << "xchain: " << e.what() << '\n';
    return kUnsafe;
  }
  int rc = kOk;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& o = batch.outcomes[i];
    if (compare) {
      auto rec = nlohmann::ordered_json::parse(batch.lines[i]);
      rec["comparison"] = xchain::comparison_to_json(xchain::measured_vs_predicted(o, sc));
      std::cout << rec.dump() << '\n';
    } else {
      std::cout << batch.lines[i] << '\n';
    }
    for (const auto& t : o.trace) spdlog::trace("seed {} t={} {} {} {}", o.seed, t.tick, t.actor, t.event, t.detail);
    spdlog::info("seed {}: {} latency {}", o.seed, xchain::to_string(o.verdict),
                 o.latency_deltas() ? xchain::format_rational(*o.latency_deltas()) + " delta" : "n/a");
    if (o.verdict == xchain::Verdict::atomicity_violated) rc = kUnsafe;
    if (o.verdict == xchain::Verdict::stuck && !allow_stuck) rc = kUnsafe;
  }
  return rc;
}

int cmd_interleave(const std::string& file, std::size_t max_events, std::uint64_t max_schedules) {
  xchain::Scenario sc;
  try {
    sc = xchain::load_scenario(file);
  } catch (const xchain::Error& e) {
    std::cerr << "xchain: " << file << ": " << e.what() << '\n';
    return kUsage;
  }
  try {
    const auto report = xchain::run_interleavings(sc, max_events, max_schedules);
    std::cout << xchain::interleave_to_json(report).dump() << '\n';
    spdlog::info("{} schedules, {} violations", report.schedules, report.violations);
    return report.violations == 0 && report.signature_anomalies == 0 ? kOk : kUnsafe;
  } catch (const xchain::Error& e) {
    std::cerr << "xchain: " << e.what() << '\n';
    return e.code() == xchain::Errc::too_many_schedules ? kUsage : kUnsafe;
  }
}

int cmd_export(const std::string& file, const std::string& chain_id, const std::optional<std::uint64_t>& seed) {
  xchain::Scenario sc;
  try {
    sc = xchain::load_scenario(file);
  } catch (const xchain::Error& e) {
    std::cerr << "xchain: " << file << ": " << e.what() << '\n';
    return kUsage;
  }
  const auto o = xchain::run_scenario(sc, seed.value_or(sc.seeds.front()));
  auto it = o.chains->find(chain_id);
  if (it == o.chains->end()) {
    std::cerr << "xchain: no chain " << chain_id << " in scenario\n";
    return kUsage;
  }
  std::cout << xchain::chain_to_json(it->second).dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Atomic cross-chain commitment simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario once per seed and print one JSON record per run");
  std::string run_file;
  std::optional<std::uint64_t> run_seed;
  bool allow_stuck = false, timing = false, compare = false;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  run->add_option("file", run_file, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", run_seed, "Run only this seed");
  run->add_flag("--allow-stuck", allow_stuck, "Do not fail on Stuck verdicts");
  run->add_flag("--timing", timing, "Add wall-clock time to each record");
  run->add_flag("--compare", compare, "Attach measured-vs-predicted latency and fees");
  run->add_option("--workers", workers, "Worker threads")->check(CLI::Range(1u, 256u));

  auto* inter = app.add_subcommand("interleave", "Enumerate every legal event order of a scenario");
  std::string inter_file;
  std::size_t max_events = 12;
  std::uint64_t max_schedules = 1'000'000;
  inter->add_option("file", inter_file, "Scenario file")->required()->check(CLI::ExistingFile);
  inter->add_option("--max-events", max_events, "Refuse event sets larger than this");
  inter->add_option("--max-schedules", max_schedules, "Refuse more schedules than this");

  auto* analyze = app.add_subcommand("analyze", "Closed-form latency, fee, throughput and depth numbers");
  analyze->require_subcommand(1);
  auto* latency = analyze->add_subcommand("latency", "CSV of baseline vs AC3WN latency per diameter");
  std::string diam = "2..10";
  xchain::Tick delta = 1;
  latency->add_option("--diam", diam, "Diameter or range LO..HI");
  latency->add_option("--delta", delta, "Delta in ticks")->check(CLI::PositiveNumber);

  auto* fees = analyze->add_subcommand("fees", "Total fees and AC3WN overhead");
  std::uint64_t n_edges = 1;
  xchain::FeeSchedule schedule{1, 1};
  fees->add_option("--n", n_edges, "Number of edges")->required()->check(CLI::PositiveNumber);
  fees->add_option("--fd", schedule.deploy, "Deployment fee");
  fees->add_option("--ffc", schedule.call, "Function-call fee");

  auto* tput = analyze->add_subcommand("throughput", "Throughput bound of a cross-chain transaction");
  std::string table_text, involved_text, witness;
  bool table_csv = false;
  tput->add_option("--chains", table_text, "Table as id=tps,id=tps,...")->required();
  tput->add_option("--involved", involved_text, "Involved chains (default: all in the table)");
  tput->add_option("--witness", witness, "Witness chain")->required();
  tput->add_flag("--csv", table_csv, "Print the table as CSV instead");

  auto* depth = analyze->add_subcommand("depth", "Minimum witness confirmation depth");
  std::string va, ch, dh;
  depth->add_option("--va", va, "Value at risk")->required();
  depth->add_option("--ch", ch, "Hourly attack cost")->required();
  depth->add_option("--dh", dh, "Witness blocks per hour")->required();

  auto* exp = app.add_subcommand("export-chain", "Run a scenario and dump one chain's block tree as JSON");
  std::string exp_file, exp_chain;
  std::optional<std::uint64_t> exp_seed;
  exp->add_option("file", exp_file, "Scenario file")->required()->check(CLI::ExistingFile);
  exp->add_option("chain", exp_chain, "Chain id")->required();
  exp->add_option("--seed", exp_seed, "Seed (default: first scenario seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_file, run_seed, allow_stuck, timing, compare, workers);
    if (*inter) return cmd_interleave(inter_file, max_events, max_schedules);
    if (*exp) return cmd_export(exp_file, exp_chain, exp_seed);
    if (*latency) {
      const auto [lo, hi] = parse_range(diam);
      std::cout << xchain::latency_csv(xchain::latency_sweep(lo, hi, delta));
    } else if (*fees) {
      nlohmann::ordered_json j;
      j["n"] = n_edges;
      j["baseline"] = xchain::total_fee(xchain::Protocol::baseline, n_edges, schedule);
      j["ac3tw"] = xchain::total_fee(xchain::Protocol::ac3tw, n_edges, schedule);
      j["ac3wn"] = xchain::total_fee(xchain::Protocol::ac3wn, n_edges, schedule);
      j["overhead"] = xchain::format_rational(xchain::fee_overhead(n_edges, schedule));
      std::cout << j.dump() << '\n';
    } else if (*tput) {
      xchain::ThroughputTable table;
      for (const auto& entry : split(table_text, ',')) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--chains", "expected id=tps, got " + entry);
        table[entry.substr(0, eq)] = rational_arg(entry.substr(eq + 1), "--chains");
      }
      if (table_csv) {
        std::cout << xchain::throughput_csv(table);
      } else {
        std::vector<xchain::ChainId> involved = split(involved_text, ',');
        if (involved.empty())
          for (const auto& [id, _] : table) involved.push_back(id);
        std::cout << xchain::format_rational(xchain::min_throughput(table, involved, witness)) << '\n';
      }
    } else if (*depth) {
      const xchain::SecurityParams p{rational_arg(va, "--va"), rational_arg(ch, "--ch"), rational_arg(dh, "--dh")};
      std::cout << xchain::min_confirmation_depth(p) << '\n';
    }
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "xchain: " << e.what() << '\n';
    return kUsage;
  } catch (const xchain::Error& e) {
    std::cerr << "xchain: " << e.what() << '\n';
    return kUsage;
  }
}
