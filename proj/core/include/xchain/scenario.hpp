#pragma once

// Scenario documents (JSON) and the JSON forms of run results, plus the
// seeded batch runner used by the command-line tool.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xchain/analysis.hpp"
#include "xchain/interleave.hpp"
#include "xchain/protocols.hpp"

namespace xchain {

/// Validates and converts a scenario document. Unknown keys and type errors
/// throw ScenarioInvalid with the offending key path in the message.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

/// Digest of the document's canonical (sorted-key, compact) form.
std::string scenario_digest(const nlohmann::json& doc);

nlohmann::ordered_json outcome_to_json(const RunOutcome& outcome, const Scenario& sc);
nlohmann::ordered_json run_record(const RunOutcome& outcome, const Scenario& sc);
nlohmann::ordered_json chain_to_json(const SimChain& chain);
nlohmann::ordered_json interleave_to_json(const InterleaveReport& report);
nlohmann::ordered_json comparison_to_json(const Comparison& c);

struct BatchOptions {
  unsigned workers = 1;
  bool timing = false;  // adds wall_time_ms, which makes lines run-dependent
};

struct BatchResult {
  std::vector<std::string> lines;  // one compact JSON record per seed, seed order
  std::vector<RunOutcome> outcomes;
};

BatchResult run_batch(const Scenario& sc, const std::vector<std::uint64_t>& seeds, const BatchOptions& opts = {});

}  // namespace xchain
