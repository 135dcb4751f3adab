#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xchain/protocols.hpp"
#include "xchain/scenario.hpp"

namespace xchain::testing {

inline std::filesystem::path scenario_path(const std::string& name) {
  return std::filesystem::path(XCHAIN_SCENARIO_DIR) / (name + ".json");
}

inline Scenario bundled(const std::string& name) { return load_scenario(scenario_path(name)); }

inline SwapGraph two_party_graph() {
  return SwapGraph({"alice", "bob"},
                   {SwapEdge{"alice", "bob", 5, "BTC", "btc"}, SwapEdge{"bob", "alice", 100, "ETH", "eth"}}, 0);
}

inline ChainParams chain_params(const std::string& id, std::uint32_t difficulty = 0, double eps = 0.0) {
  ChainParams p;
  p.chain_id = id;
  p.unit = id;
  p.block_interval = 1;
  p.fork_probability = eps;
  p.pow_difficulty = difficulty;
  return p;
}

inline std::vector<std::optional<ContractState>> edge_states(const RunOutcome& o) {
  std::vector<std::optional<ContractState>> out;
  for (const auto& e : o.edges) out.push_back(e.state);
  return out;
}

}  // namespace xchain::testing
