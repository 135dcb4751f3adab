#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "xchain/error.hpp"
#include "xchain/scenario.hpp"

using namespace xchain;
using nlohmann::json;

namespace {

json two_party_doc() {
  std::ifstream in(xchain::testing::scenario_path("two_party_ac3wn"));
  return json::parse(in);
}

std::string rejection(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::scenario_invalid);
    return e.what();
  }
  ADD_FAILURE() << "scenario accepted";
  return {};
}

}  // namespace

TEST(ScenarioParse, TwoPartyDocument) {
  const auto sc = parse_scenario(two_party_doc());
  EXPECT_EQ(sc.protocol, Protocol::ac3wn);
  EXPECT_EQ(sc.chains.size(), 3u);
  EXPECT_EQ(sc.witness_chain, "witness");
  EXPECT_EQ(sc.d, 6u);
  EXPECT_EQ(sc.effective_delta(), 7);
  EXPECT_EQ(sc.effective_horizon(), 350);
  EXPECT_EQ(sc.fees.deploy, 2u);
  EXPECT_EQ(sc.seeds, (std::vector<std::uint64_t>{1}));
  EXPECT_EQ(sc.graph, xchain::testing::two_party_graph());
  EXPECT_EQ(sc.chain("btc").tps, Rational(7));
  EXPECT_THROW(sc.chain("doge"), Error);
}

TEST(ScenarioParse, UnknownKeysNameThePath) {
  auto doc = two_party_doc();
  doc["colour"] = "blue";
  EXPECT_NE(rejection(doc).find("unknown key \"colour\""), std::string::npos);

  doc = two_party_doc();
  doc["chains"][1]["bogus"] = 1;
  EXPECT_NE(rejection(doc).find("\"chains[1]\": unknown key \"bogus\""), std::string::npos);

  doc = two_party_doc();
  doc["graph"]["edges"][0]["memo"] = "x";
  EXPECT_NE(rejection(doc).find("graph.edges[0]"), std::string::npos);

  doc = two_party_doc();
  doc["witness_chain"]["extra"] = true;
  EXPECT_NE(rejection(doc).find("extra"), std::string::npos);
}

TEST(ScenarioParse, ValueChecks) {
  auto doc = two_party_doc();
  doc["protocol"] = "HTLC";
  EXPECT_NE(rejection(doc).find("protocol"), std::string::npos);

  doc = two_party_doc();
  doc["chains"][0]["fork_probability"] = 1.0;
  EXPECT_NE(rejection(doc).find("fork_probability"), std::string::npos);

  doc = two_party_doc();
  doc["chains"][0]["pow_difficulty"] = 25;
  EXPECT_NE(rejection(doc).find("pow_difficulty"), std::string::npos);

  doc = two_party_doc();
  doc["d"] = "six";
  EXPECT_NE(rejection(doc).find("d"), std::string::npos);

  doc = two_party_doc();
  doc["graph"]["edges"][0]["chain"] = "doge";
  EXPECT_NE(rejection(doc).find("graph.edges[0].chain"), std::string::npos);

  doc = two_party_doc();
  doc.erase("witness_chain");
  EXPECT_NE(rejection(doc).find("witness_chain"), std::string::npos);

  doc = two_party_doc();
  doc["seed_range"] = {{"start", 1}, {"count", 3}};
  EXPECT_NE(rejection(doc).find("seed_range"), std::string::npos);

  doc = two_party_doc();
  doc["faults"] = json::array({{{"participant", "carol"}, {"behavior", "honest"}}});
  EXPECT_NE(rejection(doc).find("faults[0]"), std::string::npos);
}

TEST(ScenarioParse, OptionalForms) {
  auto doc = two_party_doc();
  doc.erase("seeds");
  doc["seed_range"] = {{"start", 10}, {"count", 3}};
  doc["chains"][0]["tps"] = "15/2";
  doc["adversary"] = {{"chain", "witness"}, {"at_confirmations", "random"}, {"branch_len", 2}};
  doc["faults"] = json::array({{{"participant", "bob"}, {"behavior", "crash_at"}, {"step", "redeem"}, {"recover_tick", 70}}});
  const auto sc = parse_scenario(doc);
  EXPECT_EQ(sc.seeds, (std::vector<std::uint64_t>{10, 11, 12}));
  EXPECT_EQ(sc.chain("btc").tps, Rational(15, 2));
  ASSERT_TRUE(sc.adversary);
  EXPECT_FALSE(sc.adversary->at_confirmations);
  EXPECT_EQ(sc.adversary->branch_len, 2u);
  ASSERT_EQ(sc.faults.size(), 1u);
  const auto* crash = std::get_if<CrashAt>(&sc.faults[0].behavior);
  ASSERT_TRUE(crash);
  EXPECT_EQ(crash->step, Step::redeem);
  EXPECT_EQ(crash->recover_tick, 70);
}

TEST(ScenarioParse, DigestIgnoresKeyOrder) {
  const auto doc = two_party_doc();
  json reordered = json::parse(doc.dump());
  EXPECT_EQ(scenario_digest(doc), scenario_digest(reordered));
  auto changed = doc;
  changed["d"] = 5;
  EXPECT_NE(scenario_digest(doc), scenario_digest(changed));
}

TEST(ScenarioParse, EveryBundledScenarioLoads) {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(XCHAIN_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_scenario(entry.path())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 15u);
}

TEST(RunRecord, JsonShape) {
  const auto sc = xchain::testing::bundled("two_party_ac3wn");
  const auto rec = json::parse(run_record(run_scenario(sc, 1), sc).dump());
  EXPECT_EQ(rec["scenario"], "two_party_ac3wn");
  EXPECT_EQ(rec["scenario_digest"], sc.digest);
  EXPECT_EQ(rec["seed"], 1);
  const auto& o = rec["outcome"];
  EXPECT_EQ(o["verdict"], "AllRedeemed");
  EXPECT_EQ(o["latency_delta"], "4");
  EXPECT_EQ(o["edges"].size(), 2u);
  EXPECT_EQ(o["edges"][0]["state"], "RD");
  EXPECT_EQ(o["witness_state"], "RD_auth");
  EXPECT_EQ(o["fee_total"], 9);
  EXPECT_FALSE(rec.contains("wall_time_ms"));
}

TEST(RunBatch, WorkerCountDoesNotChangeOutput) {
  const auto sc = xchain::testing::bundled("forked_eps03");
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7};
  const auto one = run_batch(sc, seeds, {1, false});
  const auto three = run_batch(sc, seeds, {3, false});
  EXPECT_EQ(one.lines, three.lines);
  ASSERT_EQ(one.outcomes.size(), seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) EXPECT_EQ(one.outcomes[i].seed, seeds[i]);
  const auto timed = run_batch(sc, {1}, {1, true});
  EXPECT_TRUE(json::parse(timed.lines[0]).contains("wall_time_ms"));
}

TEST(ChainExport, ListsEveryBlock) {
  const auto sc = xchain::testing::bundled("two_party_ac3wn");
  const auto o = run_scenario(sc, 1);
  const auto j = json::parse(chain_to_json(o.chains->at("btc")).dump());
  EXPECT_EQ(j["chain_id"], "btc");
  EXPECT_EQ(j["blocks"].size(), o.chains->at("btc").block_count());
  EXPECT_EQ(j["blocks"][0]["height"], 0);
}
