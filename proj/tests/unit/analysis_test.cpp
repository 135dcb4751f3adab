#include <gtest/gtest.h>

#include "support.hpp"
#include "xchain/analysis.hpp"
#include "xchain/error.hpp"

using namespace xchain;
using xchain::testing::bundled;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_params;
}

SecurityParams sec(std::int64_t va, std::int64_t ch, std::int64_t dh) {
  return SecurityParams{Rational(va), Rational(ch), Rational(dh)};
}

// Smallest d >= 1 with d * C_h > V_a * d_h, by scanning.
std::uint64_t scan_depth(const SecurityParams& p) {
  for (std::int64_t d = 1;; ++d)
    if (Rational(d) * p.hourly_attack_cost > p.value_at_risk * p.blocks_per_hour) return static_cast<std::uint64_t>(d);
}

}  // namespace

TEST(Latency, ClosedForms) {
  EXPECT_EQ(latency_baseline(2u, 1), 4);
  EXPECT_EQ(latency_baseline(10u, 1), 20);
  EXPECT_EQ(latency_baseline(3u, 7), 42);
  EXPECT_EQ(latency_ac3wn(1), 4);
  EXPECT_EQ(latency_ac3wn(7), 28);
  EXPECT_EQ(code_of([] { latency_baseline(std::nullopt, 1); }), Errc::unbounded_diameter);
  EXPECT_EQ(code_of([] { latency_baseline(1u, 1); }), Errc::invalid_params);
}

TEST(Latency, WitnessNetworkNeverSlowerThanBaseline) {
  for (std::uint32_t diam = 2; diam <= 50; ++diam) {
    EXPECT_LE(latency_ac3wn(1), latency_baseline(diam, 1));
    EXPECT_EQ(latency_ac3wn(1) == latency_baseline(diam, 1), diam == 2);
  }
}

TEST(Latency, SweepCsv) {
  const auto rows = latency_sweep(2, 4, 1);
  EXPECT_EQ(latency_csv(rows), "diam,baseline_latency,ac3wn_latency\n2,4,4\n3,6,4\n4,8,4\n");
  EXPECT_THROW(latency_sweep(5, 4, 1), Error);
}

TEST(Fees, ClosedForms) {
  const FeeSchedule unit{1, 1};
  EXPECT_EQ(total_fee(Protocol::baseline, 2, unit), 4u);
  EXPECT_EQ(total_fee(Protocol::ac3wn, 2, unit), 6u);
  EXPECT_EQ(fee_overhead(2, unit), Rational(1, 2));
  EXPECT_EQ(fee_overhead(1, unit), Rational(1));
}

TEST(Fees, OverheadTimesNIsOne) {
  for (std::uint64_t n = 1; n <= 100; ++n) {
    for (const FeeSchedule f : {FeeSchedule{1, 1}, FeeSchedule{2, 1}, FeeSchedule{300, 7}, FeeSchedule{0, 5}}) {
      EXPECT_EQ(fee_overhead(n, f), Rational(1, static_cast<std::int64_t>(n)));
      EXPECT_EQ(fee_overhead(n, f) * Rational(static_cast<std::int64_t>(n)), Rational(1));
    }
  }
  EXPECT_THROW(fee_overhead(3, FeeSchedule{0, 0}), Error);
}

TEST(Throughput, SlowestChainBounds) {
  const ThroughputTable table{{"btc", Rational(7)}, {"eth", Rational(25)}, {"ltc", Rational(56)}, {"bch", Rational(61)}};
  EXPECT_EQ(min_throughput(table, {"eth", "ltc"}, "btc"), Rational(7));
  EXPECT_EQ(min_throughput(table, {"eth", "ltc"}, "eth"), Rational(25));
  EXPECT_EQ(min_throughput(table, {"eth", "ltc"}, "ltc"), Rational(25));
  EXPECT_EQ(min_throughput({Rational(13, 2)}), Rational(13, 2));
  EXPECT_EQ(code_of([] { min_throughput(std::vector<Rational>{}); }), Errc::empty_list);
  EXPECT_EQ(code_of([&] { min_throughput(table, {"doge"}, "btc"); }), Errc::invalid_params);
  EXPECT_EQ(throughput_csv(table), "chain,tps\nbch,61\nbtc,7\neth,25\nltc,56\n");
}

TEST(Depth, WorkedExampleIsStrict) {
  EXPECT_EQ(min_confirmation_depth(sec(1'000'000, 300'000, 6)), 21u);
  EXPECT_EQ(min_confirmation_depth(sec(0, 300'000, 6)), 1u);
  EXPECT_EQ(min_confirmation_depth(sec(10, 3, 1)), 4u);
  EXPECT_EQ(code_of([] { min_confirmation_depth(sec(1, 0, 6)); }), Errc::invalid_params);
  EXPECT_EQ(code_of([] { min_confirmation_depth(sec(1, 5, 0)); }), Errc::invalid_params);
  EXPECT_EQ(code_of([] { min_confirmation_depth(sec(-1, 5, 1)); }), Errc::invalid_params);
}

TEST(Depth, AgreesWithBruteForceScan) {
  for (std::int64_t va = 0; va <= 60; va += 3)
    for (std::int64_t ch = 1; ch <= 13; ch += 2)
      for (std::int64_t dh = 1; dh <= 9; ++dh) {
        const auto p = sec(va, ch, dh);
        EXPECT_EQ(min_confirmation_depth(p), scan_depth(p)) << va << " " << ch << " " << dh;
      }
  const SecurityParams frac{Rational(7, 3), Rational(5, 2), Rational(9, 4)};
  EXPECT_EQ(min_confirmation_depth(frac), scan_depth(frac));
}

TEST(Comparison, FaultFreeRunsMatchPredictions) {
  for (const char* name : {"two_party_ac3wn", "two_party_baseline", "cyclic3_ac3wn", "disconnected_ac3wn"}) {
    const auto sc = bundled(name);
    const auto c = measured_vs_predicted(run_scenario(sc, sc.seeds.front()), sc);
    EXPECT_TRUE(c.matches()) << name << ": " << (c.flags.empty() ? "" : c.flags.front());
    EXPECT_EQ(c.deviation, Rational(0)) << name;
  }
}

TEST(Comparison, WitnessNetworkCountsOneExtraContract) {
  const auto sc = bundled("two_party_ac3wn");
  const auto c = measured_vs_predicted(run_scenario(sc, 1), sc);
  EXPECT_EQ(c.deploys, 3u);
  EXPECT_EQ(c.calls, 3u);
  EXPECT_EQ(c.measured_fee, total_fee(Protocol::ac3wn, 2, sc.fees));
  EXPECT_EQ(c.measured_latency, Rational(4));
}

TEST(Comparison, DelayedDeployIsFlagged) {
  auto sc = bundled("two_party_ac3wn");
  sc.faults = {Fault{"bob", CrashAt{Step::deploy, sc.effective_delta() + 1}}};
  const auto c = measured_vs_predicted(run_scenario(sc, 1), sc);
  EXPECT_EQ(c.deviation, Rational(1));
  ASSERT_EQ(c.flags.size(), 1u);
  EXPECT_EQ(c.flags.front(), "latency deviates by 1 delta");
}

TEST(Comparison, TrustedWitnessHasNoLatencyPrediction) {
  const auto sc = bundled("two_party_ac3tw");
  const auto c = measured_vs_predicted(run_scenario(sc, 1), sc);
  EXPECT_FALSE(c.predicted_latency);
  EXPECT_TRUE(c.matches());
}
