#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "robcomp/errors.hpp"
#include "robcomp/monitor.hpp"

using namespace robcomp;

namespace {

AttackScenario attacked(std::size_t n1, std::size_t k1, bool positive, std::uint64_t seed) {
  AttackScenario s;
  s.n1 = n1;
  s.k1 = k1;
  s.lo = positive ? 100 : -110;
  s.hi = positive ? 110 : -100;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Streams, CleanValuesStayNormal) {
  AttackScenario s;
  s.seed = 1;
  const auto streams = generate_streams(s);
  ASSERT_EQ(streams.size(), 100u);
  for (const auto& r : streams) {
    ASSERT_EQ(r.size(), 1000u);
    for (double v : r) ASSERT_LT(std::abs(v), 6.0);
  }
}

TEST(Streams, AttackCountsAndInterval) {
  const auto s = attacked(11, 110, true, 2);
  EXPECT_DOUBLE_EQ(s.proportion(), 0.0121);
  const auto streams = generate_streams(s);
  std::size_t routers = 0;
  for (const auto& r : streams) {
    std::size_t outliers = 0;
    for (double v : r) {
      if (v >= 100 && v <= 110) ++outliers;
    }
    ASSERT_TRUE(outliers == 0 || outliers == 110);
    routers += outliers ? 1 : 0;
  }
  EXPECT_EQ(routers, 11u);
}

TEST(Streams, DeterministicAndScheduleFree) {
  const auto s = attacked(51, 510, false, 3);
  EXPECT_EQ(generate_streams(s), generate_streams(s));
  EXPECT_EQ(generate_streams(s), serial::generate_streams(s));
  auto other = s;
  other.seed = 4;
  EXPECT_NE(generate_streams(s), generate_streams(other));
}

TEST(Streams, Validation) {
  auto s = attacked(101, 10, true, 0);
  EXPECT_THROW(generate_streams(s), ConfigError);
  s = attacked(10, 1001, true, 0);
  EXPECT_THROW(generate_streams(s), ConfigError);
}

TEST(Grid, ExactPercentileMatchesOracle) {
  const auto s = attacked(11, 910, true, 5);
  const auto streams = generate_streams(s);
  const std::vector<QuantileCombo> combos{{0.9, 0.1}};
  const auto row = run_grid(s, combos);
  std::vector<double> per_router;
  for (const auto& r : streams) per_router.push_back(oracle::percentile(9, 10, r));
  EXPECT_EQ(row.values[0], oracle::percentile(1, 10, per_router));
}

TEST(Grid, CleanMedianNearZero) {
  AttackScenario s;
  s.seed = 6;
  const std::vector<QuantileCombo> combos{{0.5, 0.5}};
  const auto row = run_grid(s, combos);
  EXPECT_LT(std::abs(row.values[0]), 0.2);
  EXPECT_FALSE(row.flags[0]);
}

TEST(Grid, AlignedTailFlagsAtOnePercent) {
  const auto combos = default_combos();
  const auto pos = run_grid(attacked(11, 110, true, 7), combos);
  EXPECT_GE(pos.values[1], 100.0);  // (.9,.9)
  EXPECT_TRUE(pos.flags[1]);
  EXPECT_FALSE(pos.flags[0]);
  EXPECT_NEAR(pos.values[0], -1.35, 0.2);
  const auto neg = run_grid(attacked(11, 110, false, 8), combos);
  EXPECT_TRUE(neg.flags[0]);
  EXPECT_FALSE(neg.flags[1]);
}

TEST(Grid, MixedCombosNeedTenPercent) {
  const auto combos = default_combos();
  EXPECT_FALSE(run_grid(attacked(11, 110, true, 9), combos).flags[2]);
  EXPECT_TRUE(run_grid(attacked(11, 910, true, 10), combos).flags[2]);
}

TEST(Grid, MedianFlagsFromQuarter) {
  const auto combos = default_combos();
  const auto row = run_grid(attacked(51, 510, true, 11), combos);
  EXPECT_TRUE(row.flags[4]);
  EXPECT_GE(row.values[4], 100.0);
  EXPECT_FALSE(run_grid(attacked(11, 910, true, 12), combos).flags[4]);
}

TEST(Grid, ParallelEqualsSerial) {
  const auto combos = default_combos();
  const auto s = attacked(51, 910, false, 13);
  const auto a = run_grid(s, combos), b = serial::run_grid(s, combos);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.flags, b.flags);
  MonitorOptions frugal;
  frugal.exact = false;
  EXPECT_EQ(run_grid(s, combos, frugal).values, serial::run_grid(s, combos, frugal).values);
}

TEST(Grid, FlagIffAboveThreshold) {
  const auto combos = default_combos();
  MonitorOptions opts;
  opts.flag_threshold = 1.0;
  const auto row = run_grid(attacked(11, 110, true, 14), combos, opts);
  for (std::size_t c = 0; c < combos.size(); ++c) EXPECT_EQ(row.flags[c], std::abs(row.values[c]) >= 1.0);
}

TEST(Frugal, ConstantStreamSettlesWithinOneStep) {
  for (double q : {0.1, 0.5, 0.9}) {
    FrugalSketch sk(q, 0.05, 15, -3.0);
    for (int i = 0; i < 5000; ++i) frugal_update(sk, 2.0);
    EXPECT_GE(sk.estimate, 2.0 - 0.05);
    EXPECT_LE(sk.estimate, 2.0 + 0.05);
  }
}

TEST(Frugal, StepsOnlyByStep) {
  FrugalSketch sk(0.5, 0.25, 16);
  std::mt19937_64 rng(16);
  std::normal_distribution<double> d;
  for (int i = 0; i < 1000; ++i) {
    const double before = sk.estimate;
    frugal_update(sk, d(rng));
    const double moved = std::abs(sk.estimate - before);
    ASSERT_TRUE(moved == 0.0 || std::abs(moved - 0.25) < 1e-12);
  }
}

TEST(Frugal, SingleRunNearMedian) {
  std::mt19937_64 rng(1000);
  std::normal_distribution<double> d;
  FrugalSketch med(0.5, 0.05, 0);
  for (int i = 0; i < 100000; ++i) frugal_update(med, d(rng));
  EXPECT_LE(std::abs(med.estimate), 0.3);
}

// Near the quantile m the sketch is a random walk with restoring drift
// step * density(m) * offset and per-update variance 2 q (1 - q) step^2, so
// its stationary spread is sqrt(step * q (1 - q) / density(m)).
TEST(Frugal, MonteCarloSpreadMatchesRandomWalk) {
  const double step = 0.05;
  const double density0 = 0.3989422804014327, density90 = 0.1754983319324868;
  const double p90 = 1.2815515655446004;
  const double sd_med = std::sqrt(step * 0.25 / density0), sd_p90 = std::sqrt(step * 0.09 / density90);
  double sum_med = 0.0, sq_med = 0.0, sum_p90 = 0.0, sq_p90 = 0.0;
  const int runs = 100;
  for (int run = 0; run < runs; ++run) {
    std::mt19937_64 rng(1000 + run);
    std::normal_distribution<double> d;
    FrugalSketch med(0.5, step, run), hi(0.9, step, run + 7777);
    for (int i = 0; i < 100000; ++i) {
      const double x = d(rng);
      frugal_update(med, x);
      frugal_update(hi, x);
    }
    sum_med += med.estimate;
    sq_med += med.estimate * med.estimate;
    sum_p90 += hi.estimate - p90;
    sq_p90 += (hi.estimate - p90) * (hi.estimate - p90);
  }
  // Means within five standard errors, spreads within a factor 1.5.
  EXPECT_LE(std::abs(sum_med / runs), 5 * sd_med / std::sqrt(runs));
  EXPECT_LE(std::abs(sum_p90 / runs), 5 * sd_p90 / std::sqrt(runs));
  const double rms_med = std::sqrt(sq_med / runs), rms_p90 = std::sqrt(sq_p90 / runs);
  EXPECT_GT(rms_med, sd_med / 1.5);
  EXPECT_LT(rms_med, sd_med * 1.5);
  EXPECT_GT(rms_p90, sd_p90 / 1.5);
  EXPECT_LT(rms_p90, sd_p90 * 1.5);
}

TEST(Report, CsvLayout) {
  const auto combos = default_combos();
  const auto scenarios = default_scenarios(20);
  ASSERT_EQ(scenarios.size(), 9u);
  const std::vector<AttackScenario> two(scenarios.begin(), scenarios.begin() + 2);
  const auto report = run_scenarios(two, combos);
  const auto csv = to_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "proportion,interval,n1,k1,value 0.1/0.1,value 0.9/0.9,value 0.1/0.9,value 0.9/0.1,value 0.5/0.5,"
            "flag 0.1/0.1,flag 0.9/0.9,flag 0.1/0.9,flag 0.9/0.1,flag 0.5/0.5");
  EXPECT_NE(csv.find("0.0121,\"[100,110]\",11,110,"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
