#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace robcomp {

struct AttackScenario {
  std::size_t n = 100;   // routers
  std::size_t k = 1000;  // stream length per router
  std::size_t n1 = 0;    // attacked routers
  std::size_t k1 = 0;    // outliers per attacked stream
  double lo = 100.0;     // outlier interval [lo, hi]
  double hi = 110.0;
  std::uint64_t seed = 0;

  // n1*k1 / (n*k)
  double proportion() const;
  std::string interval_label() const;
  // Throws ConfigError when n1 > n, k1 > k, n or k is 0 or lo > hi.
  void validate() const;
};

struct QuantileCombo {
  double q1 = 0.5;  // per-router percentile
  double q2 = 0.5;  // command-center percentile over router outputs
  std::string label() const;
  friend bool operator==(const QuantileCombo&, const QuantileCombo&) = default;
};

// (.1,.1), (.9,.9), (.1,.9), (.9,.1), (.5,.5)
std::vector<QuantileCombo> default_combos();

// Clean run, then n1 x k1 in {11x110, 11x910, 51x510, 51x910}, each on the
// positive then the negative interval. Row r uses seed + r.
std::vector<AttackScenario> default_scenarios(std::uint64_t seed);

// Standard-normal streams, one per router. Attacked routers are a uniform
// sample of n1 routers; in each, k1 uniform positions are overwritten with
// U(lo, hi) draws. Router i draws from its own generator, so the result does
// not depend on scheduling.
std::vector<std::vector<double>> generate_streams(const AttackScenario& scenario);

// Frugal-1U streaming quantile: one value, moved by +-step.
struct FrugalSketch {
  double q = 0.5;
  double estimate = 0.0;
  double step = 0.05;
  std::mt19937_64 rng;

  FrugalSketch(double q, double step, std::uint64_t seed, double start = 0.0);
};

void frugal_update(FrugalSketch& sketch, double item);

struct MonitorOptions {
  bool exact = true;            // sort-based percentiles; frugal sketches otherwise
  double flag_threshold = 50.0;
  double frugal_step = 0.05;
};

struct MonitorRow {
  AttackScenario scenario;
  std::vector<double> values;  // one per combo
  std::vector<bool> flags;     // |value| >= threshold
};

struct MonitorReport {
  std::vector<QuantileCombo> combos;
  MonitorOptions options;
  std::vector<MonitorRow> rows;
};

// Per-router percentile(q1) then percentile(q2) over the n router values, for
// every combo. Routers run in parallel; see serial::run_grid.
MonitorRow run_grid(const AttackScenario& scenario, std::span<const QuantileCombo> combos,
                    const MonitorOptions& options = {});

MonitorReport run_scenarios(std::span<const AttackScenario> scenarios,
                            std::span<const QuantileCombo> combos, const MonitorOptions& options = {});

// proportion, interval, n1, k1, one value column per combo, one flag column per combo.
std::string to_csv(const MonitorReport& report);

namespace serial {

std::vector<std::vector<double>> generate_streams(const AttackScenario& scenario);
MonitorRow run_grid(const AttackScenario& scenario, std::span<const QuantileCombo> combos,
                    const MonitorOptions& options = {});

}  // namespace serial

}  // namespace robcomp
