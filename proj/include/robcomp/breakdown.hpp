#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robcomp/composition.hpp"
#include "robcomp/estimators.hpp"

namespace robcomp {

enum class Sign { Positive, Negative };

// How the adversary chooses which points to replace.
enum class Placement {
  // Depth 1: replace points in index order ("all-positive" / "all-negative").
  Prefix,
  // Fill groups one after another, `quota` points per inner group and
  // `outer_quota` inner groups per outer group, then the rest in index order.
  Concentrated,
  // Round-robin: one point per inner group per pass.
  Spread,
  // Prefix placement for the far points, and every other point moved to
  // sign/M. Those moves stay inside the radius, so they are not counted.
  InlierCollapse,
};

struct Strategy {
  Placement placement = Placement::Prefix;
  Sign sign = Sign::Positive;
  std::size_t quota = 0;
  std::size_t outer_quota = 0;

  std::string name() const;
  friend bool operator==(const Strategy&, const Strategy&) = default;
};

struct ContaminationModel {
  // Far threshold: a replaced point counts as contaminated when its largest
  // distance to the clean data exceeds this. 0 means max|x| + 1 over the data.
  double radius = 0.0;
  std::vector<double> ladder{1e3, 1e6, 1e9, 1e12};
  std::vector<Sign> signs{Sign::Positive, Sign::Negative};
  bool concentrated = true;
  bool spread = true;
  bool inlier_collapse = true;

  // Throws ConfigError: ladder shorter than 2 rungs, not strictly increasing,
  // non-positive radius or rung.
  void validate() const;
};

// Estimator output is declared unbounded when, at the two largest rungs
// M_lo < M_hi, both deviations are at least this fraction of their rung and
// dev(M_hi) >= 0.5 * (M_hi / M_lo) * dev(M_lo): the deviation tracks M.
inline constexpr double kTrackingFloor = 1e-6;

bool tracks_magnitude(std::span<const double> deviations, std::span<const double> ladder);

struct Trial {
  std::size_t m = 0;
  Strategy strategy;
  std::vector<double> deviations;  // one per ladder rung
  bool broken = false;
};

struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct BreakdownReport {
  std::string estimator;
  std::size_t n = 0;
  std::size_t g = 0;
  std::optional<std::size_t> f;
  std::optional<double> beta_analytic;
  std::optional<Trial> witness;  // first breaking contamination, if any
  double radius = 0.0;           // resolved far threshold
  std::vector<InequalityCheck> inequality_checks;
};

// Deterministic enumeration of the strategies the model allows for this
// dataset, in witness-priority order.
std::vector<Strategy> enumerate_strategies(const HierarchicalDataset& data,
                                           const ContaminationModel& model);

// Flat indices replaced by `strategy`, in replacement order (m-point
// contamination replaces the first m).
std::vector<std::size_t> replacement_order(const HierarchicalDataset& data, const Strategy& strategy);

// Data with the first m points of the strategy's order moved to +-M.
HierarchicalDataset contaminate(const HierarchicalDataset& data, const Strategy& strategy,
                                std::size_t m, double magnitude);

// Re-runs one contamination at every rung of the model.
Trial run_trial(std::span<const EstimatorSpec> levels, const HierarchicalDataset& data,
                const ContaminationModel& model, std::size_t m, const Strategy& strategy);

double resolve_radius(const HierarchicalDataset& data, const ContaminationModel& model);

// Finite-sample breakdown g: largest m such that no strategy breaks the
// estimator with m replaced points (0 when m = 0 already breaks it).
// Strategies are tried in parallel; the result equals serial::measure_breakdown.
BreakdownReport measure_breakdown(std::span<const EstimatorSpec> levels,
                                  const HierarchicalDataset& data, const ContaminationModel& model);
std::size_t measure_g(std::span<const EstimatorSpec> levels, const HierarchicalDataset& data,
                      const ContaminationModel& model);

struct OntoTarget {
  Value target;
  std::optional<std::size_t> min_m;  // smallest m reaching the target, none if never
  std::size_t solver_failures = 0;
};

struct OntoResult {
  std::optional<std::size_t> f;
  std::vector<OntoTarget> targets;
};

// Default targets: +-top rung, 0 and the clean estimate shifted by 1 (per
// coordinate for planar outputs).
std::vector<Value> default_onto_targets(const EstimatorSpec& spec, const HierarchicalDataset& data,
                                        const ContaminationModel& model);

// Onto-breakdown f for an atomic estimator on flat data: smallest m such that
// every target is reachable by replacing m points (|E - y| <= 1e-6 * max(1, |y|)).
// Throws ConfigError for estimators without a reachability construction.
OntoResult measure_f(const EstimatorSpec& spec, const HierarchicalDataset& data,
                     std::span<const Value> targets);

struct CompositeBeta {
  std::optional<double> beta;
  std::string rule;
};

// Asymptotic breakdown of a composite from its levels' analytic values.
CompositeBeta composite_beta(const CompositeSpec& spec);

// Sandwich for a two-level composite: g2*g1 <= g <= f1*(g2+1), plus g1 < f1.
std::vector<InequalityCheck> check_inequalities(const BreakdownReport& inner,
                                                const BreakdownReport& outer,
                                                const BreakdownReport& composite);

// Unequal group sizes: sum of the g2 smallest per-group g1 values <= g.
InequalityCheck check_unequal_bound(std::vector<std::size_t> inner_g, std::size_t outer_g,
                                    std::size_t composite_g);

namespace serial {

BreakdownReport measure_breakdown(std::span<const EstimatorSpec> levels,
                                  const HierarchicalDataset& data, const ContaminationModel& model);

}  // namespace serial

}  // namespace robcomp
