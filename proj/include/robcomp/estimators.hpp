#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace robcomp {

struct Point2D {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2D&, const Point2D&) = default;
};

// y = slope * x + intercept
struct LineCoeffs {
  double slope = 0.0;
  double intercept = 0.0;
  friend bool operator==(const LineCoeffs&, const LineCoeffs&) = default;
};

// Output of any estimator in this library.
using Value = std::variant<double, Point2D, LineCoeffs>;

// Distance in the estimator's output space: |a-b| for scalars, Euclidean for
// points and for (slope, intercept) pairs.
double value_distance(const Value& a, const Value& b);

enum class Space { Scalar, Plane, Line };

std::string_view space_name(Space s);

enum class EstimatorKind {
  Mean,
  Percentile,
  Median,
  L1Median,
  SiegelLine,
  ReciprocalMedian,     // 1 / median(X), 0 when the median is 0
  MedianOfReciprocals,  // median(1/x_i), with 1/0 taken as 0
};

// Declarative description of an atomic estimator.
class EstimatorSpec {
 public:
  static EstimatorSpec mean() { return EstimatorSpec(EstimatorKind::Mean, 0.0); }
  static EstimatorSpec percentile(double q);
  static EstimatorSpec median() { return EstimatorSpec(EstimatorKind::Median, 0.5); }
  static EstimatorSpec l1_median() { return EstimatorSpec(EstimatorKind::L1Median, 0.0); }
  static EstimatorSpec siegel_line() { return EstimatorSpec(EstimatorKind::SiegelLine, 0.0); }
  static EstimatorSpec reciprocal_median() {
    return EstimatorSpec(EstimatorKind::ReciprocalMedian, 0.5);
  }
  static EstimatorSpec median_of_reciprocals() {
    return EstimatorSpec(EstimatorKind::MedianOfReciprocals, 0.5);
  }

  // Parses "mean", "median", "percentile:0.45", "l1median", "siegel",
  // "recipmedian", "medianrecip". Throws ConfigError.
  static EstimatorSpec parse(std::string_view text);

  EstimatorKind kind() const noexcept { return kind_; }
  // Quantile level; 0.5 for Median and the reciprocal kinds, 0 where meaningless.
  double q() const noexcept { return q_; }
  bool is_rank_based() const noexcept {
    return kind_ == EstimatorKind::Percentile || kind_ == EstimatorKind::Median;
  }
  Space input_space() const noexcept;
  Space output_space() const noexcept;

  // Inverse of parse.
  std::string name() const;

  friend bool operator==(const EstimatorSpec&, const EstimatorSpec&) = default;

 private:
  EstimatorSpec(EstimatorKind kind, double q) : kind_(kind), q_(q) {}
  EstimatorKind kind_;
  double q_;
};

// 1-based rank ceil(q*n) clamped to [1, n]. A relative slack of 1e-9 absorbs
// representation error in q*n (0.55*20 must give 11, not 12).
std::size_t percentile_rank(double q, std::size_t n);

// Element of rank ceil(q*n) in ascending order; always a member of s.
double percentile(double q, std::span<const double> s);
double median(std::span<const double> s);
double mean(std::span<const double> s);
double reciprocal_median(std::span<const double> s);
double median_of_reciprocals(std::span<const double> s);

struct WeiszfeldOptions {
  double tol = 1e-9;
  std::size_t max_iterations = 100000;
  bool record_objective = false;
};

struct WeiszfeldResult {
  Point2D point;
  std::size_t iterations = 0;
  // Norm of the sum of unit vectors towards the data, or 0 when the optimum
  // is a data point satisfying the subgradient condition.
  double residual = 0.0;
  bool at_data_point = false;
  std::vector<double> objective;  // filled when record_objective is set
};

double sum_of_distances(std::span<const Point2D> pts, Point2D at);

// Sum over data points not coinciding with `at` of (p - at) / |p - at|.
Point2D unit_vector_sum(std::span<const Point2D> pts, Point2D at);

// Geometric median by Weiszfeld iteration with the Vardi-Zhang step at data
// points. Starts at the coordinate-wise median. Throws ConvergenceError.
WeiszfeldResult weiszfeld(std::span<const Point2D> pts, const WeiszfeldOptions& opts = {});
Point2D l1_median(std::span<const Point2D> pts, double tol = 1e-9);

// Repeated-median line: slope = med_i med_{j!=i} slope(i,j), intercept =
// med_i (y_i - slope*x_i). Pairs with equal x are skipped.
LineCoeffs siegel_line(std::span<const Point2D> pts);

struct AnalyticBreakdown {
  std::optional<double> beta_g;  // asymptotic breakdown point
  std::optional<double> beta_f;  // asymptotic onto-breakdown point
};

AnalyticBreakdown analytic_breakdown(const EstimatorSpec& spec);

// Dispatch on kind. Throws ConfigError when the sample's space does not match
// the estimator's input space.
Value evaluate(const EstimatorSpec& spec, std::span<const double> s);
Value evaluate(const EstimatorSpec& spec, std::span<const Point2D> s);

}  // namespace robcomp
