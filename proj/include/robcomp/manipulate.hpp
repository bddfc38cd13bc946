#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "robcomp/composition.hpp"
#include "robcomp/estimators.hpp"

namespace robcomp {

// Number of points the manipulation moves out of n: n/2 for even n, (n+1)/2 for odd.
std::size_t half_count(std::size_t n);

// Every distance in h is sqrt(dx^2 + dy^2 + kAnchorSmoothing^2) so the
// objective stays finite when a point sits on the anchor.
inline constexpr double kAnchorSmoothing = 1e-12;

// First-order optimality residual of `anchor` as L1-median of free + fixed:
//   h = (sum (x_i - x0)/r_i)^2 + (sum (y_i - y0)/r_i)^2
// over all points. h == 0 iff the anchor is the L1-median (anchor not a data point).
struct ObjectiveState {
  double h = 0.0;
  // d h / d x_i then d h / d y_i for each free point i, interleaved (x0, y0, x1, y1, ...).
  std::vector<double> gradient;
};

double objective_h(Point2D anchor, std::span<const Point2D> free_points,
                   std::span<const Point2D> fixed_points);
ObjectiveState objective_with_gradient(Point2D anchor, std::span<const Point2D> free_points,
                                       std::span<const Point2D> fixed_points);

struct DescentOptions {
  double grad_tol = 1e-5;
  // h must also reach this (the squared Weiszfeld residual tolerance): far from
  // the data the gradient shrinks like 1/r and a small gradient alone leaves
  // the median well off target.
  double h_tol = 1e-18;
  std::size_t max_iterations = 100000;
  double initial_step = 1.0;
  double shrink = 0.5;
  double armijo = 1e-4;
};

struct GroupSolve {
  std::vector<Point2D> group;  // first k_tilde entries moved, the rest untouched
  std::size_t iterations = 0;
  double grad_norm = 0.0;
  double h = 0.0;
};

// Moves the first k_tilde points of `group` by gradient descent on h until
// |grad h| < grad_tol, making `target` the group's L1-median.
// Throws ConvergenceError (carrying the best h) after max_iterations.
GroupSolve solve_group(std::span<const Point2D> group, Point2D target, std::size_t k_tilde,
                       const DescentOptions& opts = {});

struct ModifiedPoint {
  std::size_t group = 0;
  std::size_t index = 0;
  Point2D old_point;
  Point2D new_point;
};

struct StageStats {
  std::size_t iterations = 0;
  double grad_norm = 0.0;
  double h = 0.0;
};

struct ManipulationPlan {
  Point2D target;
  std::size_t n = 0, k = 0, n_tilde = 0, k_tilde = 0;
  std::vector<Point2D> original_medians;  // L1-median of every group before
  std::vector<Point2D> moved_medians;     // targets for groups 0..n_tilde-1
  std::vector<ModifiedPoint> modified;    // n_tilde * k_tilde entries, group-major
  Point2D achieved;                       // L1-median of L1-medians after the plan
  double residual = 0.0;                  // |achieved - target|
  StageStats top;                         // outer solve
  std::vector<StageStats> groups;         // one per moved group
};

// Two-stage manipulation of an L1-median of L1-medians (depth-2 planar data):
// solve the outer level for new medians of the first n_tilde groups, then
// drive each of those groups to its new median by moving its first k_tilde
// points. Groups are solved in parallel; see serial::plan_manipulation.
ManipulationPlan plan_manipulation(const HierarchicalDataset& data, Point2D target,
                                   const DescentOptions& opts = {}, double weiszfeld_tol = 1e-9);

// Data with every modified point replaced.
HierarchicalDataset apply_plan(const HierarchicalDataset& data, const ManipulationPlan& plan);

namespace serial {

ManipulationPlan plan_manipulation(const HierarchicalDataset& data, Point2D target,
                                   const DescentOptions& opts = {}, double weiszfeld_tol = 1e-9);

}  // namespace serial

}  // namespace robcomp
