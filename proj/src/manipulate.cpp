#include "robcomp/manipulate.hpp"

#include <cmath>
#include <exception>
#include <string>

#include "robcomp/errors.hpp"
#include "robcomp/omp.hpp"

namespace robcomp {

std::size_t half_count(std::size_t n) { return n % 2 == 0 ? n / 2 : (n + 1) / 2; }

namespace {

constexpr double kSmooth2 = kAnchorSmoothing * kAnchorSmoothing;

struct Sums {
  double sx = 0.0;
  double sy = 0.0;
};

Sums unit_sums(Point2D a, std::span<const Point2D> free_points, std::span<const Point2D> fixed_points) {
  Sums s;
  auto add = [&](const Point2D& p) {
    const double dx = p.x - a.x, dy = p.y - a.y;
    const double r = std::sqrt(dx * dx + dy * dy + kSmooth2);
    s.sx += dx / r;
    s.sy += dy / r;
  };
  for (const auto& p : free_points) add(p);
  for (const auto& p : fixed_points) add(p);
  return s;
}

double norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace

double objective_h(Point2D anchor, std::span<const Point2D> free_points,
                   std::span<const Point2D> fixed_points) {
  const Sums s = unit_sums(anchor, free_points, fixed_points);
  return s.sx * s.sx + s.sy * s.sy;
}

ObjectiveState objective_with_gradient(Point2D anchor, std::span<const Point2D> free_points,
                                       std::span<const Point2D> fixed_points) {
  const Sums s = unit_sums(anchor, free_points, fixed_points);
  ObjectiveState st;
  st.h = s.sx * s.sx + s.sy * s.sy;
  st.gradient.resize(2 * free_points.size());
  for (std::size_t i = 0; i < free_points.size(); ++i) {
    const double dx = free_points[i].x - anchor.x, dy = free_points[i].y - anchor.y;
    const double r2 = dx * dx + dy * dy + kSmooth2;
    const double r3 = r2 * std::sqrt(r2);
    st.gradient[2 * i] = 2.0 * (s.sx * (dy * dy + kSmooth2) - s.sy * dx * dy) / r3;
    st.gradient[2 * i + 1] = 2.0 * (s.sy * (dx * dx + kSmooth2) - s.sx * dx * dy) / r3;
  }
  return st;
}

GroupSolve solve_group(std::span<const Point2D> group, Point2D target, std::size_t k_tilde,
                       const DescentOptions& opts) {
  if (group.empty()) throw DomainError("solve_group: empty group");
  if (k_tilde > group.size()) throw ConfigError("solve_group: k_tilde exceeds group size");
  if (!(opts.grad_tol > 0.0)) throw ConfigError("solve_group: grad_tol must be positive");
  if (!std::isfinite(target.x) || !std::isfinite(target.y)) {
    throw DomainError("solve_group: non-finite target");
  }

  GroupSolve out;
  out.group.assign(group.begin(), group.end());
  std::span<Point2D> free_points(out.group.data(), k_tilde);
  std::span<const Point2D> fixed_points(out.group.data() + k_tilde, group.size() - k_tilde);

  ObjectiveState st = objective_with_gradient(target, free_points, fixed_points);
  std::vector<Point2D> trial(k_tilde);
  double t = opts.initial_step * opts.shrink;
  for (std::size_t it = 0;; ++it) {
    const double gn = norm(st.gradient);
    out.iterations = it;
    out.grad_norm = gn;
    out.h = st.h;
    if (gn < opts.grad_tol && st.h <= opts.h_tol) return out;
    if (it >= opts.max_iterations) {
      throw ConvergenceError("solve_group: gradient descent did not converge", st.h);
    }

    // Each search starts one expansion above the last accepted step.
    t = t / opts.shrink;
    for (;;) {
      for (std::size_t i = 0; i < k_tilde; ++i) {
        trial[i].x = free_points[i].x - t * st.gradient[2 * i];
        trial[i].y = free_points[i].y - t * st.gradient[2 * i + 1];
      }
      const double ht = objective_h(target, trial, fixed_points);
      if (ht <= st.h - opts.armijo * t * gn * gn) break;
      t *= opts.shrink;
      if (t < 1e-30) throw ConvergenceError("solve_group: line search failed", st.h);
    }
    std::copy(trial.begin(), trial.end(), free_points.begin());
    st = objective_with_gradient(target, free_points, fixed_points);
  }
}

namespace {

std::span<const Point2D> group_span(const std::vector<Point2D>& pts, std::size_t i, std::size_t k) {
  return std::span<const Point2D>(pts).subspan(i * k, k);
}

[[noreturn]] void rethrow_stage(std::exception_ptr ep, const std::string& stage) {
  try {
    std::rethrow_exception(ep);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(stage + ": " + e.what(), e.best_value());
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(stage + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(stage + ": " + e.what());
  }
}

ManipulationPlan plan_impl(const HierarchicalDataset& data, Point2D target, const DescentOptions& opts,
                           double weiszfeld_tol, bool parallel) {
  if (data.depth() != 2 || data.space() != Space::Plane || !data.layout().equal_sizes()) {
    throw ConfigError("manipulation needs a two-level planar dataset with equal group sizes");
  }
  if (!std::isfinite(target.x) || !std::isfinite(target.y)) throw DomainError("non-finite target");

  const auto& pts = std::get<std::vector<Point2D>>(data.payload());
  ManipulationPlan plan;
  plan.target = target;
  plan.n = data.groups_per_outer();
  plan.k = data.group_size();
  plan.n_tilde = half_count(plan.n);
  plan.k_tilde = half_count(plan.k);

  const long long n = static_cast<long long>(plan.n);
  plan.original_medians.resize(plan.n);
  std::vector<std::exception_ptr> errors(plan.n);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long long i = 0; i < n; ++i) {
    try {
      plan.original_medians[i] = l1_median(group_span(pts, i, plan.k), weiszfeld_tol);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < plan.n; ++i) {
    if (errors[i]) rethrow_stage(errors[i], "group median " + std::to_string(i));
  }

  // Stage A: new medians for the first n_tilde groups.
  GroupSolve top;
  try {
    top = solve_group(plan.original_medians, target, plan.n_tilde, opts);
  } catch (...) {
    rethrow_stage(std::current_exception(), "stage A");
  }
  plan.top = {top.iterations, top.grad_norm, top.h};
  plan.moved_medians.assign(top.group.begin(), top.group.begin() + plan.n_tilde);

  // Stage B: each moved group is driven to its new median independently.
  const long long nt = static_cast<long long>(plan.n_tilde);
  std::vector<GroupSolve> solves(plan.n_tilde);
  errors.assign(plan.n_tilde, nullptr);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long long i = 0; i < nt; ++i) {
    try {
      solves[i] = solve_group(group_span(pts, i, plan.k), plan.moved_medians[i], plan.k_tilde, opts);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < plan.n_tilde; ++i) {
    if (errors[i]) rethrow_stage(errors[i], "stage B group " + std::to_string(i));
  }

  for (std::size_t i = 0; i < plan.n_tilde; ++i) {
    plan.groups.push_back({solves[i].iterations, solves[i].grad_norm, solves[i].h});
    for (std::size_t j = 0; j < plan.k_tilde; ++j) {
      plan.modified.push_back({i, j, pts[i * plan.k + j], solves[i].group[j]});
    }
  }

  const HierarchicalDataset after = apply_plan(data, plan);
  const auto& new_pts = std::get<std::vector<Point2D>>(after.payload());
  std::vector<Point2D> medians(plan.original_medians);
  for (std::size_t i = 0; i < plan.n_tilde; ++i) {
    medians[i] = l1_median(group_span(new_pts, i, plan.k), weiszfeld_tol);
  }
  plan.achieved = l1_median(medians, weiszfeld_tol);
  plan.residual = std::hypot(plan.achieved.x - target.x, plan.achieved.y - target.y);
  return plan;
}

}  // namespace

HierarchicalDataset apply_plan(const HierarchicalDataset& data, const ManipulationPlan& plan) {
  auto pts = std::get<std::vector<Point2D>>(data.payload());
  for (const auto& mp : plan.modified) pts.at(data.index_of(mp.group, mp.index)) = mp.new_point;
  return data.with_payload(std::move(pts));
}

ManipulationPlan plan_manipulation(const HierarchicalDataset& data, Point2D target,
                                   const DescentOptions& opts, double weiszfeld_tol) {
  return plan_impl(data, target, opts, weiszfeld_tol, true);
}

namespace serial {

ManipulationPlan plan_manipulation(const HierarchicalDataset& data, Point2D target,
                                   const DescentOptions& opts, double weiszfeld_tol) {
  return plan_impl(data, target, opts, weiszfeld_tol, false);
}

}  // namespace serial

}  // namespace robcomp
