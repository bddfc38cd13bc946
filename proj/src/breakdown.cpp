#include "robcomp/breakdown.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>

#include "robcomp/errors.hpp"
#include "robcomp/manipulate.hpp"
#include "robcomp/omp.hpp"

namespace robcomp {

std::string Strategy::name() const {
  const char* s = sign == Sign::Positive ? "+" : "-";
  switch (placement) {
    case Placement::Prefix:
      return sign == Sign::Positive ? "all-positive" : "all-negative";
    case Placement::Concentrated: {
      std::string out = std::string("concentrated-by-group(") + s + ",quota=" + std::to_string(quota);
      if (outer_quota > 0) out += ",outer-quota=" + std::to_string(outer_quota);
      return out + ")";
    }
    case Placement::Spread: return std::string("spread-across-groups(") + s + ")";
    case Placement::InlierCollapse: return std::string("inlier-collapse(") + s + ")";
  }
  return "?";
}

void ContaminationModel::validate() const {
  if (ladder.size() < 2) throw ConfigError("contamination ladder needs at least two rungs");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0.0) || !std::isfinite(ladder[i])) {
      throw ConfigError("ladder rungs must be positive and finite");
    }
    if (i > 0 && !(ladder[i] > ladder[i - 1])) throw ConfigError("ladder must be strictly increasing");
  }
  if (radius < 0.0 || !std::isfinite(radius)) throw ConfigError("far radius must be positive");
  if (signs.empty()) throw ConfigError("contamination model has no signs");
}

bool tracks_magnitude(std::span<const double> deviations, std::span<const double> ladder) {
  if (ladder.size() < 2 || deviations.size() != ladder.size()) {
    throw ConfigError("tracks_magnitude: need one deviation per rung and at least two rungs");
  }
  const std::size_t L = ladder.size();
  const double m_lo = ladder[L - 2], m_hi = ladder[L - 1];
  const double lo = deviations[L - 2], hi = deviations[L - 1];
  return lo >= kTrackingFloor * m_lo && hi >= kTrackingFloor * m_hi &&
         hi >= 0.5 * (m_hi / m_lo) * lo;
}

namespace {

double sign_of(Sign s) { return s == Sign::Positive ? 1.0 : -1.0; }

double max_abs(const HierarchicalDataset& data) {
  return std::visit(
      [](const auto& v) {
        double out = 0.0;
        for (const auto& p : v) {
          if constexpr (std::is_same_v<std::decay_t<decltype(p)>, double>) {
            out = std::max(out, std::abs(p));
          } else {
            out = std::max(out, std::hypot(p.x, p.y));
          }
        }
        return out;
      },
      data.payload());
}

// rho(x', X): largest distance from the probe to the clean data.
double rho_scalar(double probe, const std::vector<double>& xs) {
  double out = 0.0;
  for (double x : xs) out = std::max(out, std::abs(probe - x));
  return out;
}

double rho_point(Point2D probe, const std::vector<Point2D>& ps) {
  double out = 0.0;
  for (const auto& p : ps) out = std::max(out, std::hypot(probe.x - p.x, probe.y - p.y));
  return out;
}

Point2D far_point(double s, double magnitude) { return {0.0, s * magnitude}; }

bool inlier_probes_valid(const HierarchicalDataset& data, const ContaminationModel& model,
                         double radius) {
  if (data.space() != Space::Scalar) return false;
  const auto& xs = std::get<std::vector<double>>(data.payload());
  const std::size_t L = model.ladder.size();
  for (std::size_t r = L - 2; r < L; ++r) {
    for (Sign s : model.signs) {
      if (rho_scalar(sign_of(s) / model.ladder[r], xs) > radius) return false;
    }
  }
  return true;
}

void check_far_placement(const HierarchicalDataset& data, const ContaminationModel& model,
                         double radius) {
  const double m_lo = model.ladder[model.ladder.size() - 2];
  for (Sign s : model.signs) {
    const double rho = std::visit(
        [&](const auto& v) {
          if constexpr (std::is_same_v<typename std::decay_t<decltype(v)>::value_type, double>) {
            return rho_scalar(sign_of(s) * m_lo, v);
          } else {
            return rho_point(far_point(sign_of(s), m_lo), v);
          }
        },
        data.payload());
    if (!(rho > radius)) {
      throw ConfigError("ladder rung " + std::to_string(m_lo) +
                        " does not place points beyond the far radius " + std::to_string(radius));
    }
  }
}

std::size_t max_inner_size(const GroupLayout& layout) {
  return *std::max_element(layout.inner_sizes.begin(), layout.inner_sizes.end());
}

// First inner-group index owned by each outer group (a single outer group below depth 3).
std::vector<std::size_t> outer_starts(const GroupLayout& layout) {
  if (layout.depth < 3) return {0};
  std::vector<std::size_t> starts(layout.outer_counts.size());
  std::size_t acc = 0;
  for (std::size_t j = 0; j < starts.size(); ++j) {
    starts[j] = acc;
    acc += layout.outer_counts[j];
  }
  return starts;
}

std::vector<std::size_t> outer_counts(const GroupLayout& layout) {
  if (layout.depth < 3) return {layout.inner_sizes.size()};
  return layout.outer_counts;
}

HierarchicalDataset apply_contamination(const HierarchicalDataset& data,
                                        std::span<const std::size_t> order, const Strategy& strategy,
                                        std::size_t m, double magnitude) {
  const double s = sign_of(strategy.sign);
  return std::visit(
      [&](const auto& clean) {
        auto v = clean;
        using T = typename std::decay_t<decltype(clean)>::value_type;
        for (std::size_t t = 0; t < m; ++t) {
          if constexpr (std::is_same_v<T, double>) {
            v[order[t]] = s * magnitude;
          } else {
            v[order[t]] = far_point(s, magnitude);
          }
        }
        if (strategy.placement == Placement::InlierCollapse) {
          if constexpr (std::is_same_v<T, double>) {
            for (std::size_t t = m; t < order.size(); ++t) v[order[t]] = s / magnitude;
          }
        }
        return data.with_payload(Payload(std::move(v)));
      },
      data.payload());
}

}  // namespace

double resolve_radius(const HierarchicalDataset& data, const ContaminationModel& model) {
  return model.radius > 0.0 ? model.radius : max_abs(data) + 1.0;
}

std::vector<Strategy> enumerate_strategies(const HierarchicalDataset& data,
                                           const ContaminationModel& model) {
  model.validate();
  const GroupLayout& layout = data.layout();
  const bool inlier = model.inlier_collapse &&
                      inlier_probes_valid(data, model, resolve_radius(data, model));
  std::vector<Strategy> out;
  if (layout.depth == 1) {
    for (Sign s : model.signs) out.push_back({Placement::Prefix, s, 0, 0});
  } else {
    const std::size_t max_k = max_inner_size(layout);
    const auto counts = outer_counts(layout);
    const std::size_t max_n = *std::max_element(counts.begin(), counts.end());
    if (model.concentrated) {
      for (Sign s : model.signs) {
        if (layout.depth == 3) {
          for (std::size_t c = 1; c <= max_n; ++c) {
            for (std::size_t b = 1; b <= max_k; ++b) out.push_back({Placement::Concentrated, s, b, c});
          }
        } else {
          for (std::size_t b = 1; b <= max_k; ++b) out.push_back({Placement::Concentrated, s, b, 0});
        }
      }
    }
    if (model.spread) {
      for (Sign s : model.signs) out.push_back({Placement::Spread, s, 0, 0});
    }
  }
  if (inlier) {
    for (Sign s : model.signs) out.push_back({Placement::InlierCollapse, s, 0, 0});
  }
  return out;
}

std::vector<std::size_t> replacement_order(const HierarchicalDataset& data, const Strategy& strategy) {
  const GroupLayout& layout = data.layout();
  const std::size_t total = layout.total();
  std::vector<std::size_t> order;
  order.reserve(total);
  if (strategy.placement == Placement::Prefix || strategy.placement == Placement::InlierCollapse ||
      layout.depth == 1) {
    order.resize(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    return order;
  }

  const auto offsets = layout.inner_offsets();
  const auto starts = outer_starts(layout);
  const auto counts = outer_counts(layout);

  if (strategy.placement == Placement::Concentrated) {
    std::vector<char> taken(total, 0);
    const std::size_t outer_quota = layout.depth == 3 ? strategy.outer_quota : counts.front();
    for (std::size_t j = 0; j < starts.size(); ++j) {
      const std::size_t groups = std::min(outer_quota, counts[j]);
      for (std::size_t gi = 0; gi < groups; ++gi) {
        const std::size_t g = starts[j] + gi;
        const std::size_t take = std::min(strategy.quota, layout.inner_sizes[g]);
        for (std::size_t t = 0; t < take; ++t) {
          order.push_back(offsets[g] + t);
          taken[offsets[g] + t] = 1;
        }
      }
    }
    for (std::size_t idx = 0; idx < total; ++idx) {
      if (!taken[idx]) order.push_back(idx);
    }
    return order;
  }

  // Spread: inner groups interleaved across outer groups, one point per group per pass.
  std::vector<std::size_t> group_seq;
  const std::size_t max_n = *std::max_element(counts.begin(), counts.end());
  for (std::size_t p = 0; p < max_n; ++p) {
    for (std::size_t j = 0; j < starts.size(); ++j) {
      if (p < counts[j]) group_seq.push_back(starts[j] + p);
    }
  }
  const std::size_t max_k = max_inner_size(layout);
  for (std::size_t t = 0; t < max_k; ++t) {
    for (std::size_t g : group_seq) {
      if (t < layout.inner_sizes[g]) order.push_back(offsets[g] + t);
    }
  }
  return order;
}

HierarchicalDataset contaminate(const HierarchicalDataset& data, const Strategy& strategy,
                                std::size_t m, double magnitude) {
  if (m > data.size()) throw ConfigError("contaminate: m exceeds the dataset size");
  const auto order = replacement_order(data, strategy);
  return apply_contamination(data, order, strategy, m, magnitude);
}

Trial run_trial(std::span<const EstimatorSpec> levels, const HierarchicalDataset& data,
                const ContaminationModel& model, std::size_t m, const Strategy& strategy) {
  model.validate();
  const Value clean = serial::evaluate_stack(levels, data);
  const auto order = replacement_order(data, strategy);
  Trial trial{m, strategy, {}, false};
  for (double magnitude : model.ladder) {
    const auto dirty = apply_contamination(data, order, strategy, m, magnitude);
    trial.deviations.push_back(value_distance(clean, serial::evaluate_stack(levels, dirty)));
  }
  trial.broken = tracks_magnitude(trial.deviations, model.ladder);
  return trial;
}

namespace {

std::string stack_name(std::span<const EstimatorSpec> levels) {
  std::string s;
  for (const auto& l : levels) {
    if (!s.empty()) s += '/';
    s += l.name();
  }
  return s;
}

std::optional<double> stack_beta(std::span<const EstimatorSpec> levels) {
  if (levels.size() == 1) return analytic_breakdown(levels.front()).beta_g;
  return composite_beta(CompositeSpec::make({levels.begin(), levels.end()})).beta;
}

BreakdownReport measure_impl(std::span<const EstimatorSpec> levels, const HierarchicalDataset& data,
                             const ContaminationModel& model, bool parallel) {
  model.validate();
  check_chain(levels);
  BreakdownReport report;
  report.estimator = stack_name(levels);
  report.n = data.size();
  report.radius = resolve_radius(data, model);
  report.beta_analytic = stack_beta(levels);
  check_far_placement(data, model, report.radius);

  const Value clean = serial::evaluate_stack(levels, data);
  const auto strategies = enumerate_strategies(data, model);
  std::vector<std::vector<std::size_t>> orders;
  orders.reserve(strategies.size());
  for (const auto& s : strategies) orders.push_back(replacement_order(data, s));

  const std::size_t L = model.ladder.size();
  const std::array<double, 2> top{model.ladder[L - 2], model.ladder[L - 1]};
  const long long count = static_cast<long long>(strategies.size());
  std::vector<char> broken(strategies.size());
  std::vector<std::exception_ptr> errors(strategies.size());

  for (std::size_t m = 0; m <= data.size(); ++m) {
#pragma omp parallel for schedule(dynamic) if (parallel && count > 1)
    for (long long si = 0; si < count; ++si) {
      try {
        std::array<double, 2> dev{};
        for (std::size_t r = 0; r < 2; ++r) {
          const auto dirty = apply_contamination(data, orders[si], strategies[si], m, top[r]);
          dev[r] = value_distance(clean, serial::evaluate_stack(levels, dirty));
        }
        broken[si] = tracks_magnitude(dev, top);
      } catch (...) {
        errors[si] = std::current_exception();
      }
    }
    for (std::size_t si = 0; si < strategies.size(); ++si) {
      if (errors[si]) std::rethrow_exception(errors[si]);
    }
    const auto hit = std::find(broken.begin(), broken.end(), char{1});
    if (hit != broken.end()) {
      const auto& witness = strategies[static_cast<std::size_t>(hit - broken.begin())];
      report.witness = run_trial(levels, data, model, m, witness);
      report.g = m == 0 ? 0 : m - 1;
      return report;
    }
  }
  report.g = data.size();
  return report;
}

}  // namespace

BreakdownReport measure_breakdown(std::span<const EstimatorSpec> levels,
                                  const HierarchicalDataset& data, const ContaminationModel& model) {
  return measure_impl(levels, data, model, true);
}

std::size_t measure_g(std::span<const EstimatorSpec> levels, const HierarchicalDataset& data,
                      const ContaminationModel& model) {
  return measure_breakdown(levels, data, model).g;
}

namespace serial {

BreakdownReport measure_breakdown(std::span<const EstimatorSpec> levels,
                                  const HierarchicalDataset& data, const ContaminationModel& model) {
  return measure_impl(levels, data, model, false);
}

}  // namespace serial

// ---------------------------------------------------------------------------
// Onto-breakdown

std::vector<Value> default_onto_targets(const EstimatorSpec& spec, const HierarchicalDataset& data,
                                        const ContaminationModel& model) {
  model.validate();
  const double top = model.ladder.back();
  const Value clean = evaluate_stack(std::span<const EstimatorSpec>(&spec, 1), data);
  if (spec.output_space() == Space::Plane) {
    const auto c = std::get<Point2D>(clean);
    return {Point2D{top, top}, Point2D{-top, -top}, Point2D{0.0, 0.0}, Point2D{c.x + 1.0, c.y + 1.0}};
  }
  if (spec.output_space() == Space::Scalar) {
    return {top, -top, 0.0, std::get<double>(clean) + 1.0};
  }
  throw ConfigError("onto-breakdown targets are defined for scalar and planar outputs");
}

namespace {

constexpr double kOntoTol = 1e-6;

bool reached(const Value& got, const Value& want) {
  double scale = 1.0;
  if (const auto* d = std::get_if<double>(&want)) scale = std::max(1.0, std::abs(*d));
  if (const auto* p = std::get_if<Point2D>(&want)) scale = std::max(1.0, std::hypot(p->x, p->y));
  return value_distance(got, want) <= kOntoTol * scale;
}

double safe_reciprocal(double v) { return v != 0.0 ? 1.0 / v : 0.0; }

// Smallest m in [0, n] for which `reach(m)` holds, scanning upward.
template <typename Reach>
std::optional<std::size_t> first_reaching(std::size_t n, Reach&& reach) {
  for (std::size_t m = 0; m <= n; ++m) {
    if (reach(m)) return m;
  }
  return std::nullopt;
}

OntoTarget scalar_target(const EstimatorSpec& spec, const std::vector<double>& xs, double y) {
  const std::size_t n = xs.size();
  OntoTarget out{y, std::nullopt, 0};
  auto eval = [&spec](const std::vector<double>& v) { return evaluate(spec, std::span<const double>(v)); };

  if (spec.kind() == EstimatorKind::Mean) {
    const double total = std::accumulate(xs.begin(), xs.end(), 0.0);
    out.min_m = first_reaching(n, [&](std::size_t m) {
      if (m == 0) return reached(eval(xs), y);
      double rest = total;
      for (std::size_t i = 0; i < m; ++i) rest -= xs[i];
      std::vector<double> v(xs);
      const double fill = (static_cast<double>(n) * y - rest) / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) v[i] = fill;
      return std::isfinite(fill) && reached(eval(v), y);
    });
    return out;
  }

  // Rank-based kinds: copies of the preimage value replace the m lowest or the
  // m highest points in the estimator's ordering.
  const bool reciprocal_key = spec.kind() == EstimatorKind::MedianOfReciprocals;
  const bool reciprocal_target = spec.kind() == EstimatorKind::ReciprocalMedian ||
                                 spec.kind() == EstimatorKind::MedianOfReciprocals;
  const double preimage = reciprocal_target ? safe_reciprocal(y) : y;
  std::vector<std::size_t> by_key(n);
  std::iota(by_key.begin(), by_key.end(), std::size_t{0});
  std::stable_sort(by_key.begin(), by_key.end(), [&](std::size_t a, std::size_t b) {
    const double ka = reciprocal_key ? safe_reciprocal(xs[a]) : xs[a];
    const double kb = reciprocal_key ? safe_reciprocal(xs[b]) : xs[b];
    return ka < kb;
  });
  out.min_m = first_reaching(n, [&](std::size_t m) {
    for (int side = 0; side < 2; ++side) {
      std::vector<double> v(xs);
      for (std::size_t t = 0; t < m; ++t) v[side == 0 ? by_key[t] : by_key[n - 1 - t]] = preimage;
      if (reached(eval(v), y)) return true;
    }
    return false;
  });
  return out;
}

OntoTarget planar_target(const std::vector<Point2D>& ps, Point2D y) {
  const std::size_t n = ps.size();
  OntoTarget out{y, std::nullopt, 0};
  std::vector<std::size_t> far_first(n);
  std::iota(far_first.begin(), far_first.end(), std::size_t{0});
  std::stable_sort(far_first.begin(), far_first.end(), [&](std::size_t a, std::size_t b) {
    return std::hypot(ps[a].x - y.x, ps[a].y - y.y) > std::hypot(ps[b].x - y.x, ps[b].y - y.y);
  });

  DescentOptions tight;
  tight.grad_tol = 1e-12;
  tight.max_iterations = 20000;

  out.min_m = first_reaching(n, [&](std::size_t m) {
    if (m == 0) return reached(l1_median(ps), y);
    // Copies of the target in place of the m farthest points.
    std::vector<Point2D> v(ps);
    for (std::size_t t = 0; t < m; ++t) v[far_first[t]] = y;
    if (reached(l1_median(v), y)) return true;
    // Gradient solver moving the m farthest points.
    std::vector<Point2D> reordered(n);
    for (std::size_t t = 0; t < n; ++t) reordered[t] = ps[far_first[t]];
    try {
      const auto solved = solve_group(reordered, y, m, tight);
      return reached(l1_median(solved.group), y);
    } catch (const ConvergenceError&) {
      ++out.solver_failures;
      return false;
    }
  });
  return out;
}

}  // namespace

OntoResult measure_f(const EstimatorSpec& spec, const HierarchicalDataset& data,
                     std::span<const Value> targets) {
  if (data.depth() != 1) throw ConfigError("measure_f works on flat data for an atomic estimator");
  if (spec.input_space() != data.space()) throw ConfigError(spec.name() + ": data space mismatch");
  if (targets.empty()) throw ConfigError("measure_f needs at least one target");

  OntoResult result;
  switch (spec.kind()) {
    case EstimatorKind::Mean:
    case EstimatorKind::Percentile:
    case EstimatorKind::Median:
    case EstimatorKind::ReciprocalMedian:
    case EstimatorKind::MedianOfReciprocals: {
      const auto& xs = std::get<std::vector<double>>(data.payload());
      for (const auto& t : targets) result.targets.push_back(scalar_target(spec, xs, std::get<double>(t)));
      break;
    }
    case EstimatorKind::L1Median: {
      const auto& ps = std::get<std::vector<Point2D>>(data.payload());
      for (const auto& t : targets) result.targets.push_back(planar_target(ps, std::get<Point2D>(t)));
      break;
    }
    case EstimatorKind::SiegelLine:
      throw ConfigError("onto-breakdown is not measurable for " + spec.name());
  }

  std::size_t f = 0;
  for (const auto& t : result.targets) {
    if (!t.min_m) return result;  // some target unreachable even with every point replaced
    f = std::max(f, *t.min_m);
  }
  result.f = f;
  return result;
}

// ---------------------------------------------------------------------------
// Composite rules

CompositeBeta composite_beta(const CompositeSpec& spec) {
  const auto levels = spec.levels();
  if (levels.size() == 2 && levels[0].kind() == EstimatorKind::ReciprocalMedian &&
      levels[1].kind() == EstimatorKind::MedianOfReciprocals) {
    return {0.25, "registry: reciprocal-median pair (levels measure 0, composite 1/4)"};
  }

  const bool all_rank = std::all_of(levels.begin(), levels.end(),
                                    [](const EstimatorSpec& l) { return l.is_rank_based(); });
  if (all_rank) {
    // Driving the output to +inf needs the upper tail broken at every level,
    // to -inf the lower tail; the adversary takes the cheaper direction.
    double down = 1.0, up = 1.0;
    for (const auto& l : levels) {
      down *= l.q();
      up *= 1.0 - l.q();
    }
    return {std::min(down, up), "percentile chain: min(prod q, prod (1-q))"};
  }

  double beta = 1.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto a = analytic_breakdown(levels[i]);
    if (!a.beta_g) return {std::nullopt, "level " + std::to_string(i + 1) + " has no known breakdown point"};
    const bool inner = i + 1 < levels.size();
    if (inner && (!a.beta_f || *a.beta_f != *a.beta_g)) {
      return {std::nullopt, "product-rule hypothesis unmet: level " + std::to_string(i + 1) +
                                " breakdown and onto-breakdown differ"};
    }
    beta *= *a.beta_g;
  }
  return {beta, "product of level breakdown points"};
}

std::vector<InequalityCheck> check_inequalities(const BreakdownReport& inner,
                                                const BreakdownReport& outer,
                                                const BreakdownReport& composite) {
  const double g1 = static_cast<double>(inner.g), g2 = static_cast<double>(outer.g);
  const double g = static_cast<double>(composite.g);
  std::vector<InequalityCheck> out;
  out.push_back({"lower bound g2(n)*g1(k) <= g(nk)", g2 * g1, g, g2 * g1 <= g});
  if (inner.f) {
    const double f1 = static_cast<double>(*inner.f);
    out.push_back({"upper bound g(nk) <= f1(k)*(g2(n)+1)", g, f1 * (g2 + 1.0), g <= f1 * (g2 + 1.0)});
    out.push_back({"inner g1(k) < f1(k)", g1, f1, g1 < f1});
  }
  if (outer.f) {
    const double f2 = static_cast<double>(*outer.f);
    out.push_back({"outer g2(n) < f2(n)", g2, f2, g2 < f2});
  }
  if (composite.f) {
    const double fc = static_cast<double>(*composite.f);
    out.push_back({"composite g(nk) < f(nk)", g, fc, g < fc});
  }
  return out;
}

InequalityCheck check_unequal_bound(std::vector<std::size_t> inner_g, std::size_t outer_g,
                                    std::size_t composite_g) {
  std::sort(inner_g.begin(), inner_g.end());
  const std::size_t take = std::min(outer_g, inner_g.size());
  const double lhs = static_cast<double>(
      std::accumulate(inner_g.begin(), inner_g.begin() + static_cast<std::ptrdiff_t>(take), std::size_t{0}));
  const double rhs = static_cast<double>(composite_g);
  return {"unequal sizes: sum of g2 smallest g1(k_i) <= g(sum k_i)", lhs, rhs, lhs <= rhs};
}

}  // namespace robcomp
