#include "robcomp/estimators.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <numeric>
#include <string>

#include "robcomp/errors.hpp"

namespace robcomp {

namespace {

void check_sample(std::span<const double> s, const char* who) {
  if (s.empty()) throw DomainError(std::string(who) + ": empty sample");
  for (double v : s) {
    if (!std::isfinite(v)) throw DomainError(std::string(who) + ": non-finite value");
  }
}

void check_points(std::span<const Point2D> pts, const char* who) {
  if (pts.empty()) throw DomainError(std::string(who) + ": empty point set");
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw DomainError(std::string(who) + ": non-finite coordinate");
    }
  }
}

double rank_select(std::vector<double>& v, double q) {
  const std::size_t r = percentile_rank(q, v.size());
  auto nth = v.begin() + static_cast<std::ptrdiff_t>(r - 1);
  std::nth_element(v.begin(), nth, v.end());
  return *nth;
}

double safe_reciprocal(double v) { return v != 0.0 ? 1.0 / v : 0.0; }

}  // namespace

double value_distance(const Value& a, const Value& b) {
  if (a.index() != b.index()) throw ConfigError("value_distance: mismatched value spaces");
  return std::visit(
      [&b](const auto& lhs) -> double {
        using T = std::decay_t<decltype(lhs)>;
        const auto& rhs = std::get<T>(b);
        if constexpr (std::is_same_v<T, double>) {
          return std::abs(lhs - rhs);
        } else if constexpr (std::is_same_v<T, Point2D>) {
          return std::hypot(lhs.x - rhs.x, lhs.y - rhs.y);
        } else {
          return std::hypot(lhs.slope - rhs.slope, lhs.intercept - rhs.intercept);
        }
      },
      a);
}

std::string_view space_name(Space s) {
  switch (s) {
    case Space::Scalar: return "scalar";
    case Space::Plane: return "plane";
    case Space::Line: return "line";
  }
  return "?";
}

EstimatorSpec EstimatorSpec::percentile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("percentile level must lie strictly inside (0,1)");
  return EstimatorSpec(EstimatorKind::Percentile, q);
}

EstimatorSpec EstimatorSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  if (head == "percentile") {
    if (colon == std::string_view::npos) throw ConfigError("percentile needs a level, e.g. percentile:0.25");
    const std::string_view arg = text.substr(colon + 1);
    double q = 0.0;
    auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), q);
    if (ec != std::errc() || ptr != arg.data() + arg.size()) {
      throw ConfigError("bad percentile level '" + std::string(arg) + "'");
    }
    return percentile(q);
  }
  if (colon != std::string_view::npos) {
    throw ConfigError("estimator '" + std::string(head) + "' takes no parameter");
  }
  if (head == "mean") return mean();
  if (head == "median") return median();
  if (head == "l1median") return l1_median();
  if (head == "siegel") return siegel_line();
  if (head == "recipmedian") return reciprocal_median();
  if (head == "medianrecip") return median_of_reciprocals();
  throw ConfigError("unknown estimator '" + std::string(text) + "'");
}

Space EstimatorSpec::input_space() const noexcept {
  switch (kind_) {
    case EstimatorKind::L1Median:
    case EstimatorKind::SiegelLine: return Space::Plane;
    default: return Space::Scalar;
  }
}

Space EstimatorSpec::output_space() const noexcept {
  switch (kind_) {
    case EstimatorKind::L1Median: return Space::Plane;
    case EstimatorKind::SiegelLine: return Space::Line;
    default: return Space::Scalar;
  }
}

std::string EstimatorSpec::name() const {
  switch (kind_) {
    case EstimatorKind::Mean: return "mean";
    case EstimatorKind::Percentile: {
      char buf[32];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, q_);
      (void)ec;
      return "percentile:" + std::string(buf, ptr);
    }
    case EstimatorKind::Median: return "median";
    case EstimatorKind::L1Median: return "l1median";
    case EstimatorKind::SiegelLine: return "siegel";
    case EstimatorKind::ReciprocalMedian: return "recipmedian";
    case EstimatorKind::MedianOfReciprocals: return "medianrecip";
  }
  return "?";
}

std::size_t percentile_rank(double q, std::size_t n) {
  if (n == 0) throw DomainError("percentile_rank: empty sample");
  const double scaled = q * static_cast<double>(n);
  const double r = std::ceil(scaled - 1e-9 * std::max(1.0, scaled));
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(r, 1.0)), 1, n);
}

double percentile(double q, std::span<const double> s) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("percentile: q must lie strictly inside (0,1)");
  check_sample(s, "percentile");
  std::vector<double> v(s.begin(), s.end());
  return rank_select(v, q);
}

double median(std::span<const double> s) { return percentile(0.5, s); }

double mean(std::span<const double> s) {
  check_sample(s, "mean");
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

double reciprocal_median(std::span<const double> s) { return safe_reciprocal(median(s)); }

double median_of_reciprocals(std::span<const double> s) {
  check_sample(s, "median_of_reciprocals");
  std::vector<double> v(s.size());
  std::transform(s.begin(), s.end(), v.begin(), safe_reciprocal);
  return rank_select(v, 0.5);
}

double sum_of_distances(std::span<const Point2D> pts, Point2D at) {
  double total = 0.0;
  for (const auto& p : pts) total += std::hypot(p.x - at.x, p.y - at.y);
  return total;
}

Point2D unit_vector_sum(std::span<const Point2D> pts, Point2D at) {
  Point2D r;
  for (const auto& p : pts) {
    const double d = std::hypot(p.x - at.x, p.y - at.y);
    if (d == 0.0) continue;
    r.x += (p.x - at.x) / d;
    r.y += (p.y - at.y) / d;
  }
  return r;
}

namespace {

constexpr double kCoincidence = 1e-12;

// Subgradient test at data point c: optimal iff |R| <= multiplicity of c.
bool data_point_optimal(std::span<const Point2D> pts, Point2D c) {
  double rx = 0.0, ry = 0.0, mult = 0.0;
  for (const auto& p : pts) {
    const double d = std::hypot(p.x - c.x, p.y - c.y);
    if (d <= kCoincidence) {
      mult += 1.0;
      continue;
    }
    rx += (p.x - c.x) / d;
    ry += (p.y - c.y) / d;
  }
  return std::hypot(rx, ry) <= mult * (1.0 + 1e-12);
}

}  // namespace

WeiszfeldResult weiszfeld(std::span<const Point2D> pts, const WeiszfeldOptions& opts) {
  check_points(pts, "l1_median");
  if (!(opts.tol > 0.0)) throw DomainError("l1_median: tol must be positive");

  WeiszfeldResult out;
  std::vector<double> xs(pts.size()), ys(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    xs[i] = pts[i].x;
    ys[i] = pts[i].y;
  }
  Point2D y{median(xs), median(ys)};

  auto finish_at_data = [&](Point2D c) {
    out.point = c;
    out.residual = 0.0;
    out.at_data_point = true;
    if (opts.record_objective) out.objective.push_back(sum_of_distances(pts, c));
    return out;
  };

  if (opts.record_objective) out.objective.push_back(sum_of_distances(pts, y));

  for (std::size_t it = 0;; ++it) {
    double wsum = 0.0, tx = 0.0, ty = 0.0, rx = 0.0, ry = 0.0, eta = 0.0;
    double nearest = std::numeric_limits<double>::infinity();
    std::size_t nearest_idx = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double dx = pts[i].x - y.x, dy = pts[i].y - y.y;
      const double d = std::hypot(dx, dy);
      if (d < nearest) {
        nearest = d;
        nearest_idx = i;
      }
      if (d <= kCoincidence) {
        eta += 1.0;
        continue;
      }
      const double w = 1.0 / d;
      wsum += w;
      tx += pts[i].x * w;
      ty += pts[i].y * w;
      rx += dx * w;
      ry += dy * w;
    }
    out.iterations = it;
    const double r = std::hypot(rx, ry);

    if (wsum == 0.0) return finish_at_data(pts[nearest_idx]);  // all points coincide
    if (eta > 0.0 && r <= eta) return finish_at_data(y);
    if (eta == 0.0 && r <= opts.tol) {
      out.point = y;
      out.residual = r;
      return out;
    }
    if (data_point_optimal(pts, pts[nearest_idx])) return finish_at_data(pts[nearest_idx]);
    if (it >= opts.max_iterations) {
      throw ConvergenceError("l1_median: Weiszfeld did not converge", r);
    }

    Point2D next{tx / wsum, ty / wsum};
    if (eta > 0.0) {
      const double lam = std::min(1.0, eta / r);
      next.x = (1.0 - lam) * next.x + lam * y.x;
      next.y = (1.0 - lam) * next.y + lam * y.y;
    }
    if (next == y) {
      throw ConvergenceError("l1_median: Weiszfeld stagnated above tolerance", r);
    }
    y = next;
    if (opts.record_objective) out.objective.push_back(sum_of_distances(pts, y));
  }
}

Point2D l1_median(std::span<const Point2D> pts, double tol) {
  WeiszfeldOptions opts;
  opts.tol = tol;
  return weiszfeld(pts, opts).point;
}

LineCoeffs siegel_line(std::span<const Point2D> pts) {
  check_points(pts, "siegel_line");
  const std::size_t n = pts.size();
  if (n < 2) throw DegenerateInputError("siegel_line: need at least two points");

  std::vector<double> inner(n);
  std::vector<double> slopes;
  slopes.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    slopes.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || pts[j].x == pts[i].x) continue;
      slopes.push_back((pts[j].y - pts[i].y) / (pts[j].x - pts[i].x));
    }
    if (slopes.empty()) {
      throw DegenerateInputError("siegel_line: every pair through point " + std::to_string(i) +
                                 " has equal x");
    }
    inner[i] = rank_select(slopes, 0.5);
  }
  LineCoeffs line;
  line.slope = rank_select(inner, 0.5);
  std::vector<double> offsets(n);
  for (std::size_t i = 0; i < n; ++i) offsets[i] = pts[i].y - line.slope * pts[i].x;
  line.intercept = rank_select(offsets, 0.5);
  return line;
}

AnalyticBreakdown analytic_breakdown(const EstimatorSpec& spec) {
  switch (spec.kind()) {
    case EstimatorKind::Mean: return {0.0, 0.0};
    case EstimatorKind::Percentile: {
      const double q = spec.q();
      return {std::min(q, 1.0 - q), std::max(q, 1.0 - q)};
    }
    case EstimatorKind::Median:
    case EstimatorKind::L1Median:
    case EstimatorKind::SiegelLine: return {0.5, 0.5};
    case EstimatorKind::ReciprocalMedian:
    case EstimatorKind::MedianOfReciprocals: return {0.0, std::nullopt};
  }
  return {};
}

Value evaluate(const EstimatorSpec& spec, std::span<const double> s) {
  switch (spec.kind()) {
    case EstimatorKind::Mean: return mean(s);
    case EstimatorKind::Percentile:
    case EstimatorKind::Median: return percentile(spec.q(), s);
    case EstimatorKind::ReciprocalMedian: return reciprocal_median(s);
    case EstimatorKind::MedianOfReciprocals: return median_of_reciprocals(s);
    default: break;
  }
  throw ConfigError(spec.name() + " expects planar points, got scalars");
}

Value evaluate(const EstimatorSpec& spec, std::span<const Point2D> s) {
  switch (spec.kind()) {
    case EstimatorKind::L1Median: return l1_median(s);
    case EstimatorKind::SiegelLine: return siegel_line(s);
    default: break;
  }
  throw ConfigError(spec.name() + " expects scalars, got planar points");
}

}  // namespace robcomp
