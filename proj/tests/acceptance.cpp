#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "robcomp/breakdown.hpp"
#include "robcomp/manipulate.hpp"
#include "robcomp/monitor.hpp"

using namespace robcomp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail += " [over time budget]";
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d %s: %s (%.2fs, budget %.0fs)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs,
              budget_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> normal_sample(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

const EstimatorSpec kMed = EstimatorSpec::median();

Outcome worked_example() {
  const std::vector<double> xs{0, .15, .2, .25, .4, .55, .6, .65, .72, .8, 1.0};
  const std::vector<EstimatorSpec> levels{kMed};
  const std::size_t g = measure_g(levels, HierarchicalDataset::flat(xs), {});
  return {g == 5, fmt("g=%zu, expected 5", g)};
}

Outcome percentile_limits() {
  std::mt19937_64 rng(402);
  const auto spec = EstimatorSpec::percentile(0.25);
  const std::vector<EstimatorSpec> levels{spec};
  bool ok = true;
  double prev_g = 1.0, prev_f = 1.0;
  std::string detail;
  for (std::size_t n : {20, 100, 400}) {
    const auto data = HierarchicalDataset::flat(normal_sample(rng, n));
    const std::size_t g = measure_g(levels, data, {});
    const auto f = measure_f(spec, data, default_onto_targets(spec, data, {})).f;
    if (!f) return {false, fmt("f unmeasured at n=%zu", n)};
    const double nn = static_cast<double>(n);
    const double eg = std::abs(g / nn - 0.25), ef = std::abs(*f / nn - 0.75);
    ok &= eg <= 1.5 / nn && ef <= 1.5 / nn && eg <= prev_g && ef <= prev_f;
    prev_g = eg;
    prev_f = ef;
    detail += fmt("n=%zu g/n=%.4f f/n=%.4f; ", n, g / nn, *f / nn);
  }
  return {ok, detail};
}

Outcome product_rule() {
  std::mt19937_64 rng(403);
  const std::vector<EstimatorSpec> one{kMed}, two{kMed, kMed};
  bool ok = true;
  std::string detail;
  for (std::size_t nk : {5, 9, 15}) {
    const auto xs = normal_sample(rng, nk * nk);
    const auto composite = measure_breakdown(two, HierarchicalDataset::two_level(xs, nk, nk), {});
    const auto inner_data = HierarchicalDataset::flat(std::vector<double>(xs.begin(), xs.begin() + nk));
    auto inner = measure_breakdown(one, inner_data, {});
    inner.f = measure_f(kMed, inner_data, default_onto_targets(kMed, inner_data, {})).f;
    std::vector<double> medians;
    for (std::size_t i = 0; i < nk; ++i) medians.push_back(median(std::span<const double>(xs).subspan(i * nk, nk)));
    const auto outer = measure_breakdown(one, HierarchicalDataset::flat(medians), {});
    if (!inner.f) return {false, "inner f unmeasured"};
    const std::size_t lo = inner.g * outer.g, hi = *inner.f * (outer.g + 1);
    const double ratio = static_cast<double>(composite.g) / static_cast<double>(nk * nk);
    ok &= lo <= composite.g && composite.g <= hi;
    if (nk == 15) ok &= std::abs(ratio - 0.25) <= 0.08;
    detail += fmt("n=k=%zu g=%zu in [%zu,%zu] ratio=%.3f; ", nk, composite.g, lo, hi, ratio);
  }
  return {ok, detail};
}

Outcome percentile_formula() {
  auto beta = [](std::vector<EstimatorSpec> levels) { return composite_beta(CompositeSpec::make(levels)).beta.value_or(-1); };
  const double b1 = beta({EstimatorSpec::percentile(0.45), EstimatorSpec::percentile(0.55)});
  const double b2 = beta({EstimatorSpec::percentile(0.05), EstimatorSpec::percentile(0.95)});
  const double b3 = beta({EstimatorSpec::percentile(0.25), EstimatorSpec::percentile(0.75)});
  const double b4 = beta({kMed, kMed, kMed});
  // exact up to the rounding of one double product
  auto same = [](double a, double b) { return std::abs(a - b) <= 4 * std::numeric_limits<double>::epsilon() * b; };
  const bool ok = same(b1, 0.2475) && same(b2, 0.0475) && same(b3, 0.1875) && b4 == 0.125;
  return {ok, fmt("%.17g %.17g %.17g %.17g", b1, b2, b3, b4)};
}

Outcome reciprocal_counterexample() {
  std::mt19937_64 rng(405);
  const std::size_t nk = 15;
  const auto xs = normal_sample(rng, nk * nk);
  const std::vector<EstimatorSpec> e1{EstimatorSpec::reciprocal_median()}, e2{EstimatorSpec::median_of_reciprocals()};
  const std::vector<EstimatorSpec> pair{e1[0], e2[0]};
  const auto inner_data = HierarchicalDataset::flat(std::vector<double>(xs.begin(), xs.begin() + nk));
  const auto data = HierarchicalDataset::two_level(xs, nk, nk);
  const auto trace = evaluate_stack_trace(pair, data);
  const auto outer_data = HierarchicalDataset::flat(collect_values(trace.level_outputs[0]));
  const std::size_t g1 = measure_g(e1, inner_data, {}), g2 = measure_g(e2, outer_data, {});
  const std::size_t g = measure_g(pair, data, {});
  const double ratio = static_cast<double>(g) / static_cast<double>(nk * nk);
  return {g1 == 0 && g2 == 0 && ratio >= 0.15, fmt("g1=%zu g2=%zu composite g=%zu ratio=%.3f", g1, g2, g, ratio)};
}

Outcome manipulation_suite() {
  std::string detail;
  bool ok = true;
  for (auto [n, k] : {std::pair<std::size_t, std::size_t>{5, 8}, {10, 5}, {50, 20}}) {
    std::size_t tight = 0, loose = 0, exact_count = 0, converged = 0;
    double worst = 0.0;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      std::mt19937_64 rng(6000 + 100 * n + trial);
      std::uniform_real_distribution<double> data_u(-10, 10), target_u(-20, 20);
      std::vector<Point2D> pts(n * k);
      for (auto& p : pts) p = {data_u(rng), data_u(rng)};
      const Point2D target{target_u(rng), target_u(rng)};
      const auto plan = plan_manipulation(HierarchicalDataset::two_level(pts, n, k), target);
      const double err = std::max(std::abs(plan.achieved.x - target.x), std::abs(plan.achieved.y - target.y));
      worst = std::max(worst, err);
      tight += err <= 0.01;
      loose += err <= 0.05;
      exact_count += plan.modified.size() == half_count(n) * half_count(k);
      bool conv = plan.top.grad_norm < 1e-5;
      for (const auto& s : plan.groups) conv &= s.grad_norm < 1e-5;
      converged += conv;
    }
    ok &= tight >= 18 && loose == 20 && exact_count == 20 && converged == 20;
    detail += fmt("(%zu,%zu): %zu/20 within 0.01, %zu/20 within 0.05, worst %.2e; ", n, k, tight, loose, worst);
  }
  return {ok, detail};
}

Outcome gradient_check() {
  std::mt19937_64 rng(407);
  std::uniform_real_distribution<double> u(-10, 10);
  double worst = 0.0;
  for (int state = 0; state < 100; ++state) {
    const std::size_t k = 2 + state % 15, kt = half_count(k);
    std::vector<Point2D> free_pts(kt), fixed(k - kt);
    for (auto& p : free_pts) p = {u(rng), u(rng)};
    for (auto& p : fixed) p = {u(rng), u(rng)};
    const Point2D anchor{u(rng) / 2, u(rng) / 2};
    const auto st = objective_with_gradient(anchor, free_pts, fixed);
    std::vector<double> x;
    for (const auto& p : free_pts) {
      x.push_back(p.x);
      x.push_back(p.y);
    }
    auto h = [&](const std::vector<double>& v) {
      std::vector<Point2D> q(v.size() / 2);
      for (std::size_t i = 0; i < q.size(); ++i) q[i] = {v[2 * i], v[2 * i + 1]};
      return objective_h(anchor, q, fixed);
    };
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double fd = oracle::central_difference(h, x, i, 1e-6);
      diff += (st.gradient[i] - fd) * (st.gradient[i] - fd);
      ref += fd * fd;
    }
    worst = std::max(worst, std::sqrt(diff / ref));
  }
  return {worst <= 1e-4, fmt("worst relative error %.2e over 100 states", worst)};
}

Outcome flag_pattern() {
  // Expected flags per row over combos (.1,.1) (.9,.9) (.1,.9) (.9,.1) (.5,.5).
  const bool expected[9][5] = {
      {0, 0, 0, 0, 0}, {0, 1, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 1, 1, 0, 0}, {1, 0, 0, 1, 0},
      {0, 1, 0, 0, 1}, {1, 0, 0, 0, 1}, {0, 1, 1, 0, 1}, {1, 0, 0, 1, 1},
  };
  const auto combos = default_combos();
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : {20261017ULL, 424242ULL, 9001ULL}) {
    const auto scenarios = default_scenarios(seed);
    const auto report = run_scenarios(scenarios, combos);
    int mismatches = 0, out_of_range = 0;
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
      const auto& row = report.rows[r];
      for (std::size_t c = 0; c < combos.size(); ++c) {
        const double v = row.values[c];
        mismatches += row.flags[c] != expected[r][c];
        if (r == 0 && std::abs(v) > 3.0) ++out_of_range;
        if (row.flags[c] && !(std::abs(v) >= 100.0 && std::abs(v) <= 110.0)) ++out_of_range;
      }
    }
    ok &= mismatches == 0 && out_of_range == 0;
    detail += fmt("seed %llu: %d flag mismatches, %d out-of-range cells; ", static_cast<unsigned long long>(seed),
                  mismatches, out_of_range);
  }
  return {ok, detail};
}

Outcome unit_oracles() {
  std::mt19937_64 rng(409);
  std::uniform_real_distribution<double> u(-10, 10);
  int siegel_cases = 0, siegel_bad = 0;
  while (siegel_cases < 1000) {
    const std::size_t n = 2 + rng() % 7;
    std::vector<Point2D> p(n);
    for (auto& q : p) q = {u(rng), u(rng)};
    ++siegel_cases;
    const auto a = siegel_line(p), b = oracle::siegel(p);
    siegel_bad += !(a.slope == b.slope && a.intercept == b.intercept);
  }
  int weiszfeld_bad = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<Point2D> tri(3);
    for (auto& q : tri) q = {u(rng), u(rng)};
    const auto res = weiszfeld(tri);
    const auto grid = oracle::grid_l1_median(tri);
    const bool residual_ok = res.at_data_point || res.residual <= 1e-9;
    const bool optimal = sum_of_distances(tri, res.point) <= oracle::sum_dist(tri, grid.x, grid.y) + 1e-9;
    weiszfeld_bad += !(residual_ok && optimal);
  }
  int percentile_bad = 0;
  const std::pair<long, long> levels[] = {{1, 20}, {1, 10}, {1, 4}, {45, 100}, {1, 2}, {55, 100}, {3, 4}, {9, 10}, {19, 20}};
  for (int t = 0; t < 1000; ++t) {
    const auto xs = normal_sample(rng, 1 + rng() % 50);
    for (auto [num, den] : levels) {
      percentile_bad += percentile(static_cast<double>(num) / den, xs) != oracle::percentile(num, den, xs);
    }
  }
  return {siegel_bad == 0 && weiszfeld_bad == 0 && percentile_bad == 0,
          fmt("siegel %d/1000 mismatches, weiszfeld %d/100 failures, percentile %d/9000 mismatches", siegel_bad,
              weiszfeld_bad, percentile_bad)};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("robcomp_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string cli = ROBCOMP_CLI_PATH;
  auto sh = [](const std::string& cmd) {
    const int s = std::system(cmd.c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string scalars = (dir / "scalars.txt").string(), planar = (dir / "planar.txt").string();
  if (sh(cli + " generate --shape 9x9 --seed 11 --out " + scalars) != 0) return {false, "generate failed"};
  if (sh(cli + " generate --shape 5x8 --planar --distribution uniform --scale 10 --seed 12 --out " + planar) != 0) {
    return {false, "generate failed"};
  }
  const std::pair<const char*, std::string> commands[] = {
      {"generate", "generate --shape 4x5x6 --seed 13"},
      {"estimate", "estimate --estimator 1=percentile:0.45 --estimator 2=percentile:0.55 --input " + scalars},
      {"breakdown", "breakdown --estimator 1=median --estimator 2=median --seed 3 --input " + scalars},
      {"manipulate", "manipulate --target 3,-4 --seed 3 --input " + planar},
      {"monitor", "monitor --seed 14"},
      {"monitor-tabular", "monitor --seed 14 --format tabular"},
  };
  std::string detail;
  bool ok = true;
  for (const auto& [name, args] : commands) {
    const auto a = dir / (std::string(name) + ".1"), b = dir / (std::string(name) + ".2");
    const int ra = sh(cli + " " + args + " --out " + a.string());
    const int rb = sh(cli + " " + args + " --out " + b.string());
    const bool same = ra == 0 && rb == 0 && slurp(a) == slurp(b) && !slurp(a).empty();
    ok &= same;
    detail += std::string(name) + (same ? " identical; " : " DIFFERS; ");
  }
  fs::remove_all(dir);
  return {ok, detail};
}

}  // namespace

int main() {
  criterion(1, "worked example g(11)=5", 1, worked_example);
  criterion(2, "percentile breakdown limits", 1, percentile_limits);
  criterion(3, "product rule at desk scale", 30, product_rule);
  criterion(4, "percentile-composite formula", 1, percentile_formula);
  criterion(5, "reciprocal-median counterexample", 30, reciprocal_counterexample);
  criterion(6, "manipulation property suite", 120, manipulation_suite);
  criterion(7, "gradient correctness", 5, gradient_check);
  criterion(8, "monitoring flag pattern", 10, flag_pattern);
  criterion(9, "estimator unit oracles", 30, unit_oracles);
  criterion(10, "CLI determinism", 60, determinism);
  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
