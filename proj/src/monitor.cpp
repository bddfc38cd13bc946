#include "robcomp/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "robcomp/errors.hpp"
#include "robcomp/estimators.hpp"
#include "robcomp/omp.hpp"
#include "robcomp/text.hpp"

namespace robcomp {

double AttackScenario::proportion() const {
  return static_cast<double>(n1) * static_cast<double>(k1) /
         (static_cast<double>(n) * static_cast<double>(k));
}

std::string AttackScenario::interval_label() const {
  return "[" + format_number(lo) + "," + format_number(hi) + "]";
}

void AttackScenario::validate() const {
  if (n == 0 || k == 0) throw ConfigError("monitor needs at least one router and one item per stream");
  if (n1 > n) throw ConfigError("attacked routers n1 exceeds router count n");
  if (k1 > k) throw ConfigError("outliers per stream k1 exceeds stream length k");
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("outlier interval must be finite with lo <= hi");
  }
}

std::string QuantileCombo::label() const { return format_number(q1) + "/" + format_number(q2); }

std::vector<QuantileCombo> default_combos() {
  return {{0.1, 0.1}, {0.9, 0.9}, {0.1, 0.9}, {0.9, 0.1}, {0.5, 0.5}};
}

std::vector<AttackScenario> default_scenarios(std::uint64_t seed) {
  std::vector<AttackScenario> out;
  AttackScenario clean;
  clean.seed = seed;
  out.push_back(clean);
  const std::pair<std::size_t, std::size_t> sizes[] = {{11, 110}, {11, 910}, {51, 510}, {51, 910}};
  for (auto [n1, k1] : sizes) {
    for (double s : {1.0, -1.0}) {
      AttackScenario a;
      a.n1 = n1;
      a.k1 = k1;
      a.lo = s > 0 ? 100.0 : -110.0;
      a.hi = s > 0 ? 110.0 : -100.0;
      a.seed = seed + out.size();
      out.push_back(a);
    }
  }
  return out;
}

namespace {

enum : std::uint32_t { kSelectTag = 0, kStreamTag = 1, kSketchTag = 2 };

std::mt19937_64 substream(std::uint64_t seed, std::uint32_t tag, std::uint64_t index,
                          std::uint64_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag,
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(sub)};
  return std::mt19937_64(seq);
}

std::vector<char> attacked_mask(const AttackScenario& s) {
  std::vector<std::size_t> all(s.n), chosen;
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto rng = substream(s.seed, kSelectTag, 0);
  std::sample(all.begin(), all.end(), std::back_inserter(chosen), s.n1, rng);
  std::vector<char> mask(s.n, 0);
  for (std::size_t i : chosen) mask[i] = 1;
  return mask;
}

std::vector<double> router_stream(const AttackScenario& s, std::size_t router, bool attacked) {
  auto rng = substream(s.seed, kStreamTag, router);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(s.k);
  for (auto& x : v) x = normal(rng);
  if (attacked) {
    std::vector<std::size_t> pos(s.k), chosen;
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    std::sample(pos.begin(), pos.end(), std::back_inserter(chosen), s.k1, rng);
    std::uniform_real_distribution<double> outlier(s.lo, s.hi);
    for (std::size_t p : chosen) v[p] = outlier(rng);
  }
  return v;
}

std::vector<std::vector<double>> streams_impl(const AttackScenario& s, bool parallel) {
  s.validate();
  const auto mask = attacked_mask(s);
  std::vector<std::vector<double>> out(s.n);
  const long long n = static_cast<long long>(s.n);
#pragma omp parallel for schedule(static) if (parallel)
  for (long long i = 0; i < n; ++i) out[i] = router_stream(s, i, mask[i] != 0);
  return out;
}

MonitorRow grid_impl(const AttackScenario& s, std::span<const QuantileCombo> combos,
                     const MonitorOptions& opt, bool parallel) {
  if (combos.empty()) throw ConfigError("monitor needs at least one quantile combo");
  if (!(opt.flag_threshold > 0.0)) throw ConfigError("flag threshold must be positive");
  if (!opt.exact && !(opt.frugal_step > 0.0)) throw ConfigError("frugal step must be positive");
  for (const auto& c : combos) {
    EstimatorSpec::percentile(c.q1);
    EstimatorSpec::percentile(c.q2);
  }

  const auto streams = streams_impl(s, parallel);
  const std::size_t nc = combos.size();
  std::vector<std::vector<double>> router_values(nc, std::vector<double>(s.n));
  const long long n = static_cast<long long>(s.n);
#pragma omp parallel for schedule(static) if (parallel)
  for (long long i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < nc; ++c) {
      if (opt.exact) {
        router_values[c][i] = percentile(combos[c].q1, streams[i]);
      } else {
        const std::uint64_t sketch_seed = substream(s.seed, kSketchTag, i, c)();
        FrugalSketch sketch(combos[c].q1, opt.frugal_step, sketch_seed);
        for (double x : streams[i]) frugal_update(sketch, x);
        router_values[c][i] = sketch.estimate;
      }
    }
  }

  MonitorRow row;
  row.scenario = s;
  for (std::size_t c = 0; c < nc; ++c) {
    const double v = percentile(combos[c].q2, router_values[c]);
    row.values.push_back(v);
    row.flags.push_back(std::abs(v) >= opt.flag_threshold);
  }
  return row;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<std::vector<double>> generate_streams(const AttackScenario& scenario) {
  return streams_impl(scenario, true);
}

FrugalSketch::FrugalSketch(double q_, double step_, std::uint64_t seed, double start)
    : q(q_), estimate(start), step(step_), rng(seed) {
  if (!(step > 0.0)) throw ConfigError("frugal step must be positive");
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("frugal quantile must lie strictly inside (0,1)");
}

void frugal_update(FrugalSketch& sketch, double item) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (item > sketch.estimate) {
    if (u(sketch.rng) < sketch.q) sketch.estimate += sketch.step;
  } else if (item < sketch.estimate) {
    if (u(sketch.rng) < 1.0 - sketch.q) sketch.estimate -= sketch.step;
  }
}

MonitorRow run_grid(const AttackScenario& scenario, std::span<const QuantileCombo> combos,
                    const MonitorOptions& options) {
  return grid_impl(scenario, combos, options, true);
}

MonitorReport run_scenarios(std::span<const AttackScenario> scenarios,
                            std::span<const QuantileCombo> combos, const MonitorOptions& options) {
  MonitorReport report;
  report.combos.assign(combos.begin(), combos.end());
  report.options = options;
  for (const auto& s : scenarios) report.rows.push_back(run_grid(s, combos, options));
  return report;
}

std::string to_csv(const MonitorReport& report) {
  std::string out = "proportion,interval,n1,k1";
  for (const auto& c : report.combos) out += ",value " + c.label();
  for (const auto& c : report.combos) out += ",flag " + c.label();
  out += '\n';
  for (const auto& row : report.rows) {
    const auto& s = row.scenario;
    out += format_number(s.proportion()) + ',' + csv_field(s.interval_label()) + ',' +
           std::to_string(s.n1) + ',' + std::to_string(s.k1);
    for (double v : row.values) out += ',' + format_number(v);
    for (bool f : row.flags) out += f ? ",true" : ",false";
    out += '\n';
  }
  return out;
}

namespace serial {

std::vector<std::vector<double>> generate_streams(const AttackScenario& scenario) {
  return streams_impl(scenario, false);
}

MonitorRow run_grid(const AttackScenario& scenario, std::span<const QuantileCombo> combos,
                    const MonitorOptions& options) {
  return grid_impl(scenario, combos, options, false);
}

}  // namespace serial

}  // namespace robcomp
