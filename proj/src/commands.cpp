#include "robcomp/commands.hpp"

#include <json.hpp>
#include <random>

#include "robcomp/breakdown.hpp"
#include "robcomp/composition.hpp"
#include "robcomp/errors.hpp"
#include "robcomp/manipulate.hpp"
#include "robcomp/text.hpp"

namespace robcomp {

using nlohmann::json;

namespace {

json point_json(Point2D p) { return json{{"x", p.x}, {"y", p.y}}; }

json value_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) {
          return x;
        } else if constexpr (std::is_same_v<T, Point2D>) {
          return point_json(x);
        } else {
          return json{{"slope", x.slope}, {"intercept", x.intercept}};
        }
      },
      v);
}

json optional_json(const auto& o) { return o ? json(*o) : json(nullptr); }

json config_json(const RunConfig& c) {
  json levels = json::array();
  for (const auto& l : c.levels) levels.push_back(l.name());
  json shape = json::array();
  for (auto s : c.shape) shape.push_back(s);
  return json{
      {"command", c.command},
      {"estimators", levels},
      {"seed", c.seed},
      {"grad_tol", c.grad_tol},
      {"weiszfeld_tol", c.weiszfeld_tol},
      {"ladder", c.ladder},
      {"radius", c.radius == 0.0 ? json("auto") : json(c.radius)},
      {"flag_threshold", c.flag_threshold},
      {"format", c.format == OutputFormat::Structured ? "structured" : "tabular"},
      {"input", c.input},
      {"onto", c.onto},
      {"target", c.target ? point_json(*c.target) : json(nullptr)},
      {"routers", c.routers},
      {"stream_length", c.stream_length},
      {"n1", optional_json(c.n1)},
      {"k1", optional_json(c.k1)},
      {"interval", json::array({c.lo, c.hi})},
      {"exact", c.exact},
      {"frugal_step", c.frugal_step},
      {"shape", shape},
      {"planar", c.planar},
      {"distribution", c.distribution},
      {"scale", c.scale},
  };
}

void flatten(const json& j, const std::string& prefix, std::string& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  } else if (j.is_array() && !j.empty()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else {
    std::string v;
    if (j.is_string()) {
      v = j.get<std::string>();
    } else if (j.is_number_float()) {
      v = format_number(j.get<double>());
    } else {
      v = j.dump();
    }
    out += prefix + '\t' + v + '\n';
  }
}

std::string render(const RunConfig& config, json result) {
  json doc{{"tool", "robcomp"}, {"version", kVersion}, {"config", config_json(config)}, {"result", std::move(result)}};
  if (config.format == OutputFormat::Structured) return doc.dump(2) + '\n';
  std::string out;
  flatten(doc, "", out);
  return out;
}

std::string stack_name(std::span<const EstimatorSpec> levels) {
  std::string s;
  for (const auto& l : levels) s += (s.empty() ? "" : "/") + l.name();
  return s;
}

void require_levels(const RunConfig& c) {
  if (c.levels.empty()) throw ConfigError("no estimator given; use --estimator 1=KIND");
  if (c.levels.size() > 3) throw ConfigError("at most three estimator levels");
  check_chain(c.levels);
}

ContaminationModel model_of(const RunConfig& c) {
  ContaminationModel m;
  m.ladder = c.ladder;
  m.radius = c.radius;
  m.validate();
  return m;
}

json trial_json(const Trial& t) {
  return json{{"m", t.m}, {"strategy", t.strategy.name()}, {"deviations", t.deviations}, {"broken", t.broken}};
}

json checks_json(const std::vector<InequalityCheck>& checks) {
  json out = json::array();
  for (const auto& c : checks) {
    out.push_back(json{{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds}});
  }
  return out;
}

// Breakdown of one atomic estimator on flat data, with f where measurable.
BreakdownReport atomic_report(const EstimatorSpec& spec, const HierarchicalDataset& flat,
                              const ContaminationModel& model, bool onto, json& notes) {
  const EstimatorSpec levels[] = {spec};
  BreakdownReport r = measure_breakdown(levels, flat, model);
  if (!onto) return r;
  try {
    const auto targets = default_onto_targets(spec, flat, model);
    const auto f = measure_f(spec, flat, targets);
    r.f = f.f;
    if (!f.f) notes.push_back(spec.name() + ": some onto target was not reached with every point replaced");
  } catch (const ConfigError& e) {
    notes.push_back(std::string(e.what()));
  }
  return r;
}

json report_json(const BreakdownReport& r) {
  json j{{"estimator", r.estimator},
         {"n", r.n},
         {"g", r.g},
         {"ratio", r.n ? static_cast<double>(r.g) / static_cast<double>(r.n) : 0.0},
         {"f", optional_json(r.f)},
         {"beta_analytic", optional_json(r.beta_analytic)},
         {"radius", r.radius},
         {"witness", r.witness ? trial_json(*r.witness) : json(nullptr)}};
  if (!r.inequality_checks.empty()) j["inequality_checks"] = checks_json(r.inequality_checks);
  return j;
}

HierarchicalDataset flat_of(const Payload& p) { return HierarchicalDataset::flat(p); }

Payload group_payload(const HierarchicalDataset& data, std::size_t g) {
  const auto& layout = data.layout();
  const auto offsets = layout.inner_offsets();
  return std::visit(
      [&](const auto& v) -> Payload {
        using T = typename std::decay_t<decltype(v)>::value_type;
        auto first = v.begin() + static_cast<std::ptrdiff_t>(offsets[g]);
        return std::vector<T>(first, first + static_cast<std::ptrdiff_t>(layout.inner_sizes[g]));
      },
      data.payload());
}

}  // namespace

std::string cmd_estimate(const RunConfig& config, const DatasetFile& file) {
  require_levels(config);
  const auto data = to_hierarchical(file, config.levels.size());
  const auto trace = evaluate_stack_trace(config.levels, data);
  json levels = json::array();
  for (std::size_t i = 0; i < trace.level_outputs.size(); ++i) {
    json outs = json::array();
    for (const auto& v : trace.level_outputs[i]) outs.push_back(value_json(v));
    levels.push_back(json{{"estimator", config.levels[i].name()}, {"outputs", outs}});
  }
  json result{{"estimator", stack_name(config.levels)},
              {"points", data.size()},
              {"groups", data.layout().group_count()},
              {"value", value_json(trace.result)},
              {"intermediate", levels}};
  return render(config, std::move(result));
}

std::string cmd_breakdown(const RunConfig& config, const DatasetFile& file) {
  require_levels(config);
  const auto model = model_of(config);
  const auto data = to_hierarchical(file, config.levels.size());
  json notes = json::array();
  json result;

  if (config.levels.size() == 1) {
    result["breakdown"] = report_json(atomic_report(config.levels[0], data, model, config.onto, notes));
    result["notes"] = notes;
    return render(config, std::move(result));
  }

  BreakdownReport composite = measure_breakdown(config.levels, data, model);
  const auto beta = composite_beta(CompositeSpec::make(config.levels));
  result["composite_beta"] = json{{"beta", optional_json(beta.beta)}, {"rule", beta.rule}};

  if (config.levels.size() == 2) {
    const auto trace = evaluate_stack_trace(config.levels, data);
    const auto outer_data = flat_of(collect_values(trace.level_outputs[0]));
    const BreakdownReport outer = atomic_report(config.levels[1], outer_data, model, config.onto, notes);
    if (data.layout().equal_sizes()) {
      const BreakdownReport inner =
          atomic_report(config.levels[0], flat_of(group_payload(data, 0)), model, config.onto, notes);
      composite.inequality_checks = check_inequalities(inner, outer, composite);
      result["inner"] = report_json(inner);
    } else {
      std::vector<std::size_t> inner_g;
      json per_group = json::array();
      const EstimatorSpec inner_level[] = {config.levels[0]};
      for (std::size_t g = 0; g < data.layout().group_count(); ++g) {
        const auto r = measure_breakdown(inner_level, flat_of(group_payload(data, g)), model);
        inner_g.push_back(r.g);
        per_group.push_back(json{{"size", r.n}, {"g", r.g}});
      }
      composite.inequality_checks = {check_unequal_bound(inner_g, outer.g, composite.g)};
      result["inner_groups"] = per_group;
    }
    result["outer"] = report_json(outer);
  }
  result["breakdown"] = report_json(composite);
  result["notes"] = notes;
  return render(config, std::move(result));
}

std::string cmd_manipulate(const RunConfig& config, const DatasetFile& file) {
  for (const auto& l : config.levels) {
    if (l.kind() != EstimatorKind::L1Median) throw ConfigError("manipulate works on l1median/l1median");
  }
  if (!config.levels.empty() && config.levels.size() != 2) {
    throw ConfigError("manipulate works on a two-level l1median stack");
  }
  if (!config.target) throw ConfigError("manipulate needs --target x,y");
  const auto data = to_hierarchical(file, 2);
  DescentOptions opts;
  opts.grad_tol = config.grad_tol;
  const auto plan = plan_manipulation(data, *config.target, opts, config.weiszfeld_tol);

  json modified = json::array();
  for (const auto& m : plan.modified) {
    modified.push_back(json{{"group", m.group}, {"index", m.index}, {"from", point_json(m.old_point)},
                            {"to", point_json(m.new_point)}});
  }
  json groups = json::array();
  for (const auto& s : plan.groups) {
    groups.push_back(json{{"iterations", s.iterations}, {"grad_norm", s.grad_norm}, {"h", s.h}});
  }
  json original = json::array(), moved = json::array();
  for (const auto& p : plan.original_medians) original.push_back(point_json(p));
  for (const auto& p : plan.moved_medians) moved.push_back(point_json(p));

  json result{{"target", point_json(plan.target)},
              {"n", plan.n},
              {"k", plan.k},
              {"n_tilde", plan.n_tilde},
              {"k_tilde", plan.k_tilde},
              {"modified_count", plan.modified.size()},
              {"achieved", point_json(plan.achieved)},
              {"residual", plan.residual},
              {"residual_x", std::abs(plan.achieved.x - plan.target.x)},
              {"residual_y", std::abs(plan.achieved.y - plan.target.y)},
              {"outer_solve", json{{"iterations", plan.top.iterations}, {"grad_norm", plan.top.grad_norm},
                                   {"h", plan.top.h}}},
              {"group_solves", groups},
              {"original_medians", original},
              {"moved_medians", moved},
              {"modified", modified}};
  return render(config, std::move(result));
}

std::string cmd_monitor(const RunConfig& config) {
  std::vector<AttackScenario> scenarios;
  if (config.n1 || config.k1) {
    AttackScenario s;
    s.n = config.routers;
    s.k = config.stream_length;
    s.n1 = config.n1.value_or(0);
    s.k1 = config.k1.value_or(0);
    s.lo = config.lo;
    s.hi = config.hi;
    s.seed = config.seed;
    scenarios.push_back(s);
  } else {
    scenarios = default_scenarios(config.seed);
    for (auto& s : scenarios) {
      s.n = config.routers;
      s.k = config.stream_length;
      s.n1 = std::min(s.n1, s.n);
      s.k1 = std::min(s.k1, s.k);
    }
  }
  MonitorOptions opts;
  opts.exact = config.exact;
  opts.flag_threshold = config.flag_threshold;
  opts.frugal_step = config.frugal_step;
  const auto combos = default_combos();
  const auto report = run_scenarios(scenarios, combos, opts);

  if (config.format == OutputFormat::Tabular) return to_csv(report);

  json combo_labels = json::array();
  for (const auto& c : combos) combo_labels.push_back(json::array({c.q1, c.q2}));
  json rows = json::array();
  for (const auto& row : report.rows) {
    const auto& s = row.scenario;
    rows.push_back(json{{"proportion", s.proportion()},
                        {"interval", json::array({s.lo, s.hi})},
                        {"n", s.n},
                        {"k", s.k},
                        {"n1", s.n1},
                        {"k1", s.k1},
                        {"seed", s.seed},
                        {"values", row.values},
                        {"flags", row.flags}});
  }
  return render(config, json{{"combos", combo_labels}, {"rows", rows}});
}

std::string cmd_generate(const RunConfig& config) {
  if (config.shape.empty() || config.shape.size() > 3) {
    throw ConfigError("generate needs --shape N, NxK or MxNxK");
  }
  for (auto s : config.shape) {
    if (s == 0) throw ConfigError("shape entries must be positive");
  }
  if (config.distribution != "normal" && config.distribution != "uniform") {
    throw ConfigError("distribution must be normal or uniform");
  }
  if (!(config.scale > 0.0)) throw ConfigError("scale must be positive");

  std::size_t total = 1;
  for (auto s : config.shape) total *= s;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, config.scale);
  std::uniform_real_distribution<double> uniform(-config.scale, config.scale);
  auto draw = [&] { return config.distribution == "normal" ? normal(rng) : uniform(rng); };

  Payload payload;
  if (config.planar) {
    std::vector<Point2D> pts(total);
    for (auto& p : pts) {
      p.x = draw();
      p.y = draw();
    }
    payload = std::move(pts);
  } else {
    std::vector<double> xs(total);
    for (auto& x : xs) x = draw();
    payload = std::move(xs);
  }
  const auto& sh = config.shape;
  const HierarchicalDataset data =
      sh.size() == 1   ? HierarchicalDataset::flat(std::move(payload))
      : sh.size() == 2 ? HierarchicalDataset::two_level(std::move(payload), sh[0], sh[1])
                       : HierarchicalDataset::three_level(std::move(payload), sh[0], sh[1], sh[2]);
  return write_dataset(from_hierarchical(data));
}

}  // namespace robcomp
