#include "robcomp/composition.hpp"

#include <cmath>
#include <exception>
#include <numeric>
#include <string>

#include "robcomp/errors.hpp"
#include "robcomp/omp.hpp"

namespace robcomp {

std::size_t payload_size(const Payload& p) {
  return std::visit([](const auto& v) { return v.size(); }, p);
}

Space payload_space(const Payload& p) {
  return std::holds_alternative<std::vector<double>>(p) ? Space::Scalar : Space::Plane;
}

std::size_t GroupLayout::total() const {
  return std::accumulate(inner_sizes.begin(), inner_sizes.end(), std::size_t{0});
}

std::vector<std::size_t> GroupLayout::inner_offsets() const {
  std::vector<std::size_t> off(inner_sizes.size());
  std::size_t acc = 0;
  for (std::size_t g = 0; g < inner_sizes.size(); ++g) {
    off[g] = acc;
    acc += inner_sizes[g];
  }
  return off;
}

bool GroupLayout::equal_sizes() const {
  for (std::size_t s : inner_sizes) {
    if (s != inner_sizes.front()) return false;
  }
  for (std::size_t c : outer_counts) {
    if (c != outer_counts.front()) return false;
  }
  return true;
}

HierarchicalDataset::HierarchicalDataset(Payload points, GroupLayout layout)
    : points_(std::move(points)), layout_(std::move(layout)) {
  if (layout_.total() != payload_size(points_)) {
    throw ConfigError("dataset layout does not cover the point count");
  }
  if (layout_.depth < 1 || layout_.depth > 3) throw ConfigError("dataset depth must be 1, 2 or 3");
  if (layout_.inner_sizes.empty()) throw DomainError("dataset is empty");
  for (std::size_t s : layout_.inner_sizes) {
    if (s == 0) throw ConfigError("dataset has an empty group");
  }
  if (layout_.depth == 1 && layout_.inner_sizes.size() != 1) {
    throw ConfigError("a depth-1 dataset is a single group");
  }
  if (layout_.depth == 3) {
    std::size_t inner = 0;
    for (std::size_t c : layout_.outer_counts) {
      if (c == 0) throw ConfigError("dataset has an empty outer group");
      inner += c;
    }
    if (inner != layout_.inner_sizes.size()) {
      throw ConfigError("outer group counts do not cover the inner groups");
    }
  } else if (!layout_.outer_counts.empty()) {
    throw ConfigError("outer group counts are only meaningful at depth 3");
  }
  std::visit(
      [](const auto& v) {
        for (const auto& p : v) {
          if constexpr (std::is_same_v<std::decay_t<decltype(p)>, double>) {
            if (!std::isfinite(p)) throw DomainError("dataset contains a non-finite value");
          } else {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
              throw DomainError("dataset contains a non-finite coordinate");
            }
          }
        }
      },
      points_);
}

HierarchicalDataset HierarchicalDataset::flat(Payload points) {
  const std::size_t n = payload_size(points);
  if (n == 0) throw DomainError("dataset is empty");
  GroupLayout layout;
  layout.depth = 1;
  layout.inner_sizes = {n};
  return HierarchicalDataset(std::move(points), std::move(layout));
}

HierarchicalDataset HierarchicalDataset::two_level(Payload points, std::size_t n, std::size_t k) {
  if (n == 0 || k == 0) throw ConfigError("two_level: n and k must be positive");
  if (payload_size(points) != n * k) throw ConfigError("two_level: point count is not n*k");
  GroupLayout layout;
  layout.depth = 2;
  layout.inner_sizes.assign(n, k);
  return HierarchicalDataset(std::move(points), std::move(layout));
}

HierarchicalDataset HierarchicalDataset::three_level(Payload points, std::size_t m, std::size_t n,
                                                     std::size_t k) {
  if (m == 0 || n == 0 || k == 0) throw ConfigError("three_level: m, n and k must be positive");
  if (payload_size(points) != m * n * k) throw ConfigError("three_level: point count is not m*n*k");
  GroupLayout layout;
  layout.depth = 3;
  layout.inner_sizes.assign(m * n, k);
  layout.outer_counts.assign(m, n);
  return HierarchicalDataset(std::move(points), std::move(layout));
}

namespace {

template <typename T>
HierarchicalDataset build_groups(const std::vector<std::vector<T>>& groups, bool require_equal) {
  if (groups.empty()) throw DomainError("dataset has no groups");
  GroupLayout layout;
  layout.depth = 2;
  std::vector<T> flat;
  for (const auto& g : groups) {
    layout.inner_sizes.push_back(g.size());
    flat.insert(flat.end(), g.begin(), g.end());
  }
  if (require_equal && !layout.equal_sizes()) {
    throw ConfigError("groups must all have the same size");
  }
  return HierarchicalDataset::from_layout(Payload(std::move(flat)), std::move(layout));
}

}  // namespace

HierarchicalDataset HierarchicalDataset::from_groups(const std::vector<std::vector<double>>& groups) {
  return build_groups(groups, true);
}
HierarchicalDataset HierarchicalDataset::from_groups(const std::vector<std::vector<Point2D>>& groups) {
  return build_groups(groups, true);
}
HierarchicalDataset HierarchicalDataset::unequal(const std::vector<std::vector<double>>& groups) {
  return build_groups(groups, false);
}
HierarchicalDataset HierarchicalDataset::unequal(const std::vector<std::vector<Point2D>>& groups) {
  return build_groups(groups, false);
}

HierarchicalDataset HierarchicalDataset::with_payload(Payload points) const {
  return HierarchicalDataset(std::move(points), layout_);
}

HierarchicalDataset HierarchicalDataset::from_layout(Payload points, GroupLayout layout) {
  return HierarchicalDataset(std::move(points), std::move(layout));
}

std::size_t HierarchicalDataset::outer_groups() const {
  return layout_.depth == 3 ? layout_.outer_counts.size() : 1;
}

std::size_t HierarchicalDataset::groups_per_outer() const {
  if (layout_.depth == 3) return layout_.outer_counts.front();
  return layout_.depth == 2 ? layout_.inner_sizes.size() : 1;
}

std::size_t HierarchicalDataset::group_size() const { return layout_.inner_sizes.front(); }

std::size_t HierarchicalDataset::index_of(std::size_t group, std::size_t j) const {
  const auto off = layout_.inner_offsets();
  if (group >= off.size() || j >= layout_.inner_sizes[group]) {
    throw ConfigError("index_of: group/point index out of range");
  }
  return off[group] + j;
}

void check_chain(std::span<const EstimatorSpec> levels) {
  for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
    if (levels[l].output_space() != levels[l + 1].input_space()) {
      throw ConfigError("level " + std::to_string(l + 1) + " (" + levels[l].name() + ") outputs " +
                        std::string(space_name(levels[l].output_space())) + " but level " +
                        std::to_string(l + 2) + " (" + levels[l + 1].name() + ") expects " +
                        std::string(space_name(levels[l + 1].input_space())));
    }
  }
}

CompositeSpec CompositeSpec::make(std::vector<EstimatorSpec> levels) {
  if (levels.size() < 2 || levels.size() > 3) {
    throw ConfigError("a composite has 2 or 3 levels, got " + std::to_string(levels.size()));
  }
  check_chain(levels);
  return CompositeSpec(std::move(levels));
}

std::string CompositeSpec::name() const {
  std::string s;
  for (const auto& l : levels_) {
    if (!s.empty()) s += '/';
    s += l.name();
  }
  return s;
}

Payload collect_values(std::span<const Value> values) {
  if (values.empty()) throw DomainError("collect_values: nothing to collect");
  if (std::holds_alternative<double>(values.front())) {
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& v : values) out.push_back(std::get<double>(v));
    return out;
  }
  if (std::holds_alternative<Point2D>(values.front())) {
    std::vector<Point2D> out;
    out.reserve(values.size());
    for (const auto& v : values) out.push_back(std::get<Point2D>(v));
    return out;
  }
  throw ConfigError("line coefficients cannot feed another estimator level");
}

namespace {

[[noreturn]] void rethrow_with_context(std::exception_ptr ep, const std::string& where) {
  try {
    std::rethrow_exception(ep);
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(where + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(where + ": " + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(where + ": " + e.what(), e.best_value());
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

Value evaluate_slice(const EstimatorSpec& spec, const Payload& p, std::size_t off, std::size_t len) {
  return std::visit(
      [&](const auto& v) -> Value {
        using T = typename std::decay_t<decltype(v)>::value_type;
        return evaluate(spec, std::span<const T>(v).subspan(off, len));
      },
      p);
}

std::string group_label(const GroupLayout& layout, std::size_t g) {
  if (layout.depth == 3) {
    const std::size_t n = layout.outer_counts.front();
    return "group (" + std::to_string(g % n) + "," + std::to_string(g / n) + ")";
  }
  return "group " + std::to_string(g);
}

// One level over contiguous slices of `p`.
std::vector<Value> evaluate_level(const EstimatorSpec& spec, const Payload& p,
                                  const std::vector<std::size_t>& offsets,
                                  const std::vector<std::size_t>& sizes, bool parallel,
                                  const auto& label) {
  const std::size_t count = sizes.size();
  std::vector<Value> out(count);
  std::vector<std::exception_ptr> errors(count);
  const long long total = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic) if (parallel && count > 1)
  for (long long g = 0; g < total; ++g) {
    try {
      out[g] = evaluate_slice(spec, p, offsets[g], sizes[g]);
    } catch (...) {
      errors[g] = std::current_exception();
    }
  }
  for (std::size_t g = 0; g < count; ++g) {
    if (errors[g]) rethrow_with_context(errors[g], label(g));
  }
  return out;
}

CompositeTrace run_stack(std::span<const EstimatorSpec> levels, const HierarchicalDataset& data,
                         bool parallel) {
  if (levels.empty()) throw ConfigError("empty estimator stack");
  check_chain(levels);
  if (levels.size() != data.depth()) {
    throw ConfigError("estimator stack has " + std::to_string(levels.size()) +
                      " levels but the dataset depth is " + std::to_string(data.depth()));
  }
  if (levels.front().input_space() != data.space()) {
    throw ConfigError(levels.front().name() + " expects " +
                      std::string(space_name(levels.front().input_space())) + " data");
  }

  const GroupLayout& layout = data.layout();
  CompositeTrace trace;
  if (levels.size() == 1) {
    trace.result = evaluate_slice(levels[0], data.payload(), 0, data.size());
    return trace;
  }

  trace.level_outputs.push_back(evaluate_level(
      levels[0], data.payload(), layout.inner_offsets(), layout.inner_sizes, parallel,
      [&layout](std::size_t g) { return group_label(layout, g); }));

  if (levels.size() == 3) {
    const Payload mid = collect_values(trace.level_outputs[0]);
    std::vector<std::size_t> offsets(layout.outer_counts.size());
    std::size_t acc = 0;
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      offsets[j] = acc;
      acc += layout.outer_counts[j];
    }
    trace.level_outputs.push_back(
        evaluate_level(levels[1], mid, offsets, layout.outer_counts, parallel,
                       [](std::size_t j) { return "outer group " + std::to_string(j); }));
  }

  const Payload top = collect_values(trace.level_outputs.back());
  try {
    trace.result = evaluate_slice(levels.back(), top, 0, payload_size(top));
  } catch (...) {
    rethrow_with_context(std::current_exception(), "top level");
  }
  return trace;
}

}  // namespace

Value evaluate_stack(std::span<const EstimatorSpec> levels, const HierarchicalDataset& data) {
  return run_stack(levels, data, true).result;
}

CompositeTrace evaluate_stack_trace(std::span<const EstimatorSpec> levels,
                                    const HierarchicalDataset& data) {
  return run_stack(levels, data, true);
}

Value evaluate_composite(const CompositeSpec& spec, const HierarchicalDataset& data) {
  if (!data.layout().equal_sizes()) {
    throw ConfigError("evaluate_composite requires equal group sizes; use evaluate_unequal");
  }
  return evaluate_stack(spec.levels(), data);
}

CompositeTrace evaluate_composite_trace(const CompositeSpec& spec, const HierarchicalDataset& data) {
  if (!data.layout().equal_sizes()) {
    throw ConfigError("evaluate_composite requires equal group sizes; use evaluate_unequal");
  }
  return run_stack(spec.levels(), data, true);
}

Value evaluate_unequal(const CompositeSpec& spec, const std::vector<std::vector<double>>& groups) {
  if (spec.depth() != 2) throw ConfigError("evaluate_unequal takes a two-level composite");
  return evaluate_stack(spec.levels(), HierarchicalDataset::unequal(groups));
}

Value evaluate_unequal(const CompositeSpec& spec, const std::vector<std::vector<Point2D>>& groups) {
  if (spec.depth() != 2) throw ConfigError("evaluate_unequal takes a two-level composite");
  return evaluate_stack(spec.levels(), HierarchicalDataset::unequal(groups));
}

namespace serial {

Value evaluate_stack(std::span<const EstimatorSpec> levels, const HierarchicalDataset& data) {
  return run_stack(levels, data, false).result;
}

Value evaluate_composite(const CompositeSpec& spec, const HierarchicalDataset& data) {
  if (!data.layout().equal_sizes()) {
    throw ConfigError("evaluate_composite requires equal group sizes; use evaluate_unequal");
  }
  return serial::evaluate_stack(spec.levels(), data);
}

}  // namespace serial

}  // namespace robcomp
