#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "robcomp/estimators.hpp"

namespace robcomp {

// Flat point storage for a dataset: scalars or planar points.
using Payload = std::variant<std::vector<double>, std::vector<Point2D>>;

std::size_t payload_size(const Payload& p);
Space payload_space(const Payload& p);

// Group structure over flat storage. Innermost groups are contiguous and
// stored in order; at depth 3, outer group j owns the next outer_counts[j]
// inner groups.
struct GroupLayout {
  std::size_t depth = 1;
  std::vector<std::size_t> inner_sizes;   // depth >= 2
  std::vector<std::size_t> outer_counts;  // depth == 3

  std::size_t total() const;
  std::size_t group_count() const { return inner_sizes.size(); }
  std::vector<std::size_t> inner_offsets() const;
  bool equal_sizes() const;
};

// Points organised into 1, 2 or 3 levels of groups. The factories enforce the
// equal-group-size contract; `unequal` builds a depth-2 dataset without it.
class HierarchicalDataset {
 public:
  static HierarchicalDataset flat(Payload points);
  // Group i holds points [i*k, (i+1)*k).
  static HierarchicalDataset two_level(Payload points, std::size_t n, std::size_t k);
  // Outer group j, inner group i holds points [(j*n + i)*k, (j*n + i + 1)*k).
  static HierarchicalDataset three_level(Payload points, std::size_t m, std::size_t n, std::size_t k);
  static HierarchicalDataset from_groups(const std::vector<std::vector<double>>& groups);
  static HierarchicalDataset from_groups(const std::vector<std::vector<Point2D>>& groups);
  static HierarchicalDataset unequal(const std::vector<std::vector<double>>& groups);
  static HierarchicalDataset unequal(const std::vector<std::vector<Point2D>>& groups);
  // Validates the layout against the points.
  static HierarchicalDataset from_layout(Payload points, GroupLayout layout);
  // Same layout, new points (used by the contamination engine).
  HierarchicalDataset with_payload(Payload points) const;

  std::size_t depth() const noexcept { return layout_.depth; }
  std::size_t size() const { return layout_.total(); }
  // m (outer groups), n (inner groups per outer group), k (points per group).
  std::size_t outer_groups() const;
  std::size_t groups_per_outer() const;
  std::size_t group_size() const;

  const Payload& payload() const noexcept { return points_; }
  const GroupLayout& layout() const noexcept { return layout_; }
  Space space() const { return payload_space(points_); }

  // Flat index of point j in inner group g (storage order).
  std::size_t index_of(std::size_t group, std::size_t j) const;

 private:
  HierarchicalDataset(Payload points, GroupLayout layout);
  Payload points_;
  GroupLayout layout_;
};

// Stack of 2 or 3 estimators, innermost first. Construction rejects chains
// whose output and input spaces do not line up.
class CompositeSpec {
 public:
  static CompositeSpec make(std::vector<EstimatorSpec> levels);

  std::size_t depth() const noexcept { return levels_.size(); }
  const EstimatorSpec& level(std::size_t i) const { return levels_.at(i); }
  std::span<const EstimatorSpec> levels() const noexcept { return levels_; }
  Space input_space() const { return levels_.front().input_space(); }
  Space output_space() const { return levels_.back().output_space(); }
  std::string name() const;  // "median/median"

 private:
  explicit CompositeSpec(std::vector<EstimatorSpec> levels) : levels_(std::move(levels)) {}
  std::vector<EstimatorSpec> levels_;
};

// Throws ConfigError unless each level's output space feeds the next one's input.
void check_chain(std::span<const EstimatorSpec> levels);

struct CompositeTrace {
  // level_outputs[0]: one value per innermost group; [1]: per outer group (depth 3).
  std::vector<std::vector<Value>> level_outputs;
  Value result;
};

// Applies the stack level by level. The data depth must equal the stack size
// (a depth-1 dataset with a single estimator is the atomic case). Innermost
// groups are evaluated in parallel; results equal serial::evaluate_stack.
Value evaluate_stack(std::span<const EstimatorSpec> levels, const HierarchicalDataset& data);
CompositeTrace evaluate_stack_trace(std::span<const EstimatorSpec> levels,
                                    const HierarchicalDataset& data);

// Requires equal group sizes.
Value evaluate_composite(const CompositeSpec& spec, const HierarchicalDataset& data);
CompositeTrace evaluate_composite_trace(const CompositeSpec& spec, const HierarchicalDataset& data);

// Depth-2 evaluation without the equal-size requirement.
Value evaluate_unequal(const CompositeSpec& spec, const std::vector<std::vector<double>>& groups);
Value evaluate_unequal(const CompositeSpec& spec, const std::vector<std::vector<Point2D>>& groups);

// Collects per-group outputs into the next level's input sample.
Payload collect_values(std::span<const Value> values);

namespace serial {

// Reference implementation: plain loops, no OpenMP.
Value evaluate_stack(std::span<const EstimatorSpec> levels, const HierarchicalDataset& data);
Value evaluate_composite(const CompositeSpec& spec, const HierarchicalDataset& data);

}  // namespace serial

}  // namespace robcomp
