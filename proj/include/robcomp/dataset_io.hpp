#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "robcomp/composition.hpp"
#include "robcomp/estimators.hpp"

namespace robcomp {

// One line of a dataset file:
//   <group-id>[@<outer-id>]: v1 v2 ...
// Values are numbers, or x,y pairs for planar data. '#' starts a comment.
struct GroupRecord {
  std::string id;
  std::string outer;  // empty when the line has no outer id
  std::vector<double> scalars;
  std::vector<Point2D> points;

  friend bool operator==(const GroupRecord&, const GroupRecord&) = default;
};

struct DatasetFile {
  std::vector<GroupRecord> groups;

  Space space() const;
  bool has_outer_ids() const;
  friend bool operator==(const DatasetFile&, const DatasetFile&) = default;
};

// Throws ParseError with the 1-based line of the first problem.
DatasetFile parse_dataset(std::string_view text);
DatasetFile read_dataset(const std::string& path);

// parse_dataset(write_dataset(d)) == d.
std::string write_dataset(const DatasetFile& file);

// Depth 1 concatenates every group. Depth 2 takes the groups in file order
// and rejects outer ids. Depth 3 needs outer ids on every line; outer groups
// are ordered by first appearance. Throws ConfigError.
HierarchicalDataset to_hierarchical(const DatasetFile& file, std::size_t depth);

// Group ids g0, g1, ... and, at depth 3, outer ids o0, o1, ...
// A flat dataset becomes one group.
DatasetFile from_hierarchical(const HierarchicalDataset& data);

}  // namespace robcomp
