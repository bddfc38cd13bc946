#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robcomp/dataset_io.hpp"
#include "robcomp/estimators.hpp"
#include "robcomp/monitor.hpp"

namespace robcomp {

inline constexpr const char* kVersion = "0.1.0";

enum class OutputFormat { Structured, Tabular };

// Resolved options for one CLI invocation. Every report echoes this.
struct RunConfig {
  std::string command;
  std::vector<EstimatorSpec> levels;  // innermost first
  std::uint64_t seed = 0;
  double grad_tol = 1e-5;
  double weiszfeld_tol = 1e-9;
  std::vector<double> ladder{1e3, 1e6, 1e9, 1e12};
  double radius = 0.0;  // 0: max|x| + 1
  double flag_threshold = 50.0;
  OutputFormat format = OutputFormat::Structured;
  std::string input;

  // breakdown
  bool onto = true;  // also measure f where a construction exists

  // manipulate
  std::optional<Point2D> target;

  // monitor: the nine default rows unless n1/k1 are given
  std::size_t routers = 100;
  std::size_t stream_length = 1000;
  std::optional<std::size_t> n1, k1;
  double lo = 100.0, hi = 110.0;
  bool exact = true;
  double frugal_step = 0.05;

  // generate
  std::vector<std::size_t> shape;  // e.g. {50, 100, 24}; last entry is the group size
  bool planar = false;
  std::string distribution = "normal";  // normal | uniform
  double scale = 1.0;
};

// Each returns the full report text (JSON for structured, key/value lines or
// CSV for tabular) ending in a newline.
std::string cmd_estimate(const RunConfig& config, const DatasetFile& data);
std::string cmd_breakdown(const RunConfig& config, const DatasetFile& data);
std::string cmd_manipulate(const RunConfig& config, const DatasetFile& data);
std::string cmd_monitor(const RunConfig& config);
// Synthetic dataset in the text format, seeded.
std::string cmd_generate(const RunConfig& config);

}  // namespace robcomp
