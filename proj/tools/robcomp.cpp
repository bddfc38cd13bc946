#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>

#include "robcomp/commands.hpp"
#include "robcomp/errors.hpp"
#include "robcomp/text.hpp"

namespace {

enum ExitCode { kOk = 0, kGeneric = 1, kParse = 2, kValidation = 3, kConvergence = 4, kUsage = 64 };

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto tok = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto v = robcomp::parse_number(tok);
    if (!v) throw robcomp::ConfigError(std::string("bad ") + what + " '" + text + "'");
    out.push_back(*v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// "1=median", "2=percentile:0.9"; levels must be 1..L without gaps.
std::vector<robcomp::EstimatorSpec> parse_levels(const std::vector<std::string>& args) {
  std::map<int, robcomp::EstimatorSpec> by_level;
  for (const auto& a : args) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw robcomp::ConfigError("--estimator expects LEVEL=KIND, got '" + a + "'");
    const auto level = robcomp::parse_number(a.substr(0, eq));
    if (!level || *level < 1 || *level > 3 || *level != static_cast<int>(*level)) {
      throw robcomp::ConfigError("estimator level must be 1, 2 or 3 in '" + a + "'");
    }
    if (!by_level.emplace(static_cast<int>(*level), robcomp::EstimatorSpec::parse(a.substr(eq + 1))).second) {
      throw robcomp::ConfigError("estimator level given twice in '" + a + "'");
    }
  }
  std::vector<robcomp::EstimatorSpec> out;
  for (const auto& [level, spec] : by_level) {
    if (level != static_cast<int>(out.size()) + 1) throw robcomp::ConfigError("estimator levels must start at 1 without gaps");
    out.push_back(spec);
  }
  return out;
}

std::string read_input(const std::string& path) {
  if (path.empty()) throw robcomp::ConfigError("this command needs --input PATH ('-' for stdin)");
  if (path == "-") return std::string(std::istreambuf_iterator<char>(std::cin), {});
  std::ifstream in(path, std::ios::binary);
  if (!in) throw robcomp::ParseError(0, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composite robust estimators: evaluation, breakdown measurement, manipulation and monitoring"};
  app.require_subcommand(1);
  app.set_version_flag("--version", robcomp::kVersion);

  robcomp::RunConfig cfg;
  std::vector<std::string> estimators;
  std::string ladder, target, interval, shape, format = "structured", out_path;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--estimator", estimators, "LEVEL=KIND[:q], innermost level 1; kinds: mean, median, "
                                               "percentile:q, l1median, siegel, recipmedian, medianrecip");
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    sub->add_option("--format", format, "structured | tabular")
        ->check(CLI::IsMember({"structured", "tabular"}))
        ->capture_default_str();
    sub->add_option("--out", out_path, "Write the report here instead of stdout");
  };
  auto with_input = [&](CLI::App* sub) { sub->add_option("--input", cfg.input, "Dataset file, '-' for stdin"); };

  auto* estimate = app.add_subcommand("estimate", "Evaluate an estimator stack on a dataset");
  common(estimate);
  with_input(estimate);

  auto* breakdown = app.add_subcommand("breakdown", "Measure finite-sample breakdown of an estimator stack");
  common(breakdown);
  with_input(breakdown);
  breakdown->add_option("--ladder", ladder, "Contamination magnitudes, e.g. 1e3,1e6,1e9,1e12");
  breakdown->add_option("--radius", cfg.radius, "Far threshold (default: max|x| + 1)");
  breakdown->add_flag("!--no-onto", cfg.onto, "Skip onto-breakdown measurement");

  auto* manipulate = app.add_subcommand("manipulate", "Plan a manipulation of an L1-median of L1-medians");
  common(manipulate);
  with_input(manipulate);
  manipulate->add_option("--target", target, "Target point x,y")->required();
  manipulate->add_option("--grad-tol", cfg.grad_tol, "Gradient-norm stopping tolerance")->capture_default_str();
  manipulate->add_option("--weiszfeld-tol", cfg.weiszfeld_tol, "L1-median tolerance")->capture_default_str();

  auto* monitor = app.add_subcommand("monitor", "Router-monitoring attack simulation");
  common(monitor);
  monitor->add_option("--routers", cfg.routers, "Routers n")->capture_default_str();
  monitor->add_option("--stream-length", cfg.stream_length, "Items per router k")->capture_default_str();
  monitor->add_option("--n1", cfg.n1, "Attacked routers (single scenario instead of the default nine)");
  monitor->add_option("--k1", cfg.k1, "Outliers per attacked stream");
  monitor->add_option("--interval", interval, "Outlier interval lo,hi (default 100,110)");
  monitor->add_option("--flag-threshold", cfg.flag_threshold, "Flag when |value| >= this")->capture_default_str();
  bool frugal = false;
  monitor->add_flag("--frugal", frugal, "Frugal sketches instead of exact percentiles");
  monitor->add_option("--frugal-step", cfg.frugal_step, "Frugal sketch step")->capture_default_str();

  auto* generate = app.add_subcommand("generate", "Write a seeded synthetic dataset");
  generate->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  generate->add_option("--shape", shape, "N, NxK or MxNxK (last entry: group size)")->required();
  generate->add_flag("--planar", cfg.planar, "x,y points instead of scalars");
  generate->add_option("--distribution", cfg.distribution, "normal | uniform")->capture_default_str();
  generate->add_option("--scale", cfg.scale, "Standard deviation or half-width")->capture_default_str();
  generate->add_option("--out", out_path, "Write the dataset here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    cfg.levels = parse_levels(estimators);
    cfg.exact = !frugal;
    cfg.format = format == "tabular" ? robcomp::OutputFormat::Tabular : robcomp::OutputFormat::Structured;
    if (!ladder.empty()) cfg.ladder = parse_list(ladder, "ladder");
    if (!target.empty()) {
      const auto t = parse_list(target, "target");
      if (t.size() != 2) throw robcomp::ConfigError("--target expects x,y");
      cfg.target = robcomp::Point2D{t[0], t[1]};
    }
    if (!interval.empty()) {
      const auto iv = parse_list(interval, "interval");
      if (iv.size() != 2) throw robcomp::ConfigError("--interval expects lo,hi");
      cfg.lo = iv[0];
      cfg.hi = iv[1];
    }
    if (!shape.empty()) {
      std::string s = shape;
      std::replace(s.begin(), s.end(), 'x', ',');
      for (double d : parse_list(s, "shape")) {
        if (d < 1 || d != static_cast<double>(static_cast<std::size_t>(d))) {
          throw robcomp::ConfigError("bad shape '" + shape + "'");
        }
        cfg.shape.push_back(static_cast<std::size_t>(d));
      }
    }

    std::string report;
    if (cfg.command == "monitor") {
      report = robcomp::cmd_monitor(cfg);
    } else if (cfg.command == "generate") {
      report = robcomp::cmd_generate(cfg);
    } else {
      const auto data = robcomp::parse_dataset(read_input(cfg.input));
      if (cfg.command == "estimate") report = robcomp::cmd_estimate(cfg, data);
      if (cfg.command == "breakdown") report = robcomp::cmd_breakdown(cfg, data);
      if (cfg.command == "manipulate") report = robcomp::cmd_manipulate(cfg, data);
    }

    if (out_path.empty()) {
      std::cout << report;
    } else {
      std::ofstream out(out_path, std::ios::binary);
      out << report;
      if (!out) {
        std::cerr << "error: cannot write '" << out_path << "'\n";
        return kGeneric;
      }
    }
    return kOk;
  } catch (const robcomp::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const robcomp::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << '\n';
    return kConvergence;
  } catch (const robcomp::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kValidation;
  } catch (const robcomp::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kGeneric;
  }
}
