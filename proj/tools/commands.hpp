#ifndef MIXQUAD_TOOLS_COMMANDS_HPP
#define MIXQUAD_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <string>

#include "mixquad/config.hpp"

namespace mixquad::cli {

// Output directory resolution: config value, then $MIXQUAD_OUT, then
// ./mixquad_out. The directory is created if missing.
std::string resolve_output_dir(const ProjectConfig& cfg);

int cmd_basis(const ProjectConfig& cfg);
int cmd_quad(const ProjectConfig& cfg);

struct FitOptions {
  std::string rule_path;     // default: <out>/rule.csv
  std::string results_path;  // overrides config.simulator.results
  std::string command;       // overrides config.simulator.command
};
int cmd_fit(const ProjectConfig& cfg, const FitOptions& options);

struct StatsOptions {
  std::string surrogate_path;  // default: <out>/surrogate.json
  std::string rule_path;       // default: <out>/rule.csv
  std::int64_t samples = 200000;
  int bins = 60;
};
int cmd_stats(const ProjectConfig& cfg, const StatsOptions& options);

struct DemoOptions {
  std::uint64_t seed = 1;
  std::string output_dir;  // empty: $MIXQUAD_OUT, then ./mixquad_out
};
int cmd_demo(const DemoOptions& options);

// The synthetic benchmark fixture driven by `demo` and the test suites.
GaussianMixture reference_mixture();
double synthetic_response(double x1, double x2);

}  // namespace mixquad::cli

#endif  // MIXQUAD_TOOLS_COMMANDS_HPP
