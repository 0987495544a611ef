#ifndef MIXQUAD_CONFIG_HPP
#define MIXQUAD_CONFIG_HPP

#include <optional>
#include <string>

#include "mixquad/density.hpp"
#include "mixquad/quadrature.hpp"
#include "mixquad/simbridge.hpp"

namespace mixquad {

struct SimulatorConfig {
  std::string command;  // empty: two-phase file workflow
  RunOptions::CoordMode coord_mode = RunOptions::CoordMode::kArgs;
  int parallelism = 1;
  int retries = 0;
  std::string results_path;  // input for two-phase fits
};

// Declarative run description; one file drives every subcommand. Unknown
// keys are rejected so typos fail loudly before any computation starts.
struct ProjectConfig {
  std::optional<GaussianMixture> density;
  int order = 2;
  SolverConfig solver;
  SimulatorConfig simulator;
  std::string output_dir;  // empty: fall back to MIXQUAD_OUT, then ./mixquad_out

  const GaussianMixture& require_density() const;
};

ProjectConfig load_config(const std::string& path);

// Density file on its own (the `density_file` indirection).
GaussianMixture load_density(const std::string& path);

}  // namespace mixquad

#endif  // MIXQUAD_CONFIG_HPP
