#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "mixquad/errors.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<int> order;
  std::optional<std::string> out_dir;
};

mixquad::ProjectConfig resolve_config(const GlobalArgs& args, const char* command) {
  if (args.config_path.empty()) {
    throw mixquad::InputError(std::string(command) + ": --config is required");
  }
  mixquad::ProjectConfig cfg = mixquad::load_config(args.config_path);
  // Flags take precedence over config file values.
  if (args.seed) cfg.solver.seed = *args.seed;
  if (args.epsilon) {
    if (!(*args.epsilon > 0.0)) throw mixquad::InputError("--epsilon must be > 0");
    cfg.solver.epsilon = *args.epsilon;
  }
  if (args.order) {
    if (*args.order < 0) throw mixquad::InputError("--order must be >= 0");
    cfg.order = *args.order;
  }
  if (args.out_dir) cfg.output_dir = *args.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixquad: orthonormal bases, optimized quadrature and stochastic "
               "collocation for Gaussian-mixture densities"};
  app.require_subcommand(1);

  GlobalArgs args;
  app.add_option("--config", args.config_path, "Project configuration file (JSON)");
  std::uint64_t seed_value = 0;
  double epsilon_value = 0.0;
  int order_value = 0;
  std::string out_value;
  auto* seed_opt = app.add_option("--seed", seed_value, "Override solver.seed");
  auto* eps_opt = app.add_option("--epsilon", epsilon_value, "Override solver.epsilon");
  auto* order_opt = app.add_option("--order", order_value, "Override expansion order p");
  auto* out_opt = app.add_option("--out", out_value, "Override output directory");

  auto* basis_cmd = app.add_subcommand("basis", "Build the orthonormal basis and report "
                                                "its orthonormality defect");
  auto* quad_cmd = app.add_subcommand("quad", "Compute the quadrature rule and emit the "
                                              "sample batch for the simulator");

  mixquad::cli::FitOptions fit_options;
  auto* fit_cmd = app.add_subcommand("fit", "Project simulator results onto the basis");
  fit_cmd->add_option("--rule", fit_options.rule_path, "Rule file (default <out>/rule.csv)");
  fit_cmd->add_option("--results", fit_options.results_path,
                      "Results file from the two-phase workflow");
  fit_cmd->add_option("--command", fit_options.command,
                      "Simulator command template, e.g. 'sim {x1} {x2}'");

  mixquad::cli::StatsOptions stats_options;
  auto* stats_cmd = app.add_subcommand("stats", "Statistics, density estimate and the "
                                                "Gram deviation certificate");
  stats_cmd->add_option("--surrogate", stats_options.surrogate_path,
                        "Surrogate file (default <out>/surrogate.json)");
  stats_cmd->add_option("--rule", stats_options.rule_path,
                        "Rule file (default <out>/rule.csv)");
  stats_cmd->add_option("--samples", stats_options.samples, "Sample count for the PDF");
  stats_cmd->add_option("--bins", stats_options.bins, "Histogram bin count");

  auto* demo_cmd = app.add_subcommand("demo", "Run the built-in synthetic benchmark "
                                              "end-to-end and print a convergence table");

  // Global flags may appear after the subcommand name.
  for (auto* sub : {basis_cmd, quad_cmd, fit_cmd, stats_cmd, demo_cmd}) {
    sub->fallthrough(true);
  }

  CLI11_PARSE(app, argc, argv);

  if (*seed_opt) args.seed = seed_value;
  if (*eps_opt) args.epsilon = epsilon_value;
  if (*order_opt) args.order = order_value;
  if (*out_opt) args.out_dir = out_value;

  const char* stage = "mixquad";
  try {
    if (basis_cmd->parsed()) {
      stage = "basis";
      return mixquad::cli::cmd_basis(resolve_config(args, stage));
    }
    if (quad_cmd->parsed()) {
      stage = "quad";
      return mixquad::cli::cmd_quad(resolve_config(args, stage));
    }
    if (fit_cmd->parsed()) {
      stage = "fit";
      return mixquad::cli::cmd_fit(resolve_config(args, stage), fit_options);
    }
    if (stats_cmd->parsed()) {
      stage = "stats";
      return mixquad::cli::cmd_stats(resolve_config(args, stage), stats_options);
    }
    if (demo_cmd->parsed()) {
      stage = "demo";
      mixquad::cli::DemoOptions demo_options;
      if (args.seed) demo_options.seed = *args.seed;
      if (args.out_dir) demo_options.output_dir = *args.out_dir;
      return mixquad::cli::cmd_demo(demo_options);
    }
  } catch (const mixquad::Error& e) {
    std::fprintf(stderr, "mixquad %s: %s\n", stage, e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mixquad %s: unexpected error: %s\n", stage, e.what());
    return 1;
  }
  return 0;
}
