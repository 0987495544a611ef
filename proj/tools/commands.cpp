#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "mixquad/collocation.hpp"
#include "mixquad/errors.hpp"
#include "mixquad/io.hpp"
#include "mixquad/kernels.hpp"
#include "mixquad/simbridge.hpp"

namespace mixquad::cli {

namespace {

using Json = nlohmann::ordered_json;

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_json(const Json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(1) << "\n";
  if (!out) throw IoError("write to '" + path + "' failed");
}

// Testing basis for quadrature: order 2p, which needs moments to 4p.
BasisSet testing_basis(const GaussianMixture& density, int order) {
  const MomentTable moments = moment_table(density, 4 * order);
  return gram_schmidt(build_index_set(density.dimension(), 2 * order), moments);
}

}  // namespace

std::string resolve_output_dir(const ProjectConfig& cfg) {
  std::string dir = cfg.output_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("MIXQUAD_OUT")) dir = env;
  }
  if (dir.empty()) dir = "mixquad_out";
  std::filesystem::create_directories(dir);
  return dir;
}

int cmd_basis(const ProjectConfig& cfg) {
  const GaussianMixture& density = cfg.require_density();
  const int p = cfg.order;
  const std::string out_dir = resolve_output_dir(cfg);

  const MomentTable moments = moment_table(density, 2 * p);
  const BasisSet basis = gram_schmidt(build_index_set(density.dimension(), p), moments);

  const std::string basis_path = join_path(out_dir, "basis.json");
  save_basis(basis, density_hash(density), basis_path);

  Json report;
  report["schema"] = "mixquad-basis-report-v1";
  report["dimension"] = basis.dimension();
  report["order"] = basis.order();
  report["n_basis"] = basis.size();
  report["max_gram_deviation"] = basis.gram_deviation();
  report["condition_estimate"] = basis.condition_estimate();
  write_json(report, join_path(out_dir, "basis_report.json"));

  std::printf("basis: %d functions (d=%d, p=%d), orthonormality defect %.3e\n",
              basis.size(), basis.dimension(), basis.order(), basis.gram_deviation());
  std::printf("basis: wrote %s\n", basis_path.c_str());
  return 0;
}

int cmd_quad(const ProjectConfig& cfg) {
  const GaussianMixture& density = cfg.require_density();
  const int p = cfg.order;
  if (p < 1) throw InputError("quad: order must be >= 1");
  const std::string out_dir = resolve_output_dir(cfg);

  const BasisSet basis = testing_basis(density, p);
  QuadratureRule rule;
  try {
    rule = build_rule(basis, density, p, cfg.solver);
  } catch (const RuleConstructionError& e) {
    // Persist the best attempt so the failure can be inspected.
    const std::string failed_path = join_path(out_dir, "rule_failed.csv");
    save_rule(e.best_rule, cfg.solver.seed, failed_path);
    std::fprintf(stderr, "quad: %s\nquad: best attempt written to %s\n", e.what(),
                 failed_path.c_str());
    return 1;
  }

  save_rule(rule, cfg.solver.seed, join_path(out_dir, "rule.csv"));
  emit_samples(rule, join_path(out_dir, "samples.csv"));

  const auto n_low = basis_count(density.dimension(), p);
  const auto n_high = basis_count(density.dimension(), 2 * p);
  Json report;
  report["schema"] = "mixquad-quad-report-v1";
  report["order"] = p;
  report["M"] = rule.size();
  report["N_p"] = n_low;
  report["N_2p"] = n_high;
  report["residual_l1"] = rule.residual_l1;
  report["epsilon"] = cfg.solver.epsilon;
  report["seed"] = cfg.solver.seed;
  write_json(report, join_path(out_dir, "quad_report.json"));

  std::printf("quad: M=%d nodes (bounds [%lld, %lld]), l1 residual %.3e (epsilon %.1e)\n",
              rule.size(), static_cast<long long>(n_low), static_cast<long long>(n_high),
              rule.residual_l1, cfg.solver.epsilon);
  std::printf("quad: wrote %s and %s\n", join_path(out_dir, "rule.csv").c_str(),
              join_path(out_dir, "samples.csv").c_str());
  return 0;
}

int cmd_fit(const ProjectConfig& cfg, const FitOptions& options) {
  const GaussianMixture& density = cfg.require_density();
  const int p = cfg.order;
  if (p < 1) throw InputError("fit: order must be >= 1");
  const std::string out_dir = resolve_output_dir(cfg);

  const std::string rule_path =
      options.rule_path.empty() ? join_path(out_dir, "rule.csv") : options.rule_path;
  const RuleFile rule_file = load_rule(rule_path);
  if (rule_file.rule.order != p) {
    throw InputError("fit: rule certifies order " + std::to_string(rule_file.rule.order) +
                     " but config requests order " + std::to_string(p));
  }

  const std::string command =
      !options.command.empty() ? options.command : cfg.simulator.command;
  const std::string results_path =
      !options.results_path.empty() ? options.results_path : cfg.simulator.results_path;

  ResultBatch batch;
  if (!command.empty()) {
    RunOptions run_options;
    run_options.mode = cfg.simulator.coord_mode;
    run_options.parallelism = cfg.simulator.parallelism;
    run_options.retries = cfg.simulator.retries;
    batch = run_command(rule_file.rule, command, run_options);
  } else if (!results_path.empty()) {
    batch = ingest_results(rule_file.rule, results_path);
  } else {
    throw InputError("fit: no results source; give simulator.command or a results file");
  }

  if (batch.any_failed()) {
    std::string ids;
    for (auto id : batch.failed_ids()) {
      if (!ids.empty()) ids += ", ";
      ids += std::to_string(id);
    }
    throw Error("fit: simulator failed for node ids {" + ids +
                "}; every node needs a value, rerun or repair before fitting");
  }

  const BasisSet basis = testing_basis(density, p);
  std::vector<SurrogateModel> models;
  models.reserve(batch.column_names.size());
  for (std::size_t c = 0; c < batch.column_names.size(); ++c) {
    models.push_back(fit(basis, rule_file.rule, batch.column(static_cast<int>(c))));
  }
  save_surrogates(batch.column_names, models, density_hash(density),
                  join_path(out_dir, "surrogate.json"));

  Json report;
  report["schema"] = "mixquad-fit-report-v1";
  report["order"] = p;
  report["rule_hash"] = hex_hash(models.front().rule_hash);
  Json columns = Json::array();
  for (std::size_t c = 0; c < models.size(); ++c) {
    const MeanVariance mv = mean_variance(models[c]);
    Json col;
    col["name"] = batch.column_names[c];
    col["mean"] = mv.mean;
    col["variance"] = mv.variance;
    col["std"] = std::sqrt(mv.variance);
    columns.push_back(std::move(col));
    std::printf("fit: %s mean=%.10g std=%.6g (M=%d nodes)\n", batch.column_names[c].c_str(),
                mv.mean, std::sqrt(mv.variance), rule_file.rule.size());
  }
  report["columns"] = std::move(columns);
  write_json(report, join_path(out_dir, "fit_report.json"));
  std::printf("fit: wrote %s\n", join_path(out_dir, "surrogate.json").c_str());
  return 0;
}

int cmd_stats(const ProjectConfig& cfg, const StatsOptions& options) {
  const GaussianMixture& density = cfg.require_density();
  const std::string out_dir = resolve_output_dir(cfg);

  const std::string surrogate_path = options.surrogate_path.empty()
                                         ? join_path(out_dir, "surrogate.json")
                                         : options.surrogate_path;
  const std::string rule_path =
      options.rule_path.empty() ? join_path(out_dir, "rule.csv") : options.rule_path;

  const SurrogateFile surrogates = load_surrogates(surrogate_path, density);
  const RuleFile rule_file = load_rule(rule_path);
  if (rule_hash(rule_file.rule) != surrogates.rule_hash) {
    throw StaleRuleError("stats: surrogate was fitted with a different rule",
                         surrogates.rule_hash, rule_hash(rule_file.rule));
  }

  const BasisSet& basis = surrogates.models.front().basis;
  const ErrorCertificate cert =
      certificate(basis, rule_file.rule, basis.moments());

  Json report;
  report["schema"] = "mixquad-stats-report-v1";
  Json cert_json;
  cert_json["gram_deviation"] = cert.gram_deviation;
  cert_json["t_constant"] = cert.t_constant;
  cert_json["epsilon"] = cert.epsilon;
  cert_json["bound"] = cert.bound;
  report["certificate"] = std::move(cert_json);

  Json columns = Json::array();
  for (std::size_t c = 0; c < surrogates.models.size(); ++c) {
    const SurrogateModel& model = surrogates.models[c];
    const MeanVariance mv = mean_variance(model);
    const PdfEstimate pdf =
        pdf_estimate(model, density, options.samples, cfg.solver.seed, options.bins);
    const std::string pdf_path = join_path(out_dir, "pdf_" + surrogates.names[c] + ".csv");
    write_pdf_csv(pdf, pdf_path);

    Json col;
    col["name"] = surrogates.names[c];
    col["mean"] = mv.mean;
    col["variance"] = mv.variance;
    col["std"] = std::sqrt(mv.variance);
    col["pdf_file"] = pdf_path;
    col["degenerate_pdf"] = pdf.degenerate;
    columns.push_back(std::move(col));
    std::printf("stats: %s mean=%.10g std=%.6g pdf=%s%s\n", surrogates.names[c].c_str(),
                mv.mean, std::sqrt(mv.variance), pdf_path.c_str(),
                pdf.degenerate ? " (degenerate: single atom)" : "");
  }
  report["columns"] = std::move(columns);
  write_json(report, join_path(out_dir, "stats.json"));

  std::printf("stats: Gram deviation %.3e within certificate bound %.3e (T=%.4g)\n",
              cert.gram_deviation, cert.bound, cert.t_constant);
  std::printf("stats: wrote %s\n", join_path(out_dir, "stats.json").c_str());
  return 0;
}

GaussianMixture reference_mixture() {
  MixtureComponent a;
  a.weight = 0.5;
  a.mean = Eigen::Vector2d(0.1, 0.1);
  a.covariance.resize(2, 2);
  a.covariance << 0.01, 0.004, 0.004, 0.01;
  MixtureComponent b;
  b.weight = 0.5;
  b.mean = Eigen::Vector2d(-0.1, -0.1);
  b.covariance.resize(2, 2);
  b.covariance << 0.01, -0.003, -0.003, 0.01;
  return GaussianMixture(2, {a, b});
}

double synthetic_response(double x1, double x2) {
  return std::exp(x1) + 0.1 * std::cos(x1) * std::sin(x2);
}

namespace {

// Pinned Monte-Carlo reference stream for the demo's convergence table.
constexpr std::uint64_t kDemoOracleSeed = 9005;
constexpr std::int64_t kDemoOracleSamples = 1000000;

struct McReference {
  double mean = 0.0;
  double standard_error = 0.0;
};

McReference response_mc_reference(const GaussianMixture& density, std::int64_t n,
                                  std::uint64_t seed) {
  Rng rng(seed);
  constexpr std::int64_t kChunk = 1 << 16;
  Eigen::MatrixXd block(kChunk, density.dimension());
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t remaining = n;
  while (remaining > 0) {
    const std::int64_t m = std::min(remaining, kChunk);
    auto rows = block.topRows(m);
    sample_into(density, rng, rows);
    for (std::int64_t i = 0; i < m; ++i) {
      const double y = synthetic_response(block(i, 0), block(i, 1));
      sum += y;
      sum_sq += y * y;
    }
    remaining -= m;
  }
  McReference ref;
  ref.mean = sum / static_cast<double>(n);
  const double var = (sum_sq - static_cast<double>(n) * ref.mean * ref.mean) /
                     static_cast<double>(n - 1);
  ref.standard_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  return ref;
}

}  // namespace

int cmd_demo(const DemoOptions& options) {
  ProjectConfig dir_cfg;
  dir_cfg.output_dir = options.output_dir;
  const std::string out_dir = resolve_output_dir(dir_cfg);

  const GaussianMixture density = reference_mixture();
  const McReference ref =
      response_mc_reference(density, kDemoOracleSamples, kDemoOracleSeed);

  std::printf("demo: 2-parameter Gaussian-mixture benchmark, kernels=%s\n",
              kernels::active_name().c_str());
  std::printf("demo: Monte-Carlo reference mean %.10g (n=%lld, se %.2e)\n", ref.mean,
              static_cast<long long>(kDemoOracleSamples), ref.standard_error);

  const double epsilons[] = {1e-4, 1e-6, 1e-8};
  const int max_order = 4;

  // One testing basis per order, reused across tolerances.
  std::vector<BasisSet> bases;
  bases.reserve(max_order);
  for (int p = 1; p <= max_order; ++p) bases.push_back(testing_basis(density, p));

  std::ostringstream table;
  table << "# mixquad demo\n";
  table << "# mean_ref " << format_full(ref.mean) << " se " << format_full(ref.standard_error)
        << " n " << kDemoOracleSamples << " oracle_seed " << kDemoOracleSeed << "\n";
  table << "epsilon,p,M,mean,abs_error\n";

  std::printf("%10s %3s %4s %16s %12s\n", "epsilon", "p", "M", "mean", "abs_error");
  for (double epsilon : epsilons) {
    for (int p = 1; p <= max_order; ++p) {
      SolverConfig solver;
      solver.epsilon = epsilon;
      solver.seed = options.seed;
      const BasisSet& basis = bases[static_cast<std::size_t>(p - 1)];
      const QuadratureRule rule = build_rule(basis, density, p, solver);

      Eigen::VectorXd outputs(rule.size());
      for (int k = 0; k < rule.size(); ++k) {
        outputs[k] = synthetic_response(rule.nodes(k, 0), rule.nodes(k, 1));
      }
      const SurrogateModel model = fit(basis, rule, outputs);
      const double mean = mean_variance(model).mean;
      const double error = std::abs(mean - ref.mean);

      table << format_full(epsilon) << "," << p << "," << rule.size() << ","
            << format_full(mean) << "," << format_full(error) << "\n";
      std::printf("%10.0e %3d %4d %16.10f %12.3e\n", epsilon, p, rule.size(), mean, error);

      if (epsilon == 1e-8 && p == max_order) {
        save_rule(rule, solver.seed, join_path(out_dir, "demo_rule.csv"));
        save_surrogates({"out1"}, {model}, density_hash(density),
                        join_path(out_dir, "demo_surrogate.json"));
      }
    }
  }

  const std::string table_path = join_path(out_dir, "demo_table.csv");
  std::ofstream out(table_path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + table_path + "' for writing");
  out << table.str();
  out.flush();
  if (!out) throw IoError("write to '" + table_path + "' failed");

  std::printf("demo: errors fall with p until the optimization tolerance dominates\n");
  std::printf("demo: wrote %s\n", table_path.c_str());
  return 0;
}

}  // namespace mixquad::cli
