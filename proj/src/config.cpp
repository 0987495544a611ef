#include "mixquad/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include <json.hpp>

#include "mixquad/errors.hpp"

namespace mixquad {

namespace {

using Json = nlohmann::json;

Json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string(what) + ": cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw InputError(std::string(what) + ": '" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed,
                         const std::string& context) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) {
      throw InputError("config: unknown key '" + context + item.key() + "'");
    }
  }
}

Eigen::MatrixXd parse_covariance(const Json& j, int d, const std::string& context) {
  Eigen::MatrixXd cov(d, d);
  if (!j.is_array() || j.empty()) {
    throw InputError("config: " + context + " must be a matrix");
  }
  if (j[0].is_array()) {
    if (static_cast<int>(j.size()) != d) {
      throw InputError("config: " + context + " must have " + std::to_string(d) + " rows");
    }
    for (int r = 0; r < d; ++r) {
      if (static_cast<int>(j[static_cast<std::size_t>(r)].size()) != d) {
        throw InputError("config: " + context + " row " + std::to_string(r) + " has wrong length");
      }
      for (int c = 0; c < d; ++c) {
        cov(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
      }
    }
  } else {
    // Flat row-major list.
    if (static_cast<int>(j.size()) != d * d) {
      throw InputError("config: " + context + " must have " + std::to_string(d * d) + " entries");
    }
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) cov(r, c) = j[static_cast<std::size_t>(r * d + c)].get<double>();
    }
  }
  return cov;
}

GaussianMixture parse_density(const Json& j, const std::string& context) {
  if (!j.is_object()) throw InputError("config: " + context + " must be an object");
  reject_unknown_keys(j, {"dimension", "components"}, context + ".");
  if (!j.contains("dimension") || !j.contains("components")) {
    throw InputError("config: " + context + " needs 'dimension' and 'components'");
  }
  const int d = j.at("dimension").get<int>();
  std::vector<MixtureComponent> components;
  for (std::size_t i = 0; i < j.at("components").size(); ++i) {
    const auto& cj = j.at("components")[i];
    const std::string ctx = context + ".components[" + std::to_string(i) + "].";
    reject_unknown_keys(cj, {"weight", "mean", "covariance"}, ctx);
    MixtureComponent comp;
    comp.weight = cj.at("weight").get<double>();
    const auto& mean = cj.at("mean");
    if (static_cast<int>(mean.size()) != d) {
      throw InputError("config: " + ctx + "mean must have " + std::to_string(d) + " entries");
    }
    comp.mean.resize(d);
    for (int t = 0; t < d; ++t) comp.mean[t] = mean[static_cast<std::size_t>(t)].get<double>();
    comp.covariance = parse_covariance(cj.at("covariance"), d, ctx + "covariance");
    components.push_back(std::move(comp));
  }
  return GaussianMixture(d, std::move(components));
}

}  // namespace

const GaussianMixture& ProjectConfig::require_density() const {
  if (!density) {
    throw InputError("config: this command needs a 'density' (or 'density_file') entry");
  }
  return *density;
}

GaussianMixture load_density(const std::string& path) {
  return parse_density(read_json_file(path, "load_density"), "density");
}

ProjectConfig load_config(const std::string& path) {
  const Json j = read_json_file(path, "load_config");
  if (!j.is_object()) throw InputError("config: top level must be an object");
  reject_unknown_keys(
      j, {"density", "density_file", "order", "solver", "simulator", "output_dir"}, "");

  ProjectConfig cfg;
  if (j.contains("density") && j.contains("density_file")) {
    throw InputError("config: give either 'density' or 'density_file', not both");
  }
  if (j.contains("density")) cfg.density = parse_density(j.at("density"), "density");
  if (j.contains("density_file")) cfg.density = load_density(j.at("density_file").get<std::string>());
  if (j.contains("order")) {
    cfg.order = j.at("order").get<int>();
    if (cfg.order < 0) throw InputError("config: order must be >= 0");
  }
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    reject_unknown_keys(s,
                        {"epsilon", "seed", "max_bcd_iters", "init_multiplier",
                         "start_nodes_factor", "gn_damping", "max_increase_rounds"},
                        "solver.");
    if (s.contains("epsilon")) cfg.solver.epsilon = s.at("epsilon").get<double>();
    if (s.contains("seed")) cfg.solver.seed = s.at("seed").get<std::uint64_t>();
    if (s.contains("max_bcd_iters")) cfg.solver.max_bcd_iters = s.at("max_bcd_iters").get<int>();
    if (s.contains("init_multiplier")) {
      cfg.solver.init_multiplier = s.at("init_multiplier").get<int>();
    }
    if (s.contains("start_nodes_factor")) {
      cfg.solver.start_nodes_factor = s.at("start_nodes_factor").get<int>();
    }
    if (s.contains("gn_damping")) cfg.solver.gn_damping = s.at("gn_damping").get<double>();
    if (s.contains("max_increase_rounds")) {
      cfg.solver.max_increase_rounds = s.at("max_increase_rounds").get<int>();
    }
    if (!(cfg.solver.epsilon > 0.0)) throw InputError("config: solver.epsilon must be > 0");
    if (cfg.solver.init_multiplier < 1 || cfg.solver.start_nodes_factor < 1) {
      throw InputError("config: solver pool factors must be >= 1");
    }
  }

  if (j.contains("simulator")) {
    const auto& s = j.at("simulator");
    reject_unknown_keys(s, {"command", "coord_mode", "parallelism", "retries", "results"},
                        "simulator.");
    if (s.contains("command")) cfg.simulator.command = s.at("command").get<std::string>();
    if (s.contains("coord_mode")) {
      const std::string mode = s.at("coord_mode").get<std::string>();
      if (mode == "args") {
        cfg.simulator.coord_mode = RunOptions::CoordMode::kArgs;
      } else if (mode == "stdin") {
        cfg.simulator.coord_mode = RunOptions::CoordMode::kStdin;
      } else {
        throw InputError("config: simulator.coord_mode must be 'args' or 'stdin'");
      }
    }
    if (s.contains("parallelism")) {
      cfg.simulator.parallelism = s.at("parallelism").get<int>();
      if (cfg.simulator.parallelism < 1) {
        throw InputError("config: simulator.parallelism must be >= 1");
      }
    }
    if (s.contains("retries")) {
      cfg.simulator.retries = s.at("retries").get<int>();
      if (cfg.simulator.retries < 0) throw InputError("config: simulator.retries must be >= 0");
    }
    if (s.contains("results")) cfg.simulator.results_path = s.at("results").get<std::string>();
  }

  return cfg;
}

}  // namespace mixquad
