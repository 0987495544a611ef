#include "mixquad/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mixquad/errors.hpp"

namespace mixquad {

namespace {

using Json = nlohmann::ordered_json;

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json load_json(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string(what) + ": cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError(std::string(what) + ": '" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

void write_text(const std::string& path, const std::string& text, const char* what) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(std::string(what) + ": cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(std::string(what) + ": write to '" + path + "' failed");
}

Json matrix_rows(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd rows_to_matrix(const Json& rows, const char* what) {
  if (!rows.is_array() || rows.empty()) {
    throw IoError(std::string(what) + ": expected a non-empty array of rows");
  }
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) {
      throw IoError(std::string(what) + ": ragged rows");
    }
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

std::uint64_t parse_hex(const std::string& text) {
  return std::strtoull(text.c_str(), nullptr, 16);
}

}  // namespace

std::string hex_hash(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_basis(const BasisSet& basis, std::uint64_t density_hash_value,
                const std::string& path) {
  Json j;
  j["schema"] = "mixquad-basis-v1";
  j["dimension"] = basis.dimension();
  j["order"] = basis.order();
  j["moment_order"] = basis.moments().max_order();
  j["density_hash"] = hex_hash(density_hash_value);
  j["gram_deviation"] = basis.gram_deviation();
  j["condition_estimate"] = basis.condition_estimate();
  Json indices = Json::array();
  for (int i = 0; i < basis.size(); ++i) {
    Json idx = Json::array();
    for (int v : basis.indices()[i]) idx.push_back(v);
    indices.push_back(std::move(idx));
  }
  j["indices"] = std::move(indices);
  j["coeffs"] = matrix_rows(basis.coeffs());
  write_text(path, j.dump(1) + "\n", "save_basis");
}

BasisSet load_basis(const std::string& path, const GaussianMixture& density) {
  const Json j = load_json(path, "load_basis");
  if (j.value("schema", "") != "mixquad-basis-v1") {
    throw IoError("load_basis: '" + path + "' is not a basis file");
  }
  const int d = j.at("dimension").get<int>();
  const int order = j.at("order").get<int>();
  const int moment_order = j.at("moment_order").get<int>();
  if (d != density.dimension()) {
    throw InputError("load_basis: file dimension " + std::to_string(d) +
                     " != density dimension " + std::to_string(density.dimension()));
  }
  const std::uint64_t stored_hash = parse_hex(j.at("density_hash").get<std::string>());
  if (stored_hash != density_hash(density)) {
    throw InputError("load_basis: file was built for a different density");
  }

  MultiIndexSet set(d, order);
  const auto& indices = j.at("indices");
  if (static_cast<int>(indices.size()) != set.size()) {
    throw IoError("load_basis: index count mismatch");
  }
  for (int i = 0; i < set.size(); ++i) {
    const auto span = set[i];
    const auto& stored = indices[static_cast<std::size_t>(i)];
    for (int t = 0; t < d; ++t) {
      if (stored[static_cast<std::size_t>(t)].get<int>() != span[t]) {
        throw IoError("load_basis: stored index set is not graded-lex consistent");
      }
    }
  }

  Eigen::MatrixXd coeffs = rows_to_matrix(j.at("coeffs"), "load_basis coefficients");
  if (coeffs.rows() != set.size() || coeffs.cols() != set.size()) {
    throw IoError("load_basis: coefficient matrix shape mismatch");
  }

  MomentTable moments = moment_table(density, moment_order);
  BasisSet basis(set, coeffs, moments, j.value("gram_deviation", 0.0),
                 j.value("condition_estimate", 0.0));
  // Integrity: re-check orthonormality of the stored coefficients against
  // the freshly computed moments.
  const BasisStatistics stats = statistics_from_basis(basis, order);
  const double defect =
      (stats.gram - Eigen::MatrixXd::Identity(set.size(), set.size())).cwiseAbs().maxCoeff();
  if (defect > 1e-8) {
    throw NumericalError("load_basis: stored basis fails orthonormality against this density (defect " +
                         std::to_string(defect) + ")");
  }
  return basis;
}

void save_rule(const QuadratureRule& rule, std::uint64_t seed, const std::string& path) {
  std::ostringstream out;
  out << "# mixquad rule\n";
  out << "# rule " << hex_hash(rule_hash(rule)) << "\n";
  out << "d,p,M,residual_l1,seed\n";
  out << rule.dimension() << "," << rule.order << "," << rule.size() << ","
      << format_full(rule.residual_l1) << "," << seed << "\n";
  for (int j = 0; j < rule.dimension(); ++j) out << "x" << (j + 1) << ",";
  out << "weight\n";
  for (int k = 0; k < rule.size(); ++k) {
    for (int j = 0; j < rule.dimension(); ++j) out << format_full(rule.nodes(k, j)) << ",";
    out << format_full(rule.weights[k]) << "\n";
  }
  write_text(path, out.str(), "save_rule");
}

RuleFile load_rule(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_rule: cannot open '" + path + "'");

  std::uint64_t stored_hash = 0;
  bool saw_hash = false;
  std::string line;
  std::size_t line_number = 0;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header_fields;
  std::vector<double> header_values;

  const auto split = [](const std::string& s) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    return fields;
  };

  int stage = 0;  // 0: want names, 1: want values, 2: want column header, 3: rows
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream comment(line.substr(1));
      std::string word;
      comment >> word;
      if (word == "rule") {
        std::string hex;
        comment >> hex;
        stored_hash = parse_hex(hex);
        saw_hash = true;
      }
      continue;
    }
    const auto fields = split(line);
    if (stage == 0) {
      if (fields != std::vector<std::string>{"d", "p", "M", "residual_l1", "seed"}) {
        throw ParseError("rule file header must be 'd,p,M,residual_l1,seed'", line_number);
      }
      stage = 1;
    } else if (stage == 1) {
      if (fields.size() != 5) throw ParseError("expected 5 header values", line_number);
      for (const auto& f : fields) header_values.push_back(std::strtod(f.c_str(), nullptr));
      stage = 2;
    } else if (stage == 2) {
      stage = 3;  // column names line
    } else {
      std::vector<double> row;
      row.reserve(fields.size());
      for (const auto& f : fields) {
        char* end = nullptr;
        const double v = std::strtod(f.c_str(), &end);
        if (end == f.c_str() || *end != '\0') {
          throw ParseError("cannot parse rule value '" + f + "'", line_number);
        }
        row.push_back(v);
      }
      rows.push_back(std::move(row));
    }
  }
  if (stage != 3) throw IoError("load_rule: '" + path + "' is truncated");

  RuleFile file;
  const int d = static_cast<int>(header_values[0]);
  file.rule.order = static_cast<int>(header_values[1]);
  const int m = static_cast<int>(header_values[2]);
  file.rule.residual_l1 = header_values[3];
  file.seed = static_cast<std::uint64_t>(header_values[4]);
  if (static_cast<int>(rows.size()) != m) {
    throw IoError("load_rule: expected " + std::to_string(m) + " node rows, found " +
                  std::to_string(rows.size()));
  }
  file.rule.nodes.resize(m, d);
  file.rule.weights.resize(m);
  for (int k = 0; k < m; ++k) {
    if (static_cast<int>(rows[static_cast<std::size_t>(k)].size()) != d + 1) {
      throw IoError("load_rule: node row has wrong field count");
    }
    for (int j = 0; j < d; ++j) file.rule.nodes(k, j) = rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    file.rule.weights[k] = rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(d)];
  }

  validate_rule(file.rule);
  if (!saw_hash || stored_hash != rule_hash(file.rule)) {
    throw IoError("load_rule: content hash mismatch; file corrupted or edited");
  }
  return file;
}

void save_surrogates(const std::vector<std::string>& names,
                     const std::vector<SurrogateModel>& models,
                     std::uint64_t density_hash_value, const std::string& path) {
  if (names.empty() || names.size() != models.size()) {
    throw InputError("save_surrogates: need matching non-empty names and models");
  }
  const SurrogateModel& first = models.front();
  for (const auto& m : models) {
    if (m.order != first.order || m.rule_hash != first.rule_hash ||
        m.basis.order() != first.basis.order()) {
      throw InputError("save_surrogates: models disagree on basis/rule provenance");
    }
  }
  Json j;
  j["schema"] = "mixquad-surrogate-v1";
  j["dimension"] = first.basis.dimension();
  j["order"] = first.order;
  j["density_hash"] = hex_hash(density_hash_value);
  j["rule_hash"] = hex_hash(first.rule_hash);
  Json basis;
  basis["order"] = first.basis.order();
  basis["moment_order"] = first.basis.moments().max_order();
  basis["coeffs"] = matrix_rows(first.basis.coeffs());
  j["basis"] = std::move(basis);
  Json outputs = Json::array();
  for (std::size_t i = 0; i < models.size(); ++i) {
    Json entry;
    entry["name"] = names[i];
    Json coeffs = Json::array();
    for (Eigen::Index c = 0; c < models[i].coeffs.size(); ++c) {
      coeffs.push_back(models[i].coeffs[c]);
    }
    entry["coeffs"] = std::move(coeffs);
    outputs.push_back(std::move(entry));
  }
  j["outputs"] = std::move(outputs);
  write_text(path, j.dump(1) + "\n", "save_surrogates");
}

SurrogateFile load_surrogates(const std::string& path, const GaussianMixture& density) {
  const Json j = load_json(path, "load_surrogates");
  if (j.value("schema", "") != "mixquad-surrogate-v1") {
    throw IoError("load_surrogates: '" + path + "' is not a surrogate file");
  }
  const int d = j.at("dimension").get<int>();
  if (d != density.dimension()) {
    throw InputError("load_surrogates: dimension mismatch with density");
  }
  if (parse_hex(j.at("density_hash").get<std::string>()) != density_hash(density)) {
    throw InputError("load_surrogates: file was built for a different density");
  }
  const int order = j.at("order").get<int>();
  const auto& basis_json = j.at("basis");
  const int basis_order = basis_json.at("order").get<int>();
  const int moment_order = basis_json.at("moment_order").get<int>();

  MultiIndexSet set(d, basis_order);
  Eigen::MatrixXd coeffs = rows_to_matrix(basis_json.at("coeffs"), "load_surrogates basis");
  if (coeffs.rows() != set.size() || coeffs.cols() != set.size()) {
    throw IoError("load_surrogates: basis coefficient shape mismatch");
  }
  MomentTable moments = moment_table(density, moment_order);
  BasisSet basis(set, std::move(coeffs), std::move(moments), 0.0, 0.0);
  const BasisStatistics stats = statistics_from_basis(basis, basis_order);
  const double defect =
      (stats.gram - Eigen::MatrixXd::Identity(set.size(), set.size())).cwiseAbs().maxCoeff();
  if (defect > 1e-8) {
    throw NumericalError("load_surrogates: embedded basis fails orthonormality (defect " +
                         std::to_string(defect) + ")");
  }

  SurrogateFile file;
  file.rule_hash = parse_hex(j.at("rule_hash").get<std::string>());
  for (const auto& entry : j.at("outputs")) {
    const auto& coeff_json = entry.at("coeffs");
    Eigen::VectorXd c(static_cast<Eigen::Index>(coeff_json.size()));
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = coeff_json[static_cast<std::size_t>(i)].get<double>();
    if (c.size() != basis_count(d, order)) {
      throw IoError("load_surrogates: coefficient count does not match order");
    }
    file.names.push_back(entry.at("name").get<std::string>());
    file.models.push_back(SurrogateModel{basis, std::move(c), order, file.rule_hash});
  }
  if (file.models.empty()) throw IoError("load_surrogates: no outputs in file");
  return file;
}

void write_pdf_csv(const PdfEstimate& estimate, const std::string& path) {
  std::ostringstream out;
  out << "# mixquad pdf estimate\n";
  out << "# bandwidth " << format_full(estimate.bandwidth) << "\n";
  out << "# degenerate " << (estimate.degenerate ? 1 : 0) << "\n";
  out << "bin_center,histogram_density,kde_density\n";
  for (Eigen::Index b = 0; b < estimate.curve_x.size(); ++b) {
    out << format_full(estimate.curve_x[b]) << "," << format_full(estimate.bin_density[b])
        << "," << format_full(estimate.curve_density[b]) << "\n";
  }
  write_text(path, out.str(), "write_pdf_csv");
}

}  // namespace mixquad
