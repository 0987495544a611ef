#include "mixquad/density.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "fnv1a.hpp"
#include "mixquad/errors.hpp"
#include "mixquad/kernels.hpp"

namespace mixquad {

namespace {
constexpr double kTwoPi = 6.28318530717958647692;
}

GaussianMixture::GaussianMixture(int dimension, std::vector<MixtureComponent> components)
    : dimension_(dimension), components_(std::move(components)) {
  if (dimension_ < 1) throw InputError("mixture dimension must be >= 1");
  if (components_.empty()) throw InputError("mixture needs at least one component");

  double weight_sum = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    const std::string tag = "component " + std::to_string(i);
    if (!(c.weight > 0.0)) throw InputError(tag + ": weight must be > 0");
    if (c.mean.size() != dimension_) throw InputError(tag + ": mean has wrong dimension");
    if (c.covariance.rows() != dimension_ || c.covariance.cols() != dimension_) {
      throw InputError(tag + ": covariance has wrong shape");
    }
    const double scale = c.covariance.cwiseAbs().maxCoeff();
    if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * (1.0 + scale)) {
      throw InputError(tag + ": covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.covariance);
    if (eig.info() != Eigen::Success ||
        eig.eigenvalues().minCoeff() <= 1e-10 * c.covariance.trace()) {
      throw InputError(tag + ": covariance is not positive definite");
    }
    weight_sum += c.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    throw InputError("mixture weights sum to " + std::to_string(weight_sum) +
                     ", expected 1 within 1e-12");
  }

  chol_.reserve(components_.size());
  for (const auto& c : components_) {
    Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
    if (llt.info() != Eigen::Success) {
      throw InputError("covariance Cholesky factorization failed");
    }
    chol_.push_back(llt.matrixL());
  }
}

Eigen::VectorXd GaussianMixture::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dimension_);
  for (const auto& c : components_) m += c.weight * c.mean;
  return m;
}

double pdf(const GaussianMixture& model, const Eigen::VectorXd& point) {
  if (point.size() != model.dimension()) {
    throw InputError("pdf: point dimension " + std::to_string(point.size()) +
                     " != density dimension " + std::to_string(model.dimension()));
  }
  const int d = model.dimension();
  double density = 0.0;
  for (std::size_t i = 0; i < model.components().size(); ++i) {
    const auto& c = model.components()[i];
    const Eigen::MatrixXd& chol = model.cholesky(static_cast<int>(i));
    const Eigen::VectorXd y =
        chol.triangularView<Eigen::Lower>().solve(point - c.mean);
    double log_det_half = 0.0;
    for (int j = 0; j < d; ++j) log_det_half += std::log(chol(j, j));
    const double exponent = -0.5 * y.squaredNorm() - 0.5 * d * std::log(kTwoPi) - log_det_half;
    density += c.weight * std::exp(exponent);
  }
  return density;
}

void sample_into(const GaussianMixture& model, Rng& rng, Eigen::Ref<Eigen::MatrixXd> rows) {
  const int d = model.dimension();
  const auto& comps = model.components();
  Eigen::VectorXd z(d);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const double u = rng.uniform();
    std::size_t pick = comps.size() - 1;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      cumulative += comps[i].weight;
      if (u < cumulative) {
        pick = i;
        break;
      }
    }
    for (int j = 0; j < d; ++j) z[j] = rng.normal();
    rng.discard_spare();
    rows.row(r) = (comps[pick].mean +
                   model.cholesky(static_cast<int>(pick)).triangularView<Eigen::Lower>() * z)
                      .transpose();
  }
}

Eigen::MatrixXd sample(const GaussianMixture& model, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample: n must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd rows(n, model.dimension());
  sample_into(model, rng, rows);
  return rows;
}

namespace {

// Dense dynamic program over one Gaussian component: fills values for every
// index of `set` in graded-lex order. The recurrence path for an entry
// depends only on the entry itself, so tables of different max order agree
// bit-for-bit on their shared prefix.
Eigen::VectorXd component_moments(const MixtureComponent& comp, const MultiIndexSet& set) {
  const int d = set.dimension();
  Eigen::VectorXd table(set.size());
  table[0] = 1.0;
  std::vector<int> beta(d);
  for (int r = 1; r < set.size(); ++r) {
    const auto alpha = set[r];
    int j = 0;
    while (alpha[j] == 0) ++j;
    for (int t = 0; t < d; ++t) beta[t] = alpha[t];
    beta[j] -= 1;
    double m = comp.mean[j] * table[set.rank(beta)];
    for (int k = 0; k < d; ++k) {
      if (beta[k] == 0) continue;
      beta[k] -= 1;
      m += static_cast<double>(beta[k] + 1) * comp.covariance(j, k) * table[set.rank(beta)];
      beta[k] += 1;
    }
    table[r] = m;
  }
  return table;
}

void validate_alpha(const GaussianMixture& model, std::span<const int> alpha) {
  if (static_cast<int>(alpha.size()) != model.dimension()) {
    throw InputError("multi-index dimension mismatch");
  }
  for (int a : alpha) {
    if (a < 0) throw InputError("multi-index entries must be >= 0");
  }
}

}  // namespace

double moment(const GaussianMixture& model, std::span<const int> alpha) {
  validate_alpha(model, alpha);
  int order = 0;
  for (int a : alpha) order += a;
  const MultiIndexSet set(model.dimension(), order);
  const int r = set.rank(alpha);
  double value = 0.0;
  for (const auto& comp : model.components()) {
    value += comp.weight * component_moments(comp, set)[r];
  }
  return value;
}

MomentTable moment_table(const GaussianMixture& model, int max_order) {
  if (max_order < 0) throw InputError("moment_table: max_order must be >= 0");
  MultiIndexSet set(model.dimension(), max_order);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(set.size());
  for (const auto& comp : model.components()) {
    values += comp.weight * component_moments(comp, set);
  }
  return MomentTable(std::move(set), std::move(values));
}

MomentTable::MomentTable(MultiIndexSet indices, Eigen::VectorXd values)
    : indices_(std::move(indices)), values_(std::move(values)) {
  if (values_.size() != indices_.size()) {
    throw InputError("moment table values do not match its index set");
  }
}

McMoment mc_moment(const GaussianMixture& model, std::span<const int> alpha,
                   std::int64_t n, std::uint64_t seed) {
  validate_alpha(model, alpha);
  if (n < 2) throw InputError("mc_moment: n must be >= 2");
  const int d = model.dimension();
  const auto& ops = kernels::active_ops();

  Rng rng(seed);
  constexpr std::int64_t kChunk = 1 << 16;
  Eigen::MatrixXd block(kChunk, d);  // column-major: one coordinate per column
  std::vector<const double*> cols(d);
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t remaining = n;
  while (remaining > 0) {
    const std::int64_t m = std::min(remaining, kChunk);
    auto rows = block.topRows(m);
    sample_into(model, rng, rows);
    for (int j = 0; j < d; ++j) cols[j] = block.col(j).data();
    double s = 0.0;
    double s2 = 0.0;
    ops.power_product_sums(cols.data(), alpha.data(), d, static_cast<std::size_t>(m), &s, &s2);
    sum += s;
    sum_sq += s2;
    remaining -= m;
  }

  McMoment result;
  result.estimate = sum / static_cast<double>(n);
  const double var_numer = sum_sq - static_cast<double>(n) * result.estimate * result.estimate;
  const double variance = var_numer > 0.0 ? var_numer / static_cast<double>(n - 1) : 0.0;
  result.standard_error = std::sqrt(variance / static_cast<double>(n));
  return result;
}

std::uint64_t density_hash(const GaussianMixture& model) {
  detail::Fnv1a h;
  const int d = model.dimension();
  h.integer(d);
  for (const auto& c : model.components()) {
    h.real(c.weight);
    for (int i = 0; i < d; ++i) h.real(c.mean[i]);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) h.real(c.covariance(i, j));
    }
  }
  return h.state;
}

}  // namespace mixquad
