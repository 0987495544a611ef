#include "mixquad/collocation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "fnv1a.hpp"
#include "mixquad/errors.hpp"
#include "mixquad/kernels.hpp"

namespace mixquad {

std::uint64_t rule_hash(const QuadratureRule& rule) {
  detail::Fnv1a h;
  h.integer(rule.dimension());
  h.integer(rule.order);
  h.integer(rule.size());
  for (int k = 0; k < rule.size(); ++k) {
    for (int j = 0; j < rule.dimension(); ++j) h.real(rule.nodes(k, j));
    h.real(rule.weights[k]);
  }
  return h.state;
}

SurrogateModel fit(const BasisSet& basis, const QuadratureRule& rule,
                   const Eigen::VectorXd& outputs) {
  if (outputs.size() != rule.size()) {
    throw InputError("fit: " + std::to_string(outputs.size()) + " outputs for " +
                     std::to_string(rule.size()) + " nodes");
  }
  if (!outputs.allFinite()) {
    throw InputError("fit: outputs contain non-finite values");
  }
  if (basis.dimension() != rule.dimension() || basis.order() < rule.order) {
    throw InputError("fit: basis does not cover the rule's certified order");
  }
  const Eigen::MatrixXd phi = basis_matrix(basis, rule.nodes, rule.order);
  return SurrogateModel{basis, phi * outputs.cwiseProduct(rule.weights), rule.order,
                        rule_hash(rule)};
}

double evaluate(const SurrogateModel& model, const Eigen::VectorXd& point) {
  if (point.size() != model.basis.dimension()) {
    throw InputError("evaluate: point dimension mismatch");
  }
  return eval_basis(model.basis, point, model.order).dot(model.coeffs);
}

Eigen::VectorXd evaluate_batch(const SurrogateModel& model, const Eigen::MatrixXd& points) {
  const int d = model.basis.dimension();
  if (points.cols() != d) throw InputError("evaluate_batch: point dimension mismatch");
  const int n_terms = model.basis.indices().count_up_to(model.order);
  // Collapse the expansion onto raw monomials once, then run the batched
  // polynomial kernel: y = sum_i (R^T c)_i p_i.
  const Eigen::VectorXd mono_coeffs =
      model.basis.coeffs().topLeftCorner(n_terms, n_terms).transpose() * model.coeffs;

  Eigen::VectorXd out(points.rows());
  if (points.rows() == 0) return out;
  std::vector<const double*> cols(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) cols[static_cast<std::size_t>(j)] = points.col(j).data();
  kernels::active_ops().poly_eval(cols.data(), static_cast<std::size_t>(points.rows()), d,
                                  model.basis.indices().flat().data(), n_terms, model.order,
                                  mono_coeffs.data(), out.data());
  return out;
}

MeanVariance mean_variance(const SurrogateModel& model) {
  MeanVariance mv;
  mv.mean = model.coeffs[0];
  if (model.coeffs.size() > 1) {
    mv.variance = model.coeffs.tail(model.coeffs.size() - 1).squaredNorm();
  }
  return mv;
}

namespace {

// Chunk size of the derived-seed sampler; part of the reproducibility
// contract (chunk i draws with seed + i), so changing it changes streams.
constexpr std::int64_t kPdfChunk = 1 << 16;

Eigen::VectorXd surrogate_samples(const SurrogateModel& model, const GaussianMixture& density,
                                  std::int64_t n, std::uint64_t seed) {
  const int d = density.dimension();
  const std::int64_t n_chunks = (n + kPdfChunk - 1) / kPdfChunk;
  Eigen::VectorXd values(n);

  const auto fill_chunk = [&](std::int64_t chunk) {
    const std::int64_t begin = chunk * kPdfChunk;
    const std::int64_t m = std::min(kPdfChunk, n - begin);
    Rng rng(seed + static_cast<std::uint64_t>(chunk));
    Eigen::MatrixXd block(m, d);
    sample_into(density, rng, block);
    values.segment(begin, m) = evaluate_batch(model, block);
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::int64_t n_workers = std::min<std::int64_t>(n_chunks, hw);
  if (n_workers <= 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) fill_chunk(c);
  } else {
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (std::int64_t t = 0; t < n_workers; ++t) {
      pool.emplace_back([&]() {
        for (std::int64_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
          fill_chunk(c);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return values;
}

double sample_std(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  const double ss = (v.array() - mean).square().sum();
  return v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

PdfEstimate pdf_estimate(const SurrogateModel& model, const GaussianMixture& density,
                         std::int64_t n, std::uint64_t seed, int bins) {
  if (n < 100) throw InputError("pdf_estimate: n must be >= 100");
  if (bins < 1) throw InputError("pdf_estimate: bins must be >= 1");
  if (density.dimension() != model.basis.dimension()) {
    throw InputError("pdf_estimate: density dimension mismatch");
  }

  const Eigen::VectorXd values = surrogate_samples(model, density, n, seed);
  double lo = values.minCoeff();
  double hi = values.maxCoeff();

  PdfEstimate est;
  if (!(hi > lo)) {
    // All samples identical: single atom, report it in one central bin.
    est.degenerate = true;
    const double center = lo;
    const double width = std::max(1.0, std::abs(center)) * 1e-9;
    lo = center - 0.5 * static_cast<double>(bins) * width;
    hi = lo + static_cast<double>(bins) * width;
  }

  const double width = (hi - lo) / static_cast<double>(bins);
  est.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) est.bin_edges[b] = lo + width * static_cast<double>(b);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(bins);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    int idx = static_cast<int>((values[i] - lo) / width);
    idx = std::clamp(idx, 0, bins - 1);
    counts[idx] += 1.0;
  }
  // Normalize against the realized edge differences so the histogram
  // integrates to one exactly, not just to the rounding of lo + b*width.
  est.bin_density.resize(bins);
  for (int b = 0; b < bins; ++b) {
    est.bin_density[b] =
        counts[b] / (static_cast<double>(n) * (est.bin_edges[b + 1] - est.bin_edges[b]));
  }

  est.curve_x.resize(bins);
  for (int b = 0; b < bins; ++b) est.curve_x[b] = lo + width * (static_cast<double>(b) + 0.5);

  if (est.degenerate) {
    est.bandwidth = 0.0;
    est.curve_density = est.bin_density;
    return est;
  }

  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double sigma = sample_std(values);
  double spread = std::min(sigma, iqr / 1.34);
  if (!(spread > 0.0)) spread = sigma > 0.0 ? sigma : width;
  est.bandwidth = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

  const double inv_h = 1.0 / est.bandwidth;
  const double norm = inv_h / (static_cast<double>(n) * std::sqrt(2.0 * 3.14159265358979323846));
  est.curve_density.resize(bins);
  for (int b = 0; b < bins; ++b) {
    double acc = 0.0;
    const double x = est.curve_x[b];
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const double z = (x - values[i]) * inv_h;
      acc += std::exp(-0.5 * z * z);
    }
    est.curve_density[b] = acc * norm;
  }
  return est;
}

ErrorCertificate certificate(const BasisSet& basis, const QuadratureRule& rule,
                             const MomentTable& moments4p) {
  const int p = rule.order;
  if (p < 1) throw InputError("certificate: rule order must be >= 1");
  if (basis.dimension() != rule.dimension() || basis.order() < p) {
    throw InputError("certificate: basis does not cover the rule's order");
  }
  if (moments4p.dimension() != basis.dimension()) {
    throw InputError("certificate: moment table dimension mismatch");
  }
  if (moments4p.max_order() < 4 * p) {
    throw InsufficientMomentOrderError("certificate needs moments up to order 4p",
                                       4 * p, moments4p.max_order());
  }

  const int np = basis.indices().count_up_to(p);
  const int n2p = static_cast<int>(basis_count(basis.dimension(), 2 * p));
  const MultiIndexSet& table_set = moments4p.indices();

  // Empirical Gram under the discrete rule.
  const Eigen::MatrixXd phi = basis_matrix(basis, rule.nodes, p);
  const Eigen::MatrixXd v = phi * rule.weights.asDiagonal() * phi.transpose();
  ErrorCertificate cert;
  cert.gram_deviation = (v - Eigen::MatrixXd::Identity(np, np)).norm();

  // T = max ||Psi_i Psi_j||_2: expand each product over monomials of order
  // <= 2p and take the quadratic form with the exact monomial Gram.
  Eigen::MatrixXd gram2(n2p, n2p);
  for (int a = 0; a < n2p; ++a) {
    for (int b = 0; b <= a; ++b) {
      const double value = moments4p.value(table_set.rank_of_sum(a, b));
      gram2(a, b) = value;
      gram2(b, a) = value;
    }
  }
  const auto& coeffs = basis.coeffs();
  Eigen::VectorXd product(n2p);
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j <= i; ++j) {
      product.setZero();
      for (int a = 0; a <= i; ++a) {
        const double ria = coeffs(i, a);
        if (ria == 0.0) continue;
        for (int b = 0; b <= j; ++b) {
          product[table_set.rank_of_sum(a, b)] += ria * coeffs(j, b);
        }
      }
      const double norm_sq = product.dot(gram2 * product);
      cert.t_constant = std::max(cert.t_constant, std::sqrt(std::max(norm_sq, 0.0)));
    }
  }

  cert.epsilon = rule.residual_l1;
  cert.bound = static_cast<double>(np) * cert.t_constant * cert.epsilon;
  if (cert.gram_deviation > cert.bound) {
    throw NumericalError("certificate: empirical Gram deviation " +
                         std::to_string(cert.gram_deviation) +
                         " exceeds its bound " + std::to_string(cert.bound));
  }
  return cert;
}

}  // namespace mixquad
