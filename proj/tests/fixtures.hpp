#ifndef MIXQUAD_TESTS_FIXTURES_HPP
#define MIXQUAD_TESTS_FIXTURES_HPP

#include <cmath>
#include <cstdint>

#include "mixquad/basis.hpp"
#include "mixquad/density.hpp"
#include "mixquad/multi_index.hpp"

namespace mixquad::testing {

// Reference mixture used across the suites: x = dx/10 with
// dx ~ 1/2 N((1,1), S1) + 1/2 N((-1,-1), S2), S1 = [[1,.4],[.4,1]],
// S2 = [[1,-.3],[-.3,1]].
inline GaussianMixture fixture_mixture() {
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

inline GaussianMixture standard_normal_1d() {
  MixtureComponent c;
  c.weight = 1.0;
  c.mean = Eigen::VectorXd::Zero(1);
  c.covariance = Eigen::MatrixXd::Identity(1, 1);
  return GaussianMixture(1, {c});
}

// Hand moment sequences, independent of the library's recurrence.
inline MomentTable gaussian_moment_table_1d(int max_order) {
  MultiIndexSet set(1, max_order);
  Eigen::VectorXd values(set.size());
  values[0] = 1.0;
  if (max_order >= 1) values[1] = 0.0;
  for (int k = 2; k <= max_order; ++k) {
    values[k] = (k % 2 == 0) ? values[k - 2] * static_cast<double>(k - 1) : 0.0;
  }
  return MomentTable(std::move(set), std::move(values));
}

inline MomentTable uniform_moment_table_1d(int max_order) {
  MultiIndexSet set(1, max_order);
  Eigen::VectorXd values(set.size());
  for (int k = 0; k <= max_order; ++k) {
    values[k] = (k % 2 == 0) ? 1.0 / static_cast<double>(k + 1) : 0.0;
  }
  return MomentTable(std::move(set), std::move(values));
}

// Two-atom density on {-1, +1}: every polynomial multiple of x^2 - 1
// vanishes on the support, so order >= 2 orthogonalization must fail.
inline MomentTable two_point_moment_table_1d(int max_order) {
  MultiIndexSet set(1, max_order);
  Eigen::VectorXd values(set.size());
  for (int k = 0; k <= max_order; ++k) values[k] = (k % 2 == 0) ? 1.0 : 0.0;
  return MomentTable(std::move(set), std::move(values));
}

inline double synthetic_response(double x1, double x2) {
  return std::exp(x1) + 0.1 * std::cos(x1) * std::sin(x2);
}

// Closed-form mean of the synthetic response under the fixture:
//   E[exp(x1)] = (exp(.1 + .01/2) + exp(-.1 + .01/2)) / 2
//   E[cos(x1) sin(x2)] per component from E[sin(X+Y)], E[sin(X-Y)] of a
//   bivariate Gaussian; cross-checks the Monte-Carlo oracles.
inline constexpr double kFixtureResponseMean = 1.01000736835388512;

struct McEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

inline McEstimate response_mc(const GaussianMixture& density, std::int64_t n,
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
  McEstimate out;
  out.mean = sum / static_cast<double>(n);
  const double var =
      (sum_sq - static_cast<double>(n) * out.mean * out.mean) / static_cast<double>(n - 1);
  out.standard_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  return out;
}

// Quadrature testing basis for order p: basis functions to 2p, moments 4p.
inline BasisSet testing_basis(const GaussianMixture& density, int order) {
  return gram_schmidt(build_index_set(density.dimension(), 2 * order),
                      moment_table(density, 4 * order));
}

}  // namespace mixquad::testing

#endif  // MIXQUAD_TESTS_FIXTURES_HPP
