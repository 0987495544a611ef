#ifndef MIXQUAD_DENSITY_HPP
#define MIXQUAD_DENSITY_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "mixquad/multi_index.hpp"
#include "mixquad/rng.hpp"

namespace mixquad {

struct MixtureComponent {
  double weight = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

// Joint density rho(x) = sum_i r_i N(x | mu_i, Sigma_i). Immutable after
// construction; construction validates that the weights form a convex
// combination and that every covariance is symmetric positive definite
// (smallest eigenvalue above 1e-10 * trace). The Cholesky factor of each
// covariance is cached for sampling and density evaluation.
class GaussianMixture {
public:
  GaussianMixture(int dimension, std::vector<MixtureComponent> components);

  int dimension() const { return dimension_; }
  const std::vector<MixtureComponent>& components() const { return components_; }
  const Eigen::MatrixXd& cholesky(int i) const { return chol_[i]; }

  // Mixture mean, sum_i r_i mu_i.
  Eigen::VectorXd mean() const;

private:
  int dimension_;
  std::vector<MixtureComponent> components_;
  std::vector<Eigen::MatrixXd> chol_;  // lower factors
};

// Raw moments E[x^alpha] for all |alpha| <= max_order, stored densely in
// graded-lex rank order so joins against a basis index set are O(1).
class MomentTable {
public:
  MomentTable(MultiIndexSet indices, Eigen::VectorXd values);

  int dimension() const { return indices_.dimension(); }
  int max_order() const { return indices_.order(); }
  int size() const { return indices_.size(); }
  const MultiIndexSet& indices() const { return indices_; }

  double value(int rank) const { return values_[rank]; }
  double value(std::span<const int> alpha) const { return values_[indices_.rank(alpha)]; }
  const Eigen::VectorXd& values() const { return values_; }

private:
  MultiIndexSet indices_;
  Eigen::VectorXd values_;
};

// Density value at a point.
double pdf(const GaussianMixture& model, const Eigen::VectorXd& point);

// n samples, one per row, deterministic in the seed. Per sample the stream
// consumes one uniform (component pick) followed by ceil(d/2) Box-Muller
// pairs; a leftover half-pair is discarded so row k never depends on d's
// parity bookkeeping.
Eigen::MatrixXd sample(const GaussianMixture& model, std::int64_t n, std::uint64_t seed);

// Fills rows from an existing stream; used by the chunked Monte-Carlo paths.
void sample_into(const GaussianMixture& model, Rng& rng, Eigen::Ref<Eigen::MatrixXd> rows);

// Exact raw moment E[x^alpha] from the per-component Gaussian recurrence
//   m(beta + e_j) = mu_j m(beta) + sum_k beta_k Sigma_jk m(beta - e_k)
// combined with the mixture weights.
double moment(const GaussianMixture& model, std::span<const int> alpha);

// All moments up to max_order; entries agree bit-for-bit with moment().
MomentTable moment_table(const GaussianMixture& model, int max_order);

struct McMoment {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Monte-Carlo estimate of E[x^alpha] over n draws. Test oracle and
// diagnostic; the library itself never consumes it.
McMoment mc_moment(const GaussianMixture& model, std::span<const int> alpha,
                   std::int64_t n, std::uint64_t seed);

// FNV-1a over the canonical byte layout (dimension, weights, means,
// covariances); identifies a density in file provenance fields.
std::uint64_t density_hash(const GaussianMixture& model);

}  // namespace mixquad

#endif  // MIXQUAD_DENSITY_HPP
