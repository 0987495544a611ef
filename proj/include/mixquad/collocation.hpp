#ifndef MIXQUAD_COLLOCATION_HPP
#define MIXQUAD_COLLOCATION_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "mixquad/basis.hpp"
#include "mixquad/density.hpp"
#include "mixquad/quadrature.hpp"

namespace mixquad {

// Truncated expansion y(x) ~ sum_j coeffs_j Psi_j(x) of order `order`,
// carrying the basis it was projected on and the hash of the rule that
// produced the coefficients.
struct SurrogateModel {
  BasisSet basis;          // built to at least `order`
  Eigen::VectorXd coeffs;  // length N_order, graded-lex rank order
  int order = 0;
  std::uint64_t rule_hash = 0;
};

// Stable content hash of a rule (dimension, order, nodes, weights); ties
// surrogates and sample batches to the rule that generated them.
std::uint64_t rule_hash(const QuadratureRule& rule);

// Discrete projection: coeffs_j = sum_k outputs_k Psi_j(node_k) w_k.
SurrogateModel fit(const BasisSet& basis, const QuadratureRule& rule,
                   const Eigen::VectorXd& outputs);

double evaluate(const SurrogateModel& model, const Eigen::VectorXd& point);

// Surrogate values at many points (rows). Collapses the expansion onto raw
// monomials once and runs the batched polynomial kernel.
Eigen::VectorXd evaluate_batch(const SurrogateModel& model, const Eigen::MatrixXd& points);

struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;
};

// mean = coeffs_1, variance = sum_{j >= 2} coeffs_j^2 (orthonormality).
MeanVariance mean_variance(const SurrogateModel& model);

struct PdfEstimate {
  Eigen::VectorXd bin_edges;     // bins + 1
  Eigen::VectorXd bin_density;   // normalized so the histogram integrates to 1
  Eigen::VectorXd curve_x;       // bin centers
  Eigen::VectorXd curve_density; // Gaussian-kernel smoothed curve
  double bandwidth = 0.0;        // Silverman's rule
  bool degenerate = false;       // zero-spread surrogate, single atom
};

// Pushes n density samples through the surrogate and returns a normalized
// histogram plus a kernel-smoothed curve. Sampling is chunked with derived
// seeds (seed + chunk index), so results do not depend on thread count.
PdfEstimate pdf_estimate(const SurrogateModel& model, const GaussianMixture& density,
                         std::int64_t n, std::uint64_t seed, int bins);

struct ErrorCertificate {
  double gram_deviation = 0.0;  // ||V - I||_F with V_ij = I[Psi_i Psi_j]
  double t_constant = 0.0;      // max_{i,j <= N_p} ||Psi_i Psi_j||_2
  double epsilon = 0.0;         // the rule's achieved l1 residual
  double bound = 0.0;           // N_p * T * epsilon
};

// Computable bound on the empirical orthonormality defect of the rule. The
// constant T is evaluated exactly from moments of order up to 4p.
ErrorCertificate certificate(const BasisSet& basis, const QuadratureRule& rule,
                             const MomentTable& moments4p);

}  // namespace mixquad

#endif  // MIXQUAD_COLLOCATION_HPP
