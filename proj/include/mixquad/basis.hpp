#ifndef MIXQUAD_BASIS_HPP
#define MIXQUAD_BASIS_HPP

#include <Eigen/Dense>

#include "mixquad/density.hpp"
#include "mixquad/multi_index.hpp"

namespace mixquad {

// Orthonormal polynomial family for a density, represented by a lower
// triangular coefficient matrix R with positive diagonal:
//   Psi_j(x) = sum_{i <= j} R(j, i) * p_i(x)
// where p_i are the graded-lex monomials of the index set. The moment table
// it was built from travels along so expectations of basis products stay a
// pure table lookup.
class BasisSet {
public:
  BasisSet(MultiIndexSet indices, Eigen::MatrixXd coeffs, MomentTable moments,
           double gram_deviation, double condition_estimate);

  int dimension() const { return indices_.dimension(); }
  int order() const { return indices_.order(); }
  int size() const { return indices_.size(); }

  const MultiIndexSet& indices() const { return indices_; }
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }
  const MomentTable& moments() const { return moments_; }

  // max |E[Psi_i Psi_j] - delta_ij| measured at construction.
  double gram_deviation() const { return gram_deviation_; }
  // Spectral condition estimate of the normalized monomial Gram matrix;
  // large values warn that the requested order is near the limits of double
  // precision for this density.
  double condition_estimate() const { return condition_estimate_; }

private:
  MultiIndexSet indices_;
  Eigen::MatrixXd coeffs_;
  MomentTable moments_;
  double gram_deviation_;
  double condition_estimate_;
};

// Modified Gram-Schmidt with one reorthogonalization sweep in the inner
// product induced by `gram`. `rows` holds the initial coefficient vectors
// (lower triangular, positive diagonal); returns the orthonormalized rows.
Eigen::MatrixXd gram_schmidt_rows(const Eigen::MatrixXd& gram, Eigen::MatrixXd rows);

// Builds the orthonormal family for `index_set` using expectations taken
// from `moments` (which must extend to twice the set's order).
BasisSet gram_schmidt(const MultiIndexSet& index_set, const MomentTable& moments);

// Monomial values p_i(point) for every index of the set.
Eigen::VectorXd eval_monomials(const MultiIndexSet& set, const Eigen::VectorXd& point);

// [Psi_1(point), ..., Psi_{N_up_to}(point)].
Eigen::VectorXd eval_basis(const BasisSet& basis, const Eigen::VectorXd& point,
                           int up_to_order);

// Basis values together with the N x d Jacobian d Psi_j / d x_t.
struct BasisEval {
  Eigen::VectorXd values;
  Eigen::MatrixXd jacobian;
};
BasisEval eval_basis_with_gradient(const BasisSet& basis, const Eigen::VectorXd& point,
                                   int up_to_order);

struct BasisStatistics {
  Eigen::VectorXd means;  // E[Psi_j]
  Eigen::MatrixXd gram;   // E[Psi_i Psi_j]
};

// Moment-table recomputation of first and second basis moments, used by
// tests and the quadrature error certificate.
BasisStatistics statistics_from_basis(const BasisSet& basis, int up_to_order);

}  // namespace mixquad

#endif  // MIXQUAD_BASIS_HPP
