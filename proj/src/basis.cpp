#include "mixquad/basis.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mixquad/errors.hpp"

namespace mixquad {

BasisSet::BasisSet(MultiIndexSet indices, Eigen::MatrixXd coeffs, MomentTable moments,
                   double gram_deviation, double condition_estimate)
    : indices_(std::move(indices)),
      coeffs_(std::move(coeffs)),
      moments_(std::move(moments)),
      gram_deviation_(gram_deviation),
      condition_estimate_(condition_estimate) {}

Eigen::MatrixXd gram_schmidt_rows(const Eigen::MatrixXd& gram, Eigen::MatrixXd rows) {
  const int n = static_cast<int>(rows.rows());
  // projections[i] = gram * rows.row(i)^T for finished rows, so each inner
  // product against a finished row is a single dot product.
  Eigen::MatrixXd projections(n, n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd v = rows.row(j).transpose();
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < j; ++i) {
        const double c = projections.col(i).dot(v);
        v -= c * rows.row(i).transpose();
      }
    }
    const double norm_sq = v.dot(gram * v);
    if (!(norm_sq > 1e-12)) {
      throw DegenerateDensityError(
          "orthogonalization collapsed at basis function " + std::to_string(j + 1) +
          " (relative norm^2 " + std::to_string(norm_sq) +
          "); the density does not determine this polynomial order uniquely");
    }
    rows.row(j) = v.transpose() / std::sqrt(norm_sq);
    projections.col(j) = gram * rows.row(j).transpose();
  }
  return rows;
}

BasisSet gram_schmidt(const MultiIndexSet& index_set, const MomentTable& moments) {
  if (moments.dimension() != index_set.dimension()) {
    throw InputError("gram_schmidt: moment table dimension mismatch");
  }
  if (moments.max_order() < 2 * index_set.order()) {
    throw InsufficientMomentOrderError(
        "gram_schmidt needs moments up to twice the basis order",
        2 * index_set.order(), moments.max_order());
  }

  const int n = index_set.size();
  Eigen::MatrixXd gram(n, n);
  const MultiIndexSet& table_set = moments.indices();
  // The basis indices are a prefix of the table indices (same graded-lex
  // generation), so sums can be ranked directly in the table's set.
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b <= a; ++b) {
      const double value = moments.value(table_set.rank_of_sum(a, b));
      gram(a, b) = value;
      gram(b, a) = value;
    }
  }

  // Scale monomials to unit norm first; the raw Gram spans many orders of
  // magnitude once high moments of a narrow density enter.
  Eigen::VectorXd scale(n);
  for (int i = 0; i < n; ++i) {
    if (!(gram(i, i) > 0.0)) {
      throw DegenerateDensityError("monomial " + std::to_string(i + 1) +
                                   " has nonpositive second moment");
    }
    scale[i] = 1.0 / std::sqrt(gram(i, i));
  }
  const Eigen::MatrixXd gram_scaled = scale.asDiagonal() * gram * scale.asDiagonal();

  Eigen::MatrixXd rows =
      gram_schmidt_rows(gram_scaled, Eigen::MatrixXd::Identity(n, n));

  const double deviation =
      (rows * gram_scaled * rows.transpose() - Eigen::MatrixXd::Identity(n, n))
          .cwiseAbs()
          .maxCoeff();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_scaled);
  const double lambda_min = eig.eigenvalues().minCoeff();
  const double condition =
      lambda_min > 0.0 ? eig.eigenvalues().maxCoeff() / lambda_min
                       : std::numeric_limits<double>::infinity();

  if (deviation > 1e-8) {
    throw NumericalError(
        "orthonormality defect " + std::to_string(deviation) +
        " exceeds 1e-8; normalized moment Gram condition estimate " +
        std::to_string(condition));
  }

  // Undo the scaling so the rows act on raw monomials.
  Eigen::MatrixXd coeffs = rows * scale.asDiagonal();
  return BasisSet(index_set, std::move(coeffs), moments, deviation, condition);
}

Eigen::VectorXd eval_monomials(const MultiIndexSet& set, const Eigen::VectorXd& point) {
  if (point.size() != set.dimension()) {
    throw InputError("eval_monomials: point dimension mismatch");
  }
  const int d = set.dimension();
  const int p = set.order();
  Eigen::MatrixXd powers(d, p + 1);
  powers.col(0).setOnes();
  for (int e = 1; e <= p; ++e) {
    powers.col(e) = powers.col(e - 1).cwiseProduct(point);
  }
  Eigen::VectorXd values(set.size());
  for (int i = 0; i < set.size(); ++i) {
    const auto alpha = set[i];
    double v = 1.0;
    for (int j = 0; j < d; ++j) v *= powers(j, alpha[j]);
    values[i] = v;
  }
  return values;
}

namespace {

int checked_count(const BasisSet& basis, int up_to_order, const char* who) {
  if (up_to_order < 0 || up_to_order > basis.order()) {
    throw InputError(std::string(who) + ": requested order " +
                     std::to_string(up_to_order) + " outside basis order " +
                     std::to_string(basis.order()));
  }
  return basis.indices().count_up_to(up_to_order);
}

}  // namespace

Eigen::VectorXd eval_basis(const BasisSet& basis, const Eigen::VectorXd& point,
                           int up_to_order) {
  const int n = checked_count(basis, up_to_order, "eval_basis");
  const Eigen::VectorXd monomials = eval_monomials(basis.indices(), point);
  return basis.coeffs().topLeftCorner(n, n) * monomials.head(n);
}

BasisEval eval_basis_with_gradient(const BasisSet& basis, const Eigen::VectorXd& point,
                                   int up_to_order) {
  const int n = checked_count(basis, up_to_order, "eval_basis_with_gradient");
  const MultiIndexSet& set = basis.indices();
  const int d = set.dimension();
  const int p = set.order();

  Eigen::MatrixXd powers(d, p + 1);
  powers.col(0).setOnes();
  for (int e = 1; e <= p; ++e) {
    powers.col(e) = powers.col(e - 1).cwiseProduct(point);
  }

  Eigen::VectorXd monomials(n);
  Eigen::MatrixXd gradients = Eigen::MatrixXd::Zero(n, d);
  for (int i = 0; i < n; ++i) {
    const auto alpha = set[i];
    double v = 1.0;
    for (int j = 0; j < d; ++j) v *= powers(j, alpha[j]);
    monomials[i] = v;
    for (int t = 0; t < d; ++t) {
      if (alpha[t] == 0) continue;
      double g = static_cast<double>(alpha[t]) * powers(t, alpha[t] - 1);
      for (int j = 0; j < d; ++j) {
        if (j != t) g *= powers(j, alpha[j]);
      }
      gradients(i, t) = g;
    }
  }

  BasisEval eval;
  const auto block = basis.coeffs().topLeftCorner(n, n);
  eval.values = block * monomials;
  eval.jacobian = block * gradients;
  return eval;
}

BasisStatistics statistics_from_basis(const BasisSet& basis, int up_to_order) {
  const int n = checked_count(basis, up_to_order, "statistics_from_basis");
  const MomentTable& moments = basis.moments();
  if (moments.max_order() < 2 * up_to_order) {
    throw InsufficientMomentOrderError(
        "statistics_from_basis needs moments to twice the requested order",
        2 * up_to_order, moments.max_order());
  }
  const MultiIndexSet& table_set = moments.indices();
  Eigen::MatrixXd gram(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b <= a; ++b) {
      const double value = moments.value(table_set.rank_of_sum(a, b));
      gram(a, b) = value;
      gram(b, a) = value;
    }
  }
  const auto block = basis.coeffs().topLeftCorner(n, n);
  BasisStatistics stats;
  stats.means = block * moments.values().head(n);
  stats.gram = block * gram * block.transpose();
  return stats;
}

}  // namespace mixquad
