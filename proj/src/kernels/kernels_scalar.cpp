#include <cstddef>
#include <vector>

#include "mixquad/kernels.hpp"

// Reference kernels. These define the semantics; the SIMD variants must
// match them within floating-point reassociation slack.

namespace mixquad::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double power(double base, int exponent) {
  double value = 1.0;
  for (int e = 0; e < exponent; ++e) value *= base;
  return value;
}

void power_product_sums_scalar(const double* const* cols, const int* exps, int dim,
                               std::size_t n, double* sum, double* sum_sq) {
  double acc = 0.0;
  double acc_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double value = 1.0;
    for (int j = 0; j < dim; ++j) value *= power(cols[j][i], exps[j]);
    acc += value;
    acc_sq += value * value;
  }
  *sum = acc;
  *sum_sq = acc_sq;
}

void poly_eval_scalar(const double* const* cols, std::size_t n, int dim,
                      const int* exps, int nterms, int max_exp,
                      const double* coeffs, double* out) {
  // Per-sample power table: powers[j * (max_exp + 1) + e] = cols[j][i]^e.
  std::vector<double> powers(static_cast<std::size_t>(dim) * (max_exp + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) {
      double* row = powers.data() + static_cast<std::size_t>(j) * (max_exp + 1);
      row[0] = 1.0;
      const double x = cols[j][i];
      for (int e = 1; e <= max_exp; ++e) row[e] = row[e - 1] * x;
    }
    double acc = 0.0;
    for (int t = 0; t < nterms; ++t) {
      double term = coeffs[t];
      const int* alpha = exps + static_cast<std::size_t>(t) * dim;
      for (int j = 0; j < dim; ++j) {
        term *= powers[static_cast<std::size_t>(j) * (max_exp + 1) + alpha[j]];
      }
      acc += term;
    }
    out[i] = acc;
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{"scalar", dot_scalar, axpy_scalar, power_product_sums_scalar,
                       poly_eval_scalar};
  return ops;
}

}  // namespace mixquad::kernels
