#include "mixquad/kernels.hpp"

// NEON variants for aarch64. Same structure as the AVX2 file at width 2.

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include <cstddef>
#include <vector>

namespace mixquad::kernels {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void power_product_sums_neon(const double* const* cols, const int* exps, int dim,
                             std::size_t n, double* sum, double* sum_sq) {
  float64x2_t acc = vdupq_n_f64(0.0);
  float64x2_t acc_sq = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t value = vdupq_n_f64(1.0);
    for (int j = 0; j < dim; ++j) {
      const float64x2_t base = vld1q_f64(cols[j] + i);
      float64x2_t p = vdupq_n_f64(1.0);
      for (int e = 0; e < exps[j]; ++e) p = vmulq_f64(p, base);
      value = vmulq_f64(value, p);
    }
    acc = vaddq_f64(acc, value);
    acc_sq = vfmaq_f64(acc_sq, value, value);
  }
  double s = vaddvq_f64(acc);
  double s2 = vaddvq_f64(acc_sq);
  for (; i < n; ++i) {
    double value = 1.0;
    for (int j = 0; j < dim; ++j) {
      double p = 1.0;
      for (int e = 0; e < exps[j]; ++e) p *= cols[j][i];
      value *= p;
    }
    s += value;
    s2 += value * value;
  }
  *sum = s;
  *sum_sq = s2;
}

void poly_eval_neon(const double* const* cols, std::size_t n, int dim,
                    const int* exps, int nterms, int max_exp,
                    const double* coeffs, double* out) {
  // Power table laid out as plain doubles, 2 lanes per (dim, exponent) slot.
  std::vector<double> powers(static_cast<std::size_t>(dim) * (max_exp + 1) * 2);
  const auto slot = [&](int j, int e) {
    return powers.data() + (static_cast<std::size_t>(j) * (max_exp + 1) + e) * 2;
  };
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    for (int j = 0; j < dim; ++j) {
      vst1q_f64(slot(j, 0), vdupq_n_f64(1.0));
      const float64x2_t x = vld1q_f64(cols[j] + i);
      for (int e = 1; e <= max_exp; ++e) {
        vst1q_f64(slot(j, e), vmulq_f64(vld1q_f64(slot(j, e - 1)), x));
      }
    }
    float64x2_t acc = vdupq_n_f64(0.0);
    for (int t = 0; t < nterms; ++t) {
      float64x2_t term = vdupq_n_f64(coeffs[t]);
      const int* alpha = exps + static_cast<std::size_t>(t) * dim;
      for (int j = 0; j < dim; ++j) {
        term = vmulq_f64(term, vld1q_f64(slot(j, alpha[j])));
      }
      acc = vaddq_f64(acc, term);
    }
    vst1q_f64(out + i, acc);
  }
  if (i < n) {
    std::vector<const double*> tails(dim);
    for (int j = 0; j < dim; ++j) tails[j] = cols[j] + i;
    scalar_ops().poly_eval(tails.data(), n - i, dim, exps, nterms, max_exp, coeffs, out + i);
  }
}

}  // namespace

bool neon_compiled() { return true; }

const Ops& neon_ops() {
  static const Ops ops{"neon", dot_neon, axpy_neon, power_product_sums_neon,
                       poly_eval_neon};
  return ops;
}

}  // namespace mixquad::kernels

#else

namespace mixquad::kernels {

bool neon_compiled() { return false; }

const Ops& neon_ops() { return scalar_ops(); }

}  // namespace mixquad::kernels

#endif
