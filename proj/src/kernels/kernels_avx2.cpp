#include "mixquad/kernels.hpp"

// AVX2 variants of the batch kernels. This translation unit is compiled with
// -mavx2 -mfma on x86-64; on other targets it degrades to the scalar table.
// Per-lane arithmetic follows the scalar reference order; only reductions
// reassociate.

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cstddef>
#include <vector>

namespace mixquad::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yi = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yi));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

inline __m256d power4(__m256d base, int exponent) {
  __m256d value = _mm256_set1_pd(1.0);
  for (int e = 0; e < exponent; ++e) value = _mm256_mul_pd(value, base);
  return value;
}

void power_product_sums_avx2(const double* const* cols, const int* exps, int dim,
                             std::size_t n, double* sum, double* sum_sq) {
  __m256d acc = _mm256_setzero_pd();
  __m256d acc_sq = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d value = _mm256_set1_pd(1.0);
    for (int j = 0; j < dim; ++j) {
      value = _mm256_mul_pd(value, power4(_mm256_loadu_pd(cols[j] + i), exps[j]));
    }
    acc = _mm256_add_pd(acc, value);
    acc_sq = _mm256_fmadd_pd(value, value, acc_sq);
  }
  double s = hsum(acc);
  double s2 = hsum(acc_sq);
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

void poly_eval_avx2(const double* const* cols, std::size_t n, int dim,
                    const int* exps, int nterms, int max_exp,
                    const double* coeffs, double* out) {
  // Power table laid out as plain doubles, 4 lanes per (dim, exponent) slot.
  std::vector<double> powers(static_cast<std::size_t>(dim) * (max_exp + 1) * 4);
  const auto slot = [&](int j, int e) {
    return powers.data() + (static_cast<std::size_t>(j) * (max_exp + 1) + e) * 4;
  };
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int j = 0; j < dim; ++j) {
      _mm256_storeu_pd(slot(j, 0), _mm256_set1_pd(1.0));
      const __m256d x = _mm256_loadu_pd(cols[j] + i);
      for (int e = 1; e <= max_exp; ++e) {
        _mm256_storeu_pd(slot(j, e), _mm256_mul_pd(_mm256_loadu_pd(slot(j, e - 1)), x));
      }
    }
    __m256d acc = _mm256_setzero_pd();
    for (int t = 0; t < nterms; ++t) {
      __m256d term = _mm256_set1_pd(coeffs[t]);
      const int* alpha = exps + static_cast<std::size_t>(t) * dim;
      for (int j = 0; j < dim; ++j) {
        term = _mm256_mul_pd(term, _mm256_loadu_pd(slot(j, alpha[j])));
      }
      acc = _mm256_add_pd(acc, term);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  if (i < n) {
    // Remainder through the reference path, offset into the columns.
    std::vector<const double*> tails(dim);
    for (int j = 0; j < dim; ++j) tails[j] = cols[j] + i;
    scalar_ops().poly_eval(tails.data(), n - i, dim, exps, nterms, max_exp, coeffs, out + i);
  }
}

}  // namespace

bool avx2_compiled() { return true; }

const Ops& avx2_ops() {
  static const Ops ops{"avx2", dot_avx2, axpy_avx2, power_product_sums_avx2,
                       poly_eval_avx2};
  return ops;
}

}  // namespace mixquad::kernels

#else  // !(__AVX2__ && __FMA__)

namespace mixquad::kernels {

bool avx2_compiled() { return false; }

const Ops& avx2_ops() { return scalar_ops(); }

}  // namespace mixquad::kernels

#endif
