#ifndef MIXQUAD_KERNELS_HPP
#define MIXQUAD_KERNELS_HPP

#include <cstddef>
#include <string>

namespace mixquad::kernels {

// Batched arithmetic kernels behind the sampling-heavy paths (Monte-Carlo
// moment estimation, pushing sample populations through polynomial
// surrogates). Every kernel has a scalar reference implementation plus SIMD
// variants; the active set is chosen once at startup from CPU features and
// can be forced with MIXQUAD_KERNELS=scalar|avx2|neon. SIMD variants are
// equivalence-tested against the scalar reference.
//
// Layout convention: sample populations are structure-of-arrays, cols[j]
// pointing at n contiguous values of coordinate j.
struct Ops {
  const char* name;

  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);

  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  // Accumulates sum_i prod_j cols[j][i]^exps[j] and the sum of its squares.
  void (*power_product_sums)(const double* const* cols, const int* exps, int dim,
                             std::size_t n, double* sum, double* sum_sq);

  // out[i] = sum_t coeffs[t] * prod_j cols[j][i]^exps[t*dim + j]
  // for a polynomial with nterms monomials of per-variable degree <= max_exp.
  void (*poly_eval)(const double* const* cols, std::size_t n, int dim,
                    const int* exps, int nterms, int max_exp,
                    const double* coeffs, double* out);
};

const Ops& scalar_ops();

bool avx2_available();  // compiled in and supported by this CPU
const Ops& avx2_ops();  // only valid when avx2_available()

bool neon_available();
const Ops& neon_ops();

// Runtime-selected implementation, honoring the MIXQUAD_KERNELS override.
const Ops& active_ops();
std::string active_name();

}  // namespace mixquad::kernels

#endif  // MIXQUAD_KERNELS_HPP
