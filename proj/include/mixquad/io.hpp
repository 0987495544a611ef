#ifndef MIXQUAD_IO_HPP
#define MIXQUAD_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mixquad/basis.hpp"
#include "mixquad/collocation.hpp"
#include "mixquad/density.hpp"
#include "mixquad/quadrature.hpp"

namespace mixquad {

std::string hex_hash(std::uint64_t h);

// --- basis files (JSON) ---------------------------------------------------
// Index set, full coefficient matrix at full precision, provenance (density
// hash, orders, orthonormality diagnostics).
void save_basis(const BasisSet& basis, std::uint64_t density_hash_value,
                const std::string& path);
// Rebuilds the moment table from `density` (validating the stored density
// hash) and re-checks the orthonormality defect of the stored coefficients.
BasisSet load_basis(const std::string& path, const GaussianMixture& density);

// --- rule files (CSV) -----------------------------------------------------
// Layout: provenance comment, `d,p,M,residual_l1,seed` header pair, then M
// rows of coordinates plus weight at full precision.
void save_rule(const QuadratureRule& rule, std::uint64_t seed, const std::string& path);

struct RuleFile {
  QuadratureRule rule;
  std::uint64_t seed = 0;
};
// Validates structural invariants and the content hash on import.
RuleFile load_rule(const std::string& path);

// --- surrogate files (JSON) -----------------------------------------------
// One shared basis plus one coefficient vector per named output column.
void save_surrogates(const std::vector<std::string>& names,
                     const std::vector<SurrogateModel>& models,
                     std::uint64_t density_hash_value, const std::string& path);

struct SurrogateFile {
  std::vector<std::string> names;
  std::vector<SurrogateModel> models;
  std::uint64_t rule_hash = 0;
};
SurrogateFile load_surrogates(const std::string& path, const GaussianMixture& density);

// --- pdf data (CSV) ---------------------------------------------------------
void write_pdf_csv(const PdfEstimate& estimate, const std::string& path);

}  // namespace mixquad

#endif  // MIXQUAD_IO_HPP
