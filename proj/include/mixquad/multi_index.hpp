#ifndef MIXQUAD_MULTI_INDEX_HPP
#define MIXQUAD_MULTI_INDEX_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace mixquad {

// Exponent vector of a monomial x1^a1 * ... * xd^ad.
using MultiIndex = std::vector<int>;

std::int64_t binomial(int n, int k);

// Number of d-variate monomials with total degree <= p.
std::int64_t basis_count(int dimension, int order);

// All exponent vectors with |alpha| <= p in graded lexicographic order:
// ascending total degree, and within a degree the exponent of x1 descends
// first, then x2, and so on. For d=2, p=2 the sequence is
// (0,0) (1,0) (0,1) (2,0) (1,1) (0,2).
class MultiIndexSet {
public:
  MultiIndexSet(int dimension, int order);

  int dimension() const { return dimension_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(degrees_.size()); }

  std::span<const int> operator[](int i) const {
    return {flat_.data() + static_cast<std::size_t>(i) * dimension_,
            static_cast<std::size_t>(dimension_)};
  }

  int total_degree(int i) const { return degrees_[i]; }

  // Number of indices with total degree <= q, i.e. N_q. Requires q <= order.
  int count_up_to(int q) const;

  // Position of alpha in the set, computed combinatorially (no lookup
  // tables, so it also ranks sums of member indices as long as the total
  // degree stays <= order). Throws InputError when out of range.
  int rank(std::span<const int> alpha) const;
  bool contains(std::span<const int> alpha) const;

  // Rank of the elementwise sum alpha_i + alpha_j; the sum must stay within
  // the set. Used for moment-table joins E[p_i p_j] = m(alpha_i + alpha_j).
  int rank_of_sum(int i, int j) const;

  const std::vector<int>& flat() const { return flat_; }

private:
  int dimension_;
  int order_;
  std::vector<int> flat_;     // size() * dimension_, row-major
  std::vector<int> degrees_;  // total degree per index
};

MultiIndexSet build_index_set(int dimension, int order);

}  // namespace mixquad

#endif  // MIXQUAD_MULTI_INDEX_HPP
