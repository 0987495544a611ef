#include "mixquad/multi_index.hpp"

#include <string>

#include "mixquad/errors.hpp"

namespace mixquad {

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::int64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
  }
  return result;
}

std::int64_t basis_count(int dimension, int order) {
  return binomial(order + dimension, dimension);
}

namespace {

void emit_degree(int remaining, int dims_left, std::vector<int>& scratch,
                 std::vector<int>& flat) {
  if (dims_left == 1) {
    scratch.push_back(remaining);
    flat.insert(flat.end(), scratch.begin(), scratch.end());
    scratch.pop_back();
    return;
  }
  for (int a = remaining; a >= 0; --a) {
    scratch.push_back(a);
    emit_degree(remaining - a, dims_left - 1, scratch, flat);
    scratch.pop_back();
  }
}

}  // namespace

MultiIndexSet::MultiIndexSet(int dimension, int order)
    : dimension_(dimension), order_(order) {
  if (dimension < 1) throw InputError("multi-index set needs dimension >= 1");
  if (order < 0) throw InputError("multi-index set needs order >= 0");
  const std::int64_t total = basis_count(dimension, order);
  flat_.reserve(static_cast<std::size_t>(total) * dimension);
  degrees_.reserve(static_cast<std::size_t>(total));
  std::vector<int> scratch;
  for (int degree = 0; degree <= order; ++degree) {
    emit_degree(degree, dimension, scratch, flat_);
    const auto added = binomial(degree + dimension - 1, dimension - 1);
    degrees_.insert(degrees_.end(), static_cast<std::size_t>(added), degree);
  }
}

int MultiIndexSet::count_up_to(int q) const {
  if (q < 0) return 0;
  if (q > order_) {
    throw InputError("count_up_to(" + std::to_string(q) + ") exceeds set order " +
                     std::to_string(order_));
  }
  return static_cast<int>(basis_count(dimension_, q));
}

bool MultiIndexSet::contains(std::span<const int> alpha) const {
  if (static_cast<int>(alpha.size()) != dimension_) return false;
  int degree = 0;
  for (int a : alpha) {
    if (a < 0) return false;
    degree += a;
  }
  return degree <= order_;
}

int MultiIndexSet::rank(std::span<const int> alpha) const {
  if (!contains(alpha)) {
    throw InputError("multi-index outside the set (dimension " +
                     std::to_string(dimension_) + ", order " + std::to_string(order_) + ")");
  }
  int degree = 0;
  for (int a : alpha) degree += a;
  // Everything of strictly smaller total degree comes first.
  std::int64_t position = basis_count(dimension_, degree - 1);
  // Within the degree class, count vectors that precede alpha: those whose
  // leading exponent is larger, recursing on ties.
  int remaining = degree;
  for (int j = 0; j < dimension_ - 1; ++j) {
    const int tail_dims = dimension_ - 1 - j;
    for (int v = remaining; v > alpha[j]; --v) {
      position += binomial(remaining - v + tail_dims - 1, tail_dims - 1);
    }
    remaining -= alpha[j];
  }
  return static_cast<int>(position);
}

int MultiIndexSet::rank_of_sum(int i, int j) const {
  std::vector<int> sum(dimension_);
  const auto a = (*this)[i];
  const auto b = (*this)[j];
  for (int t = 0; t < dimension_; ++t) sum[t] = a[t] + b[t];
  return rank(sum);
}

MultiIndexSet build_index_set(int dimension, int order) {
  return MultiIndexSet(dimension, order);
}

}  // namespace mixquad
