#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mixquad/kernels.hpp"

using namespace mixquad::kernels;

namespace {

struct RandomData {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> col0;
  std::vector<double> col1;
  std::vector<double> col2;
};

RandomData make_data(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  RandomData d;
  for (std::size_t i = 0; i < n; ++i) {
    d.x.push_back(dist(gen));
    d.y.push_back(dist(gen));
    d.col0.push_back(dist(gen));
    d.col1.push_back(dist(gen));
    d.col2.push_back(dist(gen));
  }
  return d;
}

// Sizes cover empty input, sub-width tails, and multi-block runs.
const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 31, 64, 1000, 4097};

void check_pair(const Ops& reference, const Ops& candidate) {
  for (std::size_t n : kSizes) {
    RandomData d = make_data(n, static_cast<unsigned>(1234 + n));

    const double dot_ref = reference.dot(d.x.data(), d.y.data(), n);
    const double dot_cand = candidate.dot(d.x.data(), d.y.data(), n);
    CHECK(std::abs(dot_ref - dot_cand) <=
          1e-12 * (1.0 + std::abs(dot_ref) + static_cast<double>(n)));

    std::vector<double> y_ref = d.y;
    std::vector<double> y_cand = d.y;
    reference.axpy(0.731, d.x.data(), y_ref.data(), n);
    candidate.axpy(0.731, d.x.data(), y_cand.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(y_ref[i] - y_cand[i]) <= 1e-14 * (1.0 + std::abs(y_ref[i])));
    }

    const double* cols[3] = {d.col0.data(), d.col1.data(), d.col2.data()};
    const int exps[3] = {3, 0, 2};
    double s_ref = 0.0, s2_ref = 0.0, s_cand = 0.0, s2_cand = 0.0;
    reference.power_product_sums(cols, exps, 3, n, &s_ref, &s2_ref);
    candidate.power_product_sums(cols, exps, 3, n, &s_cand, &s2_cand);
    CHECK(std::abs(s_ref - s_cand) <= 1e-11 * (1.0 + std::abs(s_ref) + static_cast<double>(n)));
    CHECK(std::abs(s2_ref - s2_cand) <=
          1e-11 * (1.0 + std::abs(s2_ref) + static_cast<double>(n)));

    // Polynomial with 4 terms over 3 variables, degree <= 3.
    const int poly_exps[] = {0, 0, 0, 1, 0, 2, 3, 0, 0, 1, 1, 1};
    const double coeffs[] = {0.5, -1.25, 2.0, 0.125};
    std::vector<double> out_ref(n, 0.0), out_cand(n, 0.0);
    reference.poly_eval(cols, n, 3, poly_exps, 4, 3, coeffs, out_ref.data());
    candidate.poly_eval(cols, n, 3, poly_exps, 4, 3, coeffs, out_cand.data());
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(out_ref[i] - out_cand[i]) <= 1e-12 * (1.0 + std::abs(out_ref[i])));
    }
  }
}

}  // namespace

TEST_CASE("scalar kernels match straightforward math") {
  const Ops& ops = scalar_ops();
  const double x[] = {1.0, 2.0, 3.0};
  const double y[] = {4.0, 5.0, 6.0};
  CHECK(ops.dot(x, y, 3) == doctest::Approx(32.0));

  double acc[] = {1.0, 1.0, 1.0};
  ops.axpy(2.0, x, acc, 3);
  CHECK(acc[0] == doctest::Approx(3.0));
  CHECK(acc[2] == doctest::Approx(7.0));

  const double c0[] = {2.0, 3.0};
  const double c1[] = {1.0, -1.0};
  const double* cols[2] = {c0, c1};
  const int exps[2] = {2, 1};
  double s = 0.0, s2 = 0.0;
  ops.power_product_sums(cols, exps, 2, 2, &s, &s2);
  CHECK(s == doctest::Approx(4.0 - 9.0));
  CHECK(s2 == doctest::Approx(16.0 + 81.0));
}

TEST_CASE("active kernel set is equivalent to the scalar reference") {
  check_pair(scalar_ops(), active_ops());
}

TEST_CASE("avx2 kernels are equivalent to the scalar reference when available") {
  if (!avx2_available()) return;
  check_pair(scalar_ops(), avx2_ops());
}

TEST_CASE("neon kernels are equivalent to the scalar reference when available") {
  if (!neon_available()) return;
  check_pair(scalar_ops(), neon_ops());
}

TEST_CASE("dispatch reports a known implementation") {
  const std::string name = active_name();
  CHECK((name == "scalar" || name == "avx2" || name == "neon"));
}
