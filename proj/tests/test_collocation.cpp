#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "mixquad/collocation.hpp"

using namespace mixquad;
using namespace mixquad::testing;

namespace {

struct FixturePipeline {
  GaussianMixture density;
  BasisSet basis;
  QuadratureRule rule;
};

FixturePipeline make_pipeline(int order, double epsilon = 1e-8, std::uint64_t seed = 1) {
  GaussianMixture density = fixture_mixture();
  BasisSet basis = testing_basis(density, order);
  SolverConfig cfg;
  cfg.epsilon = epsilon;
  cfg.seed = seed;
  QuadratureRule rule = build_rule(basis, density, order, cfg);
  return {std::move(density), std::move(basis), std::move(rule)};
}

}  // namespace

TEST_CASE("fitting a constant recovers it in the leading coefficient") {
  const FixturePipeline pipe = make_pipeline(2);
  const Eigen::VectorXd outputs = Eigen::VectorXd::Constant(pipe.rule.size(), 5.0);
  const SurrogateModel model = fit(pipe.basis, pipe.rule, outputs);
  const double eps = pipe.rule.residual_l1;
  CHECK(std::abs(model.coeffs[0] - 5.0) <= 5.0 * eps);
  for (int j = 1; j < model.coeffs.size(); ++j) {
    CHECK(std::abs(model.coeffs[j]) <= 5.0 * eps);
  }
}

TEST_CASE("in-span expansions are recovered coefficient by coefficient") {
  const FixturePipeline pipe = make_pipeline(2);
  const int np = static_cast<int>(basis_count(2, 2));
  const Eigen::MatrixXd phi = basis_matrix(pipe.basis, pipe.rule.nodes, 2);

  // y = Psi_3 + 2 Psi_5 evaluated exactly at the nodes.
  const Eigen::VectorXd outputs = phi.row(2).transpose() + 2.0 * phi.row(4).transpose();
  const SurrogateModel model = fit(pipe.basis, pipe.rule, outputs);

  const ErrorCertificate cert =
      certificate(pipe.basis, pipe.rule, pipe.basis.moments());
  const double tol = np * cert.t_constant * pipe.rule.residual_l1 + 1e-9;
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(np);
  expected[2] = 1.0;
  expected[4] = 2.0;
  CHECK((model.coeffs - expected).cwiseAbs().maxCoeff() <= tol);
}

TEST_CASE("fit validates its inputs") {
  const FixturePipeline pipe = make_pipeline(1);
  CHECK_THROWS_AS((void)fit(pipe.basis, pipe.rule, Eigen::VectorXd::Ones(pipe.rule.size() + 2)),
                  InputError);
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(pipe.rule.size());
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)fit(pipe.basis, pipe.rule, bad), InputError);
}

TEST_CASE("surrogate evaluation") {
  const FixturePipeline pipe = make_pipeline(2);

  SUBCASE("a coefficient vector of e1*c is the constant c") {
    SurrogateModel model{pipe.basis, Eigen::VectorXd::Zero(basis_count(2, 2)), 2, 0};
    model.coeffs[0] = -3.25;
    for (double x : {-0.4, 0.0, 0.2}) {
      CHECK(evaluate(model, Eigen::Vector2d(x, -x)) == doctest::Approx(-3.25));
    }
  }
  SUBCASE("fit of an in-span polynomial evaluates back to it") {
    const Eigen::MatrixXd phi = basis_matrix(pipe.basis, pipe.rule.nodes, 2);
    Eigen::VectorXd truth = Eigen::VectorXd::Zero(basis_count(2, 2));
    truth << 0.3, -1.0, 0.5, 0.2, -0.7, 1.1;
    const Eigen::VectorXd outputs = phi.transpose().leftCols(truth.size()) * truth;
    const SurrogateModel model = fit(pipe.basis, pipe.rule, outputs);
    SurrogateModel reference{pipe.basis, truth, 2, 0};
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Vector2d point(0.2 * rng.normal(), 0.2 * rng.normal());
      const double got = evaluate(model, point);
      const double want = evaluate(reference, point);
      CHECK(got == doctest::Approx(want).epsilon(1e-6));
    }
  }
  SUBCASE("evaluation is linear in the coefficients") {
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(basis_count(2, 2));
    Eigen::VectorXd c2 = c1;
    c1[1] = 1.0;
    c2[3] = 1.0;
    const SurrogateModel m1{pipe.basis, c1, 2, 0};
    const SurrogateModel m2{pipe.basis, c2, 2, 0};
    const SurrogateModel sum{pipe.basis, 2.0 * c1 + 3.0 * c2, 2, 0};
    const Eigen::Vector2d point(0.1, -0.2);
    CHECK(evaluate(sum, point) ==
          doctest::Approx(2.0 * evaluate(m1, point) + 3.0 * evaluate(m2, point)));
  }
  SUBCASE("batch evaluation agrees with pointwise evaluation") {
    const Eigen::MatrixXd points = sample(pipe.density, 257, 3);
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(basis_count(2, 2));
    coeffs << 1.0, 0.5, -0.25, 0.1, 0.0, -0.05;
    const SurrogateModel model{pipe.basis, coeffs, 2, 0};
    const Eigen::VectorXd batch = evaluate_batch(model, points);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      CHECK(batch[i] ==
            doctest::Approx(evaluate(model, points.row(i).transpose())).epsilon(1e-12));
    }
  }
}

TEST_CASE("mean and variance come straight from the coefficients") {
  const FixturePipeline pipe = make_pipeline(2);
  const int np = static_cast<int>(basis_count(2, 2));

  SUBCASE("constant surrogate") {
    SurrogateModel model{pipe.basis, Eigen::VectorXd::Zero(np), 2, 0};
    model.coeffs[0] = 4.5;
    const MeanVariance mv = mean_variance(model);
    CHECK(mv.mean == 4.5);
    CHECK(mv.variance == 0.0);
  }
  SUBCASE("unit second coefficient") {
    SurrogateModel model{pipe.basis, Eigen::VectorXd::Zero(np), 2, 0};
    model.coeffs[1] = 1.0;
    const MeanVariance mv = mean_variance(model);
    CHECK(mv.mean == 0.0);
    CHECK(mv.variance == 1.0);
  }
}

TEST_CASE("surrogate variance matches Monte Carlo on the surrogate itself") {
  const FixturePipeline pipe = make_pipeline(3);
  Eigen::VectorXd outputs(pipe.rule.size());
  for (int k = 0; k < pipe.rule.size(); ++k) {
    outputs[k] = synthetic_response(pipe.rule.nodes(k, 0), pipe.rule.nodes(k, 1));
  }
  const SurrogateModel model = fit(pipe.basis, pipe.rule, outputs);
  const MeanVariance mv = mean_variance(model);

  const std::int64_t n = 1000000;
  const Eigen::MatrixXd points = sample(pipe.density, n, 12345);
  const Eigen::VectorXd values = evaluate_batch(model, points);
  const double mc_mean = values.mean();
  const Eigen::ArrayXd centered = values.array() - mc_mean;
  const double mc_var = centered.square().sum() / static_cast<double>(n - 1);
  const double m4 = centered.pow(4).sum() / static_cast<double>(n);
  const double se_mean = std::sqrt(mc_var / static_cast<double>(n));
  const double se_var = std::sqrt((m4 - mc_var * mc_var) / static_cast<double>(n));

  CHECK(std::abs(mv.mean - mc_mean) <= 5.0 * se_mean);
  CHECK(std::abs(mv.variance - mc_var) <= 5.0 * se_var);
  CHECK(std::abs(mv.variance - mc_var) <= 0.01 * mv.variance);
}

TEST_CASE("pdf estimation") {
  const FixturePipeline pipe = make_pipeline(2);
  const int np = static_cast<int>(basis_count(2, 2));

  SUBCASE("constant surrogate is a flagged single atom") {
    SurrogateModel model{pipe.basis, Eigen::VectorXd::Zero(np), 2, 0};
    model.coeffs[0] = 2.0;
    const PdfEstimate est = pdf_estimate(model, pipe.density, 1000, 4, 32);
    CHECK(est.degenerate);
    int occupied = 0;
    double mass = 0.0;
    for (int b = 0; b < est.bin_density.size(); ++b) {
      if (est.bin_density[b] > 0.0) {
        ++occupied;
        mass += est.bin_density[b] * (est.bin_edges[b + 1] - est.bin_edges[b]);
        CHECK(est.bin_edges[b] <= 2.0);
        CHECK(2.0 <= est.bin_edges[b + 1]);
      }
    }
    CHECK(occupied == 1);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("histogram integrates to one") {
    SurrogateModel model{pipe.basis, Eigen::VectorXd::Zero(np), 2, 0};
    model.coeffs[1] = 1.0;
    model.coeffs[3] = 0.25;
    const PdfEstimate est = pdf_estimate(model, pipe.density, 20000, 4, 48);
    double mass = 0.0;
    for (int b = 0; b < est.bin_density.size(); ++b) {
      mass += est.bin_density[b] * (est.bin_edges[b + 1] - est.bin_edges[b]);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(est.bandwidth > 0.0);
  }

  SUBCASE("standardized linear surrogate under a Gaussian pushes to a standard normal") {
    // d=1 standard normal, Psi_2 = x: the surrogate with coefficients
    // (0, 1, 0, ...) IS the standard normal variable. Kolmogorov-Smirnov
    // against the closed-form CDF at n = 1e6.
    const GaussianMixture normal = standard_normal_1d();
    const BasisSet basis = testing_basis(normal, 1);
    SurrogateModel model{basis, Eigen::VectorXd::Zero(2), 1, 0};
    model.coeffs[1] = 1.0;

    const std::int64_t n = 1000000;
    const Eigen::MatrixXd points = sample(normal, n, 99);
    Eigen::VectorXd values = evaluate_batch(model, points);
    std::sort(values.data(), values.data() + values.size());
    double ks = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double cdf = 0.5 * std::erfc(-values[i] / std::sqrt(2.0));
      const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
      const double lo = static_cast<double>(i) / static_cast<double>(n);
      ks = std::max(ks, std::max(std::abs(cdf - hi), std::abs(cdf - lo)));
    }
    CHECK(ks <= 0.01);
  }

  SUBCASE("input validation") {
    SurrogateModel model{pipe.basis, Eigen::VectorXd::Zero(np), 2, 0};
    CHECK_THROWS_AS((void)pdf_estimate(model, pipe.density, 50, 1, 16), InputError);
    CHECK_THROWS_AS((void)pdf_estimate(model, pipe.density, 1000, 1, 0), InputError);
  }
}

TEST_CASE("certificate") {
  SUBCASE("exact rule has zero deviation") {
    const GaussianMixture normal = standard_normal_1d();
    const BasisSet basis = testing_basis(normal, 1);
    QuadratureRule rule;
    rule.nodes.resize(2, 1);
    rule.nodes << 1.0, -1.0;
    rule.weights.resize(2);
    rule.weights << 0.5, 0.5;
    rule.order = 1;
    rule.residual_l1 = 0.0;
    const ErrorCertificate cert = certificate(basis, rule, basis.moments());
    CHECK(cert.gram_deviation == 0.0);
    CHECK(cert.bound == 0.0);
    CHECK(cert.t_constant >= 1.0);
  }
  SUBCASE("fixture rule at p=2 satisfies its bound") {
    const FixturePipeline pipe = make_pipeline(2);
    const ErrorCertificate cert =
        certificate(pipe.basis, pipe.rule, pipe.basis.moments());
    CHECK(cert.t_constant >= 1.0);
    CHECK(cert.epsilon == pipe.rule.residual_l1);
    CHECK(cert.bound == doctest::Approx(6.0 * cert.t_constant * cert.epsilon));
    CHECK(cert.gram_deviation <= cert.bound);
  }
  SUBCASE("insufficient moments are rejected") {
    const FixturePipeline pipe = make_pipeline(2);
    const MomentTable small = moment_table(pipe.density, 7);
    CHECK_THROWS_AS((void)certificate(pipe.basis, pipe.rule, small),
                    InsufficientMomentOrderError);
  }
}

TEST_CASE("p=2 surrogate mean of the synthetic response is close to truth") {
  const FixturePipeline pipe = make_pipeline(2);
  Eigen::VectorXd outputs(pipe.rule.size());
  for (int k = 0; k < pipe.rule.size(); ++k) {
    outputs[k] = synthetic_response(pipe.rule.nodes(k, 0), pipe.rule.nodes(k, 1));
  }
  const SurrogateModel model = fit(pipe.basis, pipe.rule, outputs);
  CHECK(std::abs(mean_variance(model).mean - kFixtureResponseMean) <= 1e-3);
}

TEST_CASE("pdf estimation is deterministic across chunked parallel sampling") {
  const FixturePipeline pipe = make_pipeline(1);
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(basis_count(2, 1));
  coeffs << 0.2, 1.0, -0.5;
  const SurrogateModel model{pipe.basis, coeffs, 1, 0};
  // n spans multiple sampling chunks, so the thread pool path is exercised.
  const std::int64_t n = 70000;
  const PdfEstimate a = pdf_estimate(model, pipe.density, n, 8, 40);
  const PdfEstimate b = pdf_estimate(model, pipe.density, n, 8, 40);
  CHECK((a.bin_density - b.bin_density).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.curve_density - b.curve_density).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.bandwidth == b.bandwidth);
}

TEST_CASE("projection is idempotent on in-span functions") {
  const FixturePipeline pipe = make_pipeline(2);
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(basis_count(2, 2));
  coeffs << 0.9, -0.6, 0.3, 0.05, -0.15, 0.4;
  const SurrogateModel model{pipe.basis, coeffs, 2, 0};

  Eigen::VectorXd outputs(pipe.rule.size());
  for (int k = 0; k < pipe.rule.size(); ++k) {
    outputs[k] = evaluate(model, pipe.rule.nodes.row(k).transpose());
  }
  const SurrogateModel refit = fit(pipe.basis, pipe.rule, outputs);
  const ErrorCertificate cert =
      certificate(pipe.basis, pipe.rule, pipe.basis.moments());
  const double tol =
      basis_count(2, 2) * cert.t_constant * pipe.rule.residual_l1 + 1e-9;
  CHECK((refit.coeffs - coeffs).cwiseAbs().maxCoeff() <= tol);
}
