#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bistochastic/embedding.hpp"
#include "bistochastic/errors.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numeric>

using namespace bistochastic;
using testing_support::max_abs;

namespace {

const double kA = std::exp(-1.0);
const double kLambda2 = (1 - kA) * (1 - kA) / ((1 + kA) * (1 + kA));

Eigen::MatrixXd two_points() {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  return x;
}

FitConfig uniform_config(Index n, std::uint64_t seed) {
  FitConfig config;
  config.strategy = ReferenceStrategy::Uniform;
  config.reference_size = n;
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("fit two-point case end to end") {
  FitConfig config;
  config.epsilon = 1.0;
  const auto result = fit(PointSet(two_points()), uniform_measure(2), config);
  REQUIRE(result.model.rank() == 2);
  CHECK(std::abs(result.model.eigenvalues[0] - 1.0) <= 1e-12);
  CHECK(std::abs(result.model.eigenvalues[1] - kLambda2) <= 1e-12);
  CHECK(result.model.context.m == 2);
  CHECK(result.model.context.n == 2);
  CHECK(result.model.context.d == 1);
  CHECK(result.model.context.provenance.epsilon == 1.0);
}

TEST_CASE("fit with X = Y satisfies the spectral invariants") {
  const PointSet x(testing_support::random_points(60, 3, 5));
  const auto result = fit(x, uniform_measure(60), FitConfig{});
  const auto& model = result.model;
  CHECK(model.context.n == 60);
  CHECK(std::abs(model.eigenvalues[0] - 1.0) <= 1e-10);
  CHECK(bistochastic_residual(result.beta, result.weighted) <= 1e-12);
  const Eigen::VectorXd& omega = result.densities.reference;
  CHECK(max_abs(result.gram.values * omega - omega) <= 1e-10);
  CHECK(max_abs(model.eigenvectors.transpose() * model.eigenvectors -
                Eigen::MatrixXd::Identity(model.rank(), model.rank())) <= 1e-10);
}

TEST_CASE("raising the cutoff restores orthonormality on rank-deficient instances") {
  // With X = Y the spectrum of A runs down to rounding level. Psi inherits an
  // error of order eps / lambda_k, so the retained rank decides how well
  // L2(w)-orthonormality holds.
  const PointSet x(testing_support::random_points(60, 3, 5));
  FitConfig config;
  config.cutoff = 1e-6;
  const auto result = fit(x, uniform_measure(60), config);
  const Index r = result.model.rank();
  const Eigen::MatrixXd& psi = result.eigenfunctions;
  CHECK(r < 60);
  CHECK(max_abs(psi.transpose() * result.weighted.weights.asDiagonal() * psi -
                Eigen::MatrixXd::Identity(r, r)) <= 1e-8);
}

TEST_CASE("fit reports validation failures with stage and index") {
  SUBCASE("underflowing reference column") {
    Eigen::MatrixXd x(3, 1), y(4, 1);
    x << 0.0, 1.0, 2.0;
    y << 0.0, 1.0, 2.0, 1000.0;
    const auto alpha = gaussian_affinity(PointSet(x), ReferenceSet(y), 1.0);
    try {
      fit_affinity(alpha, uniform_measure(3), y, FitConfig{});
      FAIL("expected validation failure");
    } catch (const ValidationFailure& e) {
      CHECK(e.stage() == "validate");
      CHECK(e.report().reference_density.offending == std::vector<Index>{3});
      CHECK(std::string(e.what()).find("columns 3") != std::string::npos);
    }
  }
  SUBCASE("tiny epsilon leaves points without references") {
    FitConfig config = uniform_config(2, 1);
    config.epsilon = 1e-9;
    try {
      fit(PointSet(testing_support::random_points(20, 2, 1)), uniform_measure(20), config);
      FAIL("expected validation failure");
    } catch (const ValidationFailure& e) {
      CHECK(e.stage() == "validate");
      CHECK(e.report().data_density.offending.size() == 18);
    }
  }
  SUBCASE("bad reference size carries its stage") {
    try {
      fit(PointSet(two_points()), uniform_measure(2), uniform_config(5, 0));
      FAIL("expected argument error");
    } catch (const ArgumentError& e) {
      CHECK(e.stage() == "select_reference");
    }
  }
}

TEST_CASE("diffusion_coordinates") {
  const PointSet x(testing_support::random_points(50, 3, 9));
  const auto result = fit(x, uniform_measure(50), uniform_config(12, 9));
  const auto& model = result.model;
  const Index r = model.rank();
  REQUIRE(r >= 4);

  const auto raw = diffusion_coordinates(model, result.eigenfunctions, 0.0, 3);
  CHECK(raw.coordinates == result.eigenfunctions.middleCols(1, 3));

  const auto full = diffusion_coordinates(model, result.eigenfunctions, 1.0, r - 1);
  CHECK(full.coordinates.rows() == 50);
  CHECK(full.coordinates.cols() == r - 1);
  CHECK(full.coordinates.allFinite());
  for (Index k = 0; k < r - 1; ++k)
    CHECK(max_abs(full.coordinates.col(k) -
                  model.eigenvalues[k + 1] * result.eigenfunctions.col(k + 1)) <= 1e-15);

  CHECK_THROWS_AS(diffusion_coordinates(model, result.eigenfunctions, 1.0, r), ArgumentError);
  CHECK_THROWS_AS(diffusion_coordinates(model, result.eigenfunctions, 1.0, 0), ArgumentError);
  CHECK_THROWS_AS(diffusion_coordinates(model, result.eigenfunctions, -1.0, 1), ArgumentError);
}

TEST_CASE("two-point coordinates decay like lambda2^t") {
  FitConfig config;
  config.epsilon = 1.0;
  const auto result = fit(PointSet(two_points()), uniform_measure(2), config);
  const auto base = diffusion_coordinates(result.model, result.eigenfunctions, 0.0, 1);
  for (double t : {1.0, 5.0, 20.0}) {
    const auto at_t = diffusion_coordinates(result.model, result.eigenfunctions, t, 1);
    for (Index x = 0; x < 2; ++x)
      CHECK(std::abs(at_t.coordinates(x, 0) / base.coordinates(x, 0) - std::pow(kLambda2, t)) <=
            1e-12 * std::pow(kLambda2, t));
  }
}

TEST_CASE("extending the training set reproduces the in-sample embedding") {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const PointSet x(testing_support::random_points(120, 4, seed));
    const Measure mu(testing_support::random_weights(120, seed));
    const auto result = fit(x, mu, uniform_config(15, seed));
    const Index k = std::min<Index>(4, result.model.rank() - 1);
    const auto in_sample = diffusion_coordinates(result.model, result.eigenfunctions, 1.0, k);
    const auto extended = extend_new_points(result.model, x, 1.0, k);
    CHECK(extended.ok());
    CHECK(max_abs(extended.embedding.coordinates - in_sample.coordinates) <= 1e-12);
  }
}

TEST_CASE("a reference point extends to the constant first eigenfunction") {
  const PointSet x(testing_support::random_points(80, 3, 21));
  const auto result = fit(x, uniform_measure(80), uniform_config(10, 21));
  const Eigen::MatrixXd y0 = result.model.context.reference_points.topRows(1);
  const Eigen::MatrixXd psi = evaluate_eigenfunctions(result.model, y0, nullptr);
  CHECK(psi.allFinite());
  const double expected = 1.0 / result.model.context.reference_density.norm();
  CHECK(std::abs(psi(0, 0) - expected) <= 1e-10 * expected);
  const auto emb = extend_new_points(result.model, PointSet(y0), 1.0, 2);
  CHECK(emb.embedding.coordinates.allFinite());
}

TEST_CASE("far-away new points are reported individually") {
  Eigen::MatrixXd x = testing_support::random_points(30, 2, 4);
  FitConfig config;
  config.epsilon = 0.5;
  const auto result = fit(PointSet(x), uniform_measure(30), config);

  Eigen::MatrixXd fresh(3, 2);
  fresh.row(0) = x.row(3);
  fresh.row(1) << 1e3, 1e3;
  fresh.row(2) = x.row(7);
  const auto out = extend_new_points(result.model, PointSet(fresh), 1.0, 2);
  REQUIRE(out.failures.size() == 1);
  CHECK(out.failures[0].index == 1);
  CHECK(out.failures[0].data_density == 0.0);
  CHECK(std::isnan(out.embedding.coordinates(1, 0)));
  CHECK(out.embedding.coordinates.row(0).allFinite());
  CHECK(out.embedding.coordinates.row(2).allFinite());
}

TEST_CASE("external-affinity models refuse extension") {
  Eigen::MatrixXd alpha = Eigen::MatrixXd::Constant(5, 3, 0.5);
  alpha.diagonal().setOnes();
  const auto result = fit_affinity(external_affinity(alpha, "abc"), uniform_measure(5),
                                   Eigen::MatrixXd(), FitConfig{});
  CHECK_THROWS_AS(extend_new_points(result.model, PointSet(Eigen::MatrixXd::Zero(1, 2)), 1.0, 1),
                  ArgumentError);
}

TEST_CASE("new-point dimension must match") {
  const auto result = fit(PointSet(testing_support::random_points(10, 3, 2)), uniform_measure(10),
                          FitConfig{});
  CHECK_THROWS_AS(extend_new_points(result.model, PointSet(Eigen::MatrixXd::Zero(2, 2)), 1.0, 1),
                  ArgumentError);
}

TEST_CASE("permuting new points permutes their rows") {
  const PointSet x(testing_support::random_points(70, 3, 13));
  const auto result = fit(x, uniform_measure(70), uniform_config(9, 13));
  const Eigen::MatrixXd fresh = testing_support::random_points(25, 3, 14);
  std::vector<Index> perm(25);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[3], perm[17]);
  Eigen::MatrixXd shuffled(25, 3);
  for (Index i = 0; i < 25; ++i) shuffled.row(i) = fresh.row(perm[i]);

  const auto a = extend_new_points(result.model, PointSet(fresh), 2.0, 3);
  const auto b = extend_new_points(result.model, PointSet(shuffled), 2.0, 3);
  for (Index i = 0; i < 25; ++i)
    CHECK(b.embedding.coordinates.row(i) == a.embedding.coordinates.row(perm[i]));
}

TEST_CASE("scaling alpha by c scales eigenfunctions by 1/c") {
  // A, the eigenvalues and V are unchanged, but psi is normalized in
  // L2(Omega^2 mu) and Omega^2 mu grows by c^2.
  const PointSet x(testing_support::random_points(60, 3, 31));
  const auto base = fit(x, uniform_measure(60), uniform_config(10, 31));
  const double c = 3.0;
  const auto scaled = fit_affinity(external_affinity(c * base.affinity.values(), "x3"),
                                   uniform_measure(60), Eigen::MatrixXd(), FitConfig{});
  REQUIRE(scaled.model.rank() == base.model.rank());
  const auto e1 = diffusion_coordinates(base.model, base.eigenfunctions, 1.0, 3);
  const auto e2 = diffusion_coordinates(scaled.model, scaled.eigenfunctions, 1.0, 3);
  CHECK(max_abs(c * e2.coordinates - e1.coordinates) <= 1e-10 * max_abs(e1.coordinates));
}
