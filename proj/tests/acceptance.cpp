// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "bistochastic/cli.hpp"
#include "bistochastic/embedding.hpp"
#include "bistochastic/sinkhorn.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace bistochastic;
using testing_support::max_abs;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Keeps the worst value seen for a quantity and whether it stayed in bounds.
struct Worst {
  double value = 0.0;
  void see(double v) {
    if (!(v <= value)) value = v;  // NaN sticks
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Instance {
  Eigen::MatrixXd points;
  Measure measure;
  FitResult result;
  double seconds = 0.0;
};

// m = 200, d = 5, n = 20, median bandwidth; even seeds use uniform mu.
const std::vector<Instance>& random_instances() {
  static const std::vector<Instance> instances = [] {
    std::vector<Instance> out;
    for (unsigned seed = 0; seed < 20; ++seed) {
      Eigen::MatrixXd x = testing_support::random_points(200, 5, 100 + seed);
      Measure mu = seed % 2 == 0 ? uniform_measure(200)
                                 : Measure(testing_support::random_weights(200, 500 + seed));
      FitConfig config;
      config.strategy = ReferenceStrategy::Uniform;
      config.reference_size = 20;
      config.seed = seed;
      const auto start = std::chrono::steady_clock::now();
      FitResult r = fit(PointSet(x), mu, config);
      bistochastic_residual(r.beta, r.weighted);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      out.push_back({std::move(x), std::move(mu), std::move(r), elapsed.count()});
    }
    return out;
  }();
  return instances;
}

Verdict bistochasticity() {
  Worst residual, seconds;
  for (const auto& inst : random_instances()) {
    residual.see(bistochastic_residual(inst.result.beta, inst.result.weighted));
    seconds.see(inst.seconds);
  }
  return {residual.value <= 1e-12 && seconds.value < 1.0,
          "max residual " + fmt(residual.value) + ", slowest fit " + fmt(seconds.value) + " s"};
}

Verdict fixed_point_and_bounds() {
  Worst fixed, below, above, lmax, angle;
  for (const auto& inst : random_instances()) {
    const Eigen::MatrixXd& a = inst.result.gram.values;
    const Eigen::VectorXd& omega = inst.result.densities.reference;
    fixed.see(max_abs(a * omega - omega));
    const Eigen::VectorXd all = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
    below.see(-all.minCoeff());
    above.see(all.maxCoeff() - 1.0);
    lmax.see(std::abs(inst.result.model.lambda_max - 1.0));
    const Eigen::VectorXd u = omega.normalized();
    const Eigen::VectorXd v = inst.result.model.eigenvectors.col(0);
    const double along = v.dot(u);
    angle.see(std::atan2((v - along * u).norm(), along));
  }
  const bool pass = fixed.value <= 1e-10 && below.value <= 1e-10 && above.value <= 1e-10 &&
                    lmax.value <= 1e-10 && angle.value < 1e-8;
  return {pass, "|A omega - omega| " + fmt(fixed.value) + ", min eig " + fmt(-below.value) +
                    ", max eig - 1 " + fmt(above.value) + ", |lambda_max - 1| " +
                    fmt(lmax.value) + ", angle " + fmt(angle.value) + " rad"};
}

Verdict eigen_equivalence() {
  Worst rel;
  bool counts_match = true;
  for (unsigned seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd x = testing_support::random_points(100, 5, 900 + seed);
    const Eigen::VectorXd mu = seed % 2 == 0 ? Eigen::VectorXd::Ones(100)
                                             : testing_support::random_weights(100, 950 + seed);
    const Eigen::MatrixXd y = x(oracle::farthest_point(x, 20), Eigen::all);
    const Eigen::MatrixXd alpha =
        oracle::gaussian(x, y, oracle::median_squared_distance(x, y));

    const auto dens = oracle::densities(alpha, mu);
    const Eigen::MatrixXd p = oracle::kernel(oracle::beta(alpha, dens));
    const Eigen::VectorXd dense = oracle::dense_operator_spectrum(p, dens.weighted).values;

    FitConfig config;
    config.strategy = ReferenceStrategy::FarthestPoint;
    config.reference_size = 20;
    const auto r = fit(PointSet(x), Measure(mu), config);
    const Eigen::VectorXd small =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r.gram.values).eigenvalues().reverse();

    const auto above = [](const Eigen::VectorXd& v) { return (v.array() > 1e-8).count(); };
    if (above(dense) != above(small)) counts_match = false;
    for (Index k = 0; k < std::min(above(dense), above(small)); ++k)
      rel.see(std::abs(dense[k] - small[k]) / std::abs(dense[k]));
  }
  return {counts_match && rel.value <= 1e-8,
          std::string(counts_match ? "multiplicities match" : "multiplicity mismatch") +
              ", max relative error " + fmt(rel.value)};
}

Verdict nystrom() {
  Worst round_trip, ortho;
  for (const auto& inst : random_instances()) {
    const auto& r = inst.result;
    const Eigen::MatrixXd v = restrict_eigenfunctions(r.model, r.eigenfunctions, r.beta, r.weighted);
    round_trip.see(max_abs(v - r.model.eigenvectors));
    const Eigen::MatrixXd g =
        r.eigenfunctions.transpose() * r.weighted.weights.asDiagonal() * r.eigenfunctions;
    ortho.see(max_abs(g - Eigen::MatrixXd::Identity(g.rows(), g.cols())));
  }
  return {round_trip.value <= 1e-8 && ortho.value <= 1e-8,
          "round trip " + fmt(round_trip.value) + ", orthonormality " + fmt(ortho.value)};
}

Verdict two_point() {
  const double a = std::exp(-1.0);
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  FitConfig config;
  config.epsilon = 1.0;
  const auto r = fit(PointSet(x), uniform_measure(2), config);

  const double lambda2 = (1 - a) * (1 - a) / ((1 + a) * (1 + a));
  const double diag = (1 + a * a) / ((1 + a) * (1 + a));
  const double off = 2 * a / ((1 + a) * (1 + a));
  Eigen::Matrix2d expected;
  expected << diag, off, off, diag;

  const double lambda_err =
      r.model.rank() == 2 ? std::abs(r.model.eigenvalues[1] - lambda2) : INFINITY;
  const double a_err = max_abs(r.gram.values - expected);
  return {lambda_err <= 1e-12 && a_err <= 1e-12,
          "lambda_2 = " + format_number(r.model.rank() == 2 ? r.model.eigenvalues[1] : NAN) +
              " (error " + fmt(lambda_err) + "), A entry error " + fmt(a_err)};
}

Verdict out_of_sample() {
  const auto& inst = random_instances().front();
  const auto& model = inst.result.model;
  const Index k = model.rank() - 1;
  const auto in_sample = diffusion_coordinates(model, inst.result.eigenfunctions, 1.0, k);
  const auto extended = extend_new_points(model, PointSet(inst.points), 1.0, k);
  const double err = extended.ok() ? max_abs(extended.embedding.coordinates - in_sample.coordinates)
                                   : INFINITY;
  return {err <= 1e-12, "m = " + std::to_string(inst.points.rows()) + ", K = " +
                            std::to_string(k) + ", max entry difference " + fmt(err)};
}

Verdict constant_eigenfunction() {
  Worst cv;
  for (const auto& inst : random_instances()) {
    const Eigen::VectorXd psi = inst.result.eigenfunctions.col(0);
    const double mean = psi.mean();
    const double sd = std::sqrt((psi.array() - mean).square().mean());
    cv.see(sd / std::abs(mean));
  }
  return {cv.value <= 1e-8, "max coefficient of variation " + fmt(cv.value)};
}

Verdict scale_invariance() {
  Worst a_err, l_err, v_err, e_err;
  double ratio = NAN;
  bool ranks_match = true;
  for (const auto& inst : random_instances()) {
    const AffinityMatrix& alpha = inst.result.affinity;
    const AffinityMatrix scaled(3.0 * alpha.values(), alpha.provenance());
    const Eigen::MatrixXd& y = inst.result.model.context.reference_points;
    const auto base = fit_affinity(alpha, inst.measure, y, FitConfig{});
    const auto big = fit_affinity(scaled, inst.measure, y, FitConfig{});

    a_err.see(max_abs(big.gram.values - base.gram.values));
    if (big.model.rank() != base.model.rank()) {
      ranks_match = false;
      continue;
    }
    l_err.see(max_abs(big.model.eigenvalues - base.model.eigenvalues));
    v_err.see(max_abs(big.model.eigenvectors - base.model.eigenvectors));

    const Index k = base.model.rank() - 1;
    const auto e0 = diffusion_coordinates(base.model, base.eigenfunctions, 1.0, k);
    const auto e1 = diffusion_coordinates(big.model, big.eigenfunctions, 1.0, k);
    e_err.see(max_abs(e1.coordinates - e0.coordinates));
    if (std::isnan(ratio)) {
      Index row, col;
      e0.coordinates.cwiseAbs().maxCoeff(&row, &col);
      ratio = e1.coordinates(row, col) / e0.coordinates(row, col);
    }
  }
  const bool pass = ranks_match && a_err.value <= 1e-10 && l_err.value <= 1e-10 &&
                    v_err.value <= 1e-10 && e_err.value <= 1e-10;
  return {pass, std::string(ranks_match ? "" : "rank changed; ") + "A " + fmt(a_err.value) +
                    ", lambda " + fmt(l_err.value) + ", V " + fmt(v_err.value) +
                    ", embeddings " + fmt(e_err.value) + " (scaled/original coordinate ratio " +
                    fmt(ratio) + ")"};
}

Verdict one_pass_vs_iterative() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.1, 1.1);
  Eigen::MatrixXd k(100, 100);
  for (Index i = 0; i < 100; ++i)
    for (Index j = 0; j < 100; ++j) k(i, j) = u(rng);
  k = (0.5 * (k + k.transpose())).eval();
  const auto sk = sinkhorn_balance(SymmetricKernel(k), 1e-8, 10000);
  bool monotone = true;
  for (std::size_t i = 1; i < sk.residuals.size(); ++i)
    if (sk.residuals[i] > sk.residuals[i - 1]) monotone = false;
  const double check = oracle::max_row_col_deviation(sk.balanced);

  const auto dir = testing_support::scratch_dir("acceptance_compare");
  {
    std::ofstream out(dir / "X.csv");
    write_matrix(out, testing_support::random_points(100, 3, 31));
  }
  const std::string points = (dir / "X.csv").string();
  const char* argv[] = {"bistochastic", "compare-sinkhorn", "--points", points.c_str()};
  std::ostringstream out, err;
  const int code = cli::run(4, argv, out, err);
  const std::string text = out.str();
  const auto t1 = text.find("[target 1: weighted measure");
  const auto t2 = text.find("[target 2: counting measure]");
  const auto zero = text.find("iterations: 0", t1 == std::string::npos ? 0 : t1);
  double construction = INFINITY;
  const auto res = text.find("(dense): ");
  if (res != std::string::npos) construction = std::stod(text.substr(res + 9));
  const bool labeled = code == 0 && t1 != std::string::npos && t2 != std::string::npos &&
                       t1 < t2 && zero != std::string::npos && zero < t2;

  const bool pass = sk.converged && sk.residual <= 1e-8 && check <= 1e-8 && monotone &&
                    construction <= 1e-12 && labeled;
  return {pass, "Sinkhorn " + std::to_string(sk.iterations) + " iterations to " +
                    fmt(sk.residual) + (monotone ? " (non-increasing)" : " (NOT monotone)") +
                    ", construction residual " + fmt(construction) +
                    (labeled ? ", output labeled" : ", output labels missing")};
}

Verdict degenerate() {
  const Index m = 12, n = 4;
  const auto ones = fit_affinity(external_affinity(Eigen::MatrixXd::Ones(m, n), "ones"),
                                 uniform_measure(m), Eigen::MatrixXd(), FitConfig{});
  const double a_err =
      max_abs(ones.gram.values - Eigen::MatrixXd::Constant(n, n, 1.0 / double(n)));
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(n);
  expected[0] = 1.0;
  const Eigen::VectorXd all =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ones.gram.values).eigenvalues().reverse();
  const double eig_err = max_abs(all - expected);

  // two tight clusters and a reference point halfway between them
  Eigen::MatrixXd x = testing_support::random_points(40, 2, 3) * 0.1;
  x.bottomRows(20).array() += 50.0;
  Eigen::MatrixXd y(2, 2);
  y.row(0) = x.row(0);
  y.row(1) << 25.0, 25.0;
  const auto report = validate_assumptions(
      gaussian_affinity(PointSet(x), ReferenceSet(y), 1e-9), uniform_measure(40));
  const auto& cols = report.reference_density.offending;
  const bool column_ok = !report.passed() && !report.reference_density.passed &&
                         cols.size() == 1 && cols[0] == 1;

  const bool pass = a_err <= 1e-12 && eig_err <= 1e-12 && ones.model.rank() == 1 && column_ok;
  return {pass, "A error " + fmt(a_err) + ", eigenvalue error " + fmt(eig_err) + ", rank " +
                    std::to_string(ones.model.rank()) + ", underflow " +
                    (column_ok ? "flags column 1" : "did not flag column 1")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"bi-stochasticity", bistochasticity},
      {"fixed point and spectrum bounds", fixed_point_and_bounds},
      {"eigen-equivalence with the dense operator", eigen_equivalence},
      {"Nystrom round trip and orthonormality", nystrom},
      {"two-point closed form", two_point},
      {"out-of-sample consistency", out_of_sample},
      {"constant first eigenfunction", constant_eigenfunction},
      {"scale invariance", scale_invariance},
      {"one-pass construction vs Sinkhorn", one_pass_vs_iterative},
      {"degenerate handling", degenerate},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("criterion %zu: %s  %s  [%s]\n", i + 1, v.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), v.detail.c_str());
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failures);
  return failures == 0 ? 0 : 1;
}
