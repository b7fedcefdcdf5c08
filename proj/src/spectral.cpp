#include "bistochastic/spectral.hpp"

#include "bistochastic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bistochastic {

namespace {

void require_finite(const Eigen::MatrixXd& values, const char* what) {
  if (!values.allFinite()) throw NumericalError(std::string(what) + " has non-finite entries");
}

void check_beta_weights(const NormalizedAffinity& beta, const WeightedMeasure& weighted) {
  if (beta.values.rows() != weighted.weights.size())
    throw ArgumentError("normalized affinity has " + std::to_string(beta.values.rows()) +
                        " rows but the weighted measure has " +
                        std::to_string(weighted.weights.size()) + " entries");
}

Eigen::VectorXd inverse_sqrt_eigenvalues(const SpectralModel& model) {
  Eigen::VectorXd out(model.rank());
  for (Index k = 0; k < model.rank(); ++k) {
    if (!(model.eigenvalues[k] > 0.0))
      throw ArgumentError("retained eigenvalue " + std::to_string(k) + " is " +
                          format_number(model.eigenvalues[k]) +
                          "; raise the spectral cutoff");
    out[k] = 1.0 / std::sqrt(model.eigenvalues[k]);
  }
  return out;
}

}  // namespace

ReferenceGram gram(const NormalizedAffinity& beta, const WeightedMeasure& weighted) {
  check_beta_weights(beta, weighted);
  const Eigen::MatrixXd weighted_beta = weighted.weights.asDiagonal() * beta.values;
  Eigen::MatrixXd a = beta.values.transpose() * weighted_beta;
  a = 0.5 * (a + a.transpose()).eval();
  require_finite(a, "reference Gram");
  return {std::move(a)};
}

void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  if (v.size() == 0) return;
  const double largest = v.cwiseAbs().maxCoeff();
  // Components within rounding of the maximum count as tied; the first one
  // decides, which keeps the convention stable under tiny perturbations.
  const double threshold = largest * (1.0 - 1e-9);
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= threshold) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

SpectralModel eigendecompose(const ReferenceGram& gram, double cutoff,
                             ModelContext context) {
  const auto& a = gram.values;
  if (a.rows() != a.cols() || a.rows() == 0)
    throw ArgumentError("reference Gram must be a non-empty square matrix");
  if (!(cutoff >= 0.0) || !std::isfinite(cutoff))
    throw ArgumentError("spectral cutoff must be a finite non-negative number");
  require_finite(a, "reference Gram");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric eigensolver did not converge");

  Eigen::VectorXd values = solver.eigenvalues();
  for (Index k = 0; k < values.size(); ++k) {
    if (values[k] < -kEigenClampWindow)
      throw NumericalError("reference Gram has eigenvalue " + format_number(values[k]) +
                           "; it is not positive semidefinite");
    if (values[k] < 0.0) values[k] = 0.0;
  }

  // Descending; equal eigenvalues keep the solver's order.
  std::vector<Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index l, Index r) { return values[l] > values[r]; });

  SpectralModel model;
  model.cutoff = cutoff;
  model.lambda_max = values[order.front()];
  if (std::abs(model.lambda_max - 1.0) > kLambdaMaxWarning)
    model.warnings.push_back("largest eigenvalue " + format_number(model.lambda_max) +
                             " deviates from 1");

  const double threshold = cutoff * model.lambda_max;
  Index retained = 0;
  while (retained < values.size() && values[order[retained]] > threshold) ++retained;

  model.eigenvalues.resize(retained);
  model.eigenvectors.resize(a.rows(), retained);
  for (Index k = 0; k < retained; ++k) {
    model.eigenvalues[k] = values[order[k]];
    model.eigenvectors.col(k) = solver.eigenvectors().col(order[k]);
    normalize_sign(model.eigenvectors.col(k));
  }

  context.n = a.rows();
  model.context = std::move(context);
  return model;
}

Eigen::MatrixXd extend_eigenfunctions(const SpectralModel& model,
                                      const NormalizedAffinity& beta) {
  if (beta.values.cols() != model.eigenvectors.rows())
    throw ArgumentError("normalized affinity has " + std::to_string(beta.values.cols()) +
                        " columns but the model has " +
                        std::to_string(model.eigenvectors.rows()) + " reference points");
  const Eigen::VectorXd scale = inverse_sqrt_eigenvalues(model);
  return (beta.values * model.eigenvectors) * scale.asDiagonal();
}

Eigen::MatrixXd restrict_eigenfunctions(const SpectralModel& model,
                                        const Eigen::MatrixXd& eigenfunctions,
                                        const NormalizedAffinity& beta,
                                        const WeightedMeasure& weighted) {
  check_beta_weights(beta, weighted);
  if (eigenfunctions.rows() != beta.values.rows() ||
      eigenfunctions.cols() != model.rank())
    throw ArgumentError("eigenfunction table must be m x r");
  if (beta.values.cols() != model.eigenvectors.rows())
    throw ArgumentError("normalized affinity column count does not match the model");
  const Eigen::VectorXd scale = inverse_sqrt_eigenvalues(model);
  const Eigen::MatrixXd weighted_psi = weighted.weights.asDiagonal() * eigenfunctions;
  return (beta.values.transpose() * weighted_psi) * scale.asDiagonal();
}

Eigen::VectorXd apply_operator(const NormalizedAffinity& beta,
                               const WeightedMeasure& weighted,
                               const Eigen::VectorXd& f) {
  check_beta_weights(beta, weighted);
  if (f.size() != beta.values.rows())
    throw ArgumentError("function has " + std::to_string(f.size()) +
                        " values but the point set has " +
                        std::to_string(beta.values.rows()));
  if (!f.allFinite()) throw ArgumentError("function values must be finite");
  const Eigen::VectorXd projected =
      beta.values.transpose() * weighted.weights.cwiseProduct(f);
  return beta.values * projected;
}

KernelMatrix materialize_kernel(const NormalizedAffinity& beta, Index max_m, bool force) {
  const Index m = beta.values.rows();
  if (m > max_m && !force)
    throw ArgumentError("refusing to materialize a " + std::to_string(m) + "x" +
                        std::to_string(m) + " kernel (limit " + std::to_string(max_m) +
                        "); pass the force flag to override");
  Eigen::MatrixXd p = beta.values * beta.values.transpose();
  p = 0.5 * (p + p.transpose()).eval();
  return {std::move(p)};
}

double bistochastic_residual(const NormalizedAffinity& beta,
                             const WeightedMeasure& weighted) {
  check_beta_weights(beta, weighted);
  const Eigen::VectorXd column_mass = beta.values.transpose() * weighted.weights;
  const Eigen::VectorXd row_sums = beta.values * column_mass;
  return (row_sums.array() - 1.0).abs().maxCoeff();
}

}  // namespace bistochastic
