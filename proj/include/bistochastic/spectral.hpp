#pragma once

#include "bistochastic/affinity.hpp"
#include "bistochastic/data_model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace bistochastic {

/// Eigenvalues in [-kEigenClampWindow, 0) are rounding noise and clamp to 0.
inline constexpr double kEigenClampWindow = 1e-10;
/// Retain eigenpairs with lambda > cutoff * lambda_max.
inline constexpr double kDefaultCutoff = 1e-12;
/// lambda_max further than this from 1 is recorded as a model warning.
inline constexpr double kLambdaMaxWarning = 1e-8;
inline constexpr Index kDefaultMaxDense = 2000;

/// A[i, j] = sum_x beta(x, y_i) beta(x, y_j) w(x); exactly symmetric.
struct ReferenceGram {
  Eigen::MatrixXd values;
};

/// Dense m x m kernel p = beta beta^T. Only built on request.
struct KernelMatrix {
  Eigen::MatrixXd values;
};

/// What a model must remember to extend eigenfunctions to new points.
struct ModelContext {
  Eigen::MatrixXd reference_points;   // n x d; empty for external affinities
  Eigen::VectorXd reference_density;  // omega, frozen at fit time
  AffinityProvenance provenance;
  Index m = 0;
  Index n = 0;
  Index d = 0;
};

/// Retained spectrum of A, sorted descending, plus the fit-time context.
struct SpectralModel {
  Eigen::VectorXd eigenvalues;   // length r
  Eigen::MatrixXd eigenvectors;  // n x r, orthonormal columns
  double cutoff = kDefaultCutoff;
  double lambda_max = 0.0;
  std::vector<std::string> warnings;
  ModelContext context;

  Index rank() const noexcept { return eigenvalues.size(); }
};

ReferenceGram gram(const NormalizedAffinity& beta, const WeightedMeasure& weighted);

/// Full symmetric eigensolve of A. Each eigenvector is sign-normalized so that
/// its first largest-magnitude component is positive. Throws NumericalError
/// if any eigenvalue is below -kEigenClampWindow.
SpectralModel eigendecompose(const ReferenceGram& gram,
                             double cutoff = kDefaultCutoff,
                             ModelContext context = {});

/// Flips `v` so that its first component of largest magnitude is positive.
void normalize_sign(Eigen::Ref<Eigen::VectorXd> v);

/// Psi = beta V Lambda^{-1/2}: eigenfunctions of P from eigenvectors of A.
Eigen::MatrixXd extend_eigenfunctions(const SpectralModel& model,
                                      const NormalizedAffinity& beta);

/// V = beta^T diag(w) Psi Lambda^{-1/2}: the inverse direction.
Eigen::MatrixXd restrict_eigenfunctions(const SpectralModel& model,
                                        const Eigen::MatrixXd& eigenfunctions,
                                        const NormalizedAffinity& beta,
                                        const WeightedMeasure& weighted);

/// (Pf)(x) = sum_x' p(x, x') f(x') w(x'), evaluated as beta (beta^T (w o f))
/// without forming p.
Eigen::VectorXd apply_operator(const NormalizedAffinity& beta,
                               const WeightedMeasure& weighted,
                               const Eigen::VectorXd& f);

/// Refuses m > max_m unless `force` is set.
KernelMatrix materialize_kernel(const NormalizedAffinity& beta,
                                Index max_m = kDefaultMaxDense, bool force = false);

/// max_x |sum_i beta(x, y_i) (beta^T w)_i - 1|.
double bistochastic_residual(const NormalizedAffinity& beta,
                             const WeightedMeasure& weighted);

}  // namespace bistochastic
