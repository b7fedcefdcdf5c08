#pragma once

#include "bistochastic/affinity.hpp"
#include "bistochastic/data_model.hpp"
#include "bistochastic/errors.hpp"
#include "bistochastic/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace bistochastic {

struct FitConfig {
  ReferenceStrategy strategy = ReferenceStrategy::All;
  Index reference_size = 0;
  std::uint64_t seed = 0;
  std::optional<double> epsilon;  // nullopt: median_bandwidth
  double cutoff = kDefaultCutoff;
  double tolerance = kDefaultDensityTolerance;
  double min_density = kDefaultMinDensity;
};

/// Everything the pipeline computed along the way. Only `model` is needed
/// downstream; the rest is kept for diagnostics.
struct FitResult {
  SpectralModel model;
  Eigen::MatrixXd eigenfunctions;  // m x r, Psi
  AffinityMatrix affinity;
  ValidationReport validation;
  DensityPair densities;
  WeightedMeasure weighted;
  NormalizedAffinity beta;
  ReferenceGram gram;
};

/// Raised when validation fails inside fit(); carries the full report.
class ValidationFailure : public Error {
 public:
  explicit ValidationFailure(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

/// select_reference -> gaussian_affinity -> validate -> densities -> beta ->
/// gram -> eigendecompose -> extend. Errors carry the failing stage name.
FitResult fit(const PointSet& points, const Measure& measure, const FitConfig& config);

/// The same pipeline starting from a ready affinity (Gaussian or external).
/// `reference` may be empty for external affinities.
FitResult fit_affinity(const AffinityMatrix& affinity, const Measure& measure,
                       const Eigen::MatrixXd& reference, const FitConfig& config);

/// Column k holds lambda_{k+2}^t psi_{k+2}(x) (1-based eigenpair numbering),
/// i.e. the constant pair is dropped.
struct DiffusionEmbedding {
  Eigen::MatrixXd coordinates;  // rows x K
  double time = 0.0;
  Eigen::VectorXd eigenvalues;  // the K eigenvalues used
};

DiffusionEmbedding diffusion_coordinates(const SpectralModel& model,
                                         const Eigen::MatrixXd& eigenfunctions,
                                         double time, Index components);

struct PointFailure {
  Index index;
  double data_density;
};

/// Coordinates of new points; rows listed in `failures` are NaN.
struct OutOfSampleEmbedding {
  DiffusionEmbedding embedding;
  std::vector<PointFailure> failures;

  bool ok() const noexcept { return failures.empty(); }
};

/// Eigenfunctions of the fitted operator evaluated at arbitrary points, with
/// omega and the eigenpairs frozen from the fit. Rows whose Omega is not
/// above `tolerance` are NaN and listed in `failures`.
Eigen::MatrixXd evaluate_eigenfunctions(const SpectralModel& model,
                                        const Eigen::MatrixXd& points,
                                        std::vector<PointFailure>* failures,
                                        double tolerance = kDefaultDensityTolerance);

OutOfSampleEmbedding extend_new_points(const SpectralModel& model,
                                       const PointSet& new_points, double time,
                                       Index components,
                                       double tolerance = kDefaultDensityTolerance);

}  // namespace bistochastic
