#pragma once

#include "bistochastic/data_model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace bistochastic {

/// Strict positivity guard for the densities (denormal floor).
inline constexpr double kDefaultDensityTolerance = 1e-300;
/// Densities below this still pass validation but are flagged.
inline constexpr double kDefaultMinDensity = 1e-12;

/// How an affinity matrix was produced. Only computable builders can be
/// re-evaluated at new points.
struct AffinityProvenance {
  enum class Builder { Gaussian, External };

  Builder builder = Builder::Gaussian;
  double epsilon = 0.0;  // Gaussian bandwidth, squared-distance units
  std::string digest;    // External: content digest of the source file

  bool computable() const noexcept { return builder == Builder::Gaussian; }
  std::string describe() const;
};

/// alpha(x, y_i): m x n, every entry finite and >= 0.
class AffinityMatrix {
 public:
  AffinityMatrix(Eigen::MatrixXd values, AffinityProvenance provenance);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const AffinityProvenance& provenance() const noexcept { return provenance_; }
  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }

 private:
  Eigen::MatrixXd values_;
  AffinityProvenance provenance_;
};

/// Omega (per data point, row sums of alpha) and omega (per reference point).
struct DensityPair {
  Eigen::VectorXd data;       // Omega(x)
  Eigen::VectorXd reference;  // omega(y_i)
};

/// w(x) = Omega(x)^2 mu(x); the measure under which p is bi-stochastic.
struct WeightedMeasure {
  Eigen::VectorXd weights;
};

/// beta(x, y_i) = alpha(x, y_i) / (Omega(x) omega(y_i)).
struct NormalizedAffinity {
  Eigen::MatrixXd values;
};

/// Outcome of the positivity/finiteness checks on alpha and its densities.
struct ValidationReport {
  struct Condition {
    std::string name;
    bool passed = true;
    std::vector<Index> offending;
  };

  Condition finite_affinity;     // every alpha entry finite and >= 0
  Condition data_density;        // tol < Omega(x) < inf
  Condition reference_density;   // tol < omega(y_i) < inf
  double min_data_density = 0.0;
  double min_reference_density = 0.0;
  std::vector<std::string> warnings;
  std::vector<std::string> suggestions;

  bool passed() const noexcept {
    return finite_affinity.passed && data_density.passed &&
           reference_density.passed;
  }
  std::string summary() const;
};

/// alpha(x, y_i) = exp(-|x - y_i|^2 / epsilon).
AffinityMatrix gaussian_affinity(const PointSet& points,
                                 const ReferenceSet& reference, double epsilon);

/// Same as above for a raw m x d coordinate block (used for new points).
Eigen::MatrixXd gaussian_affinity_values(const Eigen::MatrixXd& points,
                                         const Eigen::MatrixXd& reference,
                                         double epsilon);

/// Median of all m*n squared distances between X and Y (mean of the two
/// middle values for an even count).
double median_bandwidth(const PointSet& points, const ReferenceSet& reference);

/// Wraps a user-supplied affinity grid. Out-of-sample extension is not
/// possible for such models.
AffinityMatrix external_affinity(Eigen::MatrixXd values, std::string digest);

/// Hex FNV-1a 64 digest of a byte sequence; identifies external files.
std::string content_digest(std::string_view bytes);

/// Row sums in index order, so Omega is bit-reproducible.
Eigen::VectorXd data_density(const Eigen::MatrixXd& affinity);

/// Throws AssumptionViolation naming the first row/column whose density is
/// non-finite or <= tol.
std::pair<DensityPair, WeightedMeasure> compute_densities(
    const AffinityMatrix& affinity, const Measure& measure,
    double tol = kDefaultDensityTolerance);

/// Never throws on failed conditions; callers decide what to do with them.
ValidationReport validate_assumptions(const AffinityMatrix& affinity,
                                      const Measure& measure,
                                      double tol = kDefaultDensityTolerance,
                                      double min_density = kDefaultMinDensity);

NormalizedAffinity normalize_affinity(const AffinityMatrix& affinity,
                                      const DensityPair& densities);

/// beta rows for arbitrary points given their alpha rows and a frozen omega.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& affinity,
                               const Eigen::VectorXd& data_density,
                               const Eigen::VectorXd& reference_density);

}  // namespace bistochastic
