#include "bistochastic/affinity.hpp"

#include "bistochastic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>

namespace bistochastic {

namespace {

std::string join_indices(const std::vector<Index>& indices, std::size_t limit = 10) {
  std::ostringstream out;
  for (std::size_t k = 0; k < indices.size() && k < limit; ++k)
    out << (k ? ", " : "") << indices[k];
  if (indices.size() > limit) out << ", ... (" << indices.size() << " total)";
  return out.str();
}

bool density_ok(double value, double tol) {
  return std::isfinite(value) && value > tol;
}

// omega_i^2 = sum_x alpha(x, y_i) Omega(x) mu(x), summed in row order.
Eigen::VectorXd reference_density_squared(const Eigen::MatrixXd& alpha,
                                          const Eigen::VectorXd& omega_x,
                                          const Eigen::VectorXd& mu) {
  Eigen::VectorXd out(alpha.cols());
  for (Index i = 0; i < alpha.cols(); ++i) {
    double sum = 0.0;
    for (Index x = 0; x < alpha.rows(); ++x) sum += alpha(x, i) * omega_x[x] * mu[x];
    out[i] = sum;
  }
  return out;
}

void check_shapes(const AffinityMatrix& affinity, const Measure& measure) {
  if (affinity.rows() != measure.size())
    throw ArgumentError("affinity has " + std::to_string(affinity.rows()) +
                        " rows but the measure has " +
                        std::to_string(measure.size()) + " weights");
}

}  // namespace

std::string AffinityProvenance::describe() const {
  if (builder == Builder::Gaussian) return "gaussian(epsilon=" + format_number(epsilon) + ")";
  return "external(digest=" + digest + ")";
}

AffinityMatrix::AffinityMatrix(Eigen::MatrixXd values, AffinityProvenance provenance)
    : values_(std::move(values)), provenance_(std::move(provenance)) {
  if (values_.rows() < 1 || values_.cols() < 1)
    throw ArgumentError("affinity matrix must be non-empty");
  for (Index j = 0; j < values_.cols(); ++j)
    for (Index i = 0; i < values_.rows(); ++i)
      if (!std::isfinite(values_(i, j)) || values_(i, j) < 0.0)
        throw ArgumentError("affinity entry (" + std::to_string(i) + ", " +
                            std::to_string(j) + ") must be finite and >= 0");
  if (provenance_.builder == AffinityProvenance::Builder::Gaussian &&
      !(provenance_.epsilon > 0.0))
    throw ArgumentError("gaussian provenance needs a positive epsilon");
}

Eigen::MatrixXd gaussian_affinity_values(const Eigen::MatrixXd& points,
                                         const Eigen::MatrixXd& reference,
                                         double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw ArgumentError("epsilon must be positive and finite, got " +
                        format_number(epsilon));
  if (points.cols() != reference.cols())
    throw ArgumentError("points have dimension " + std::to_string(points.cols()) +
                        " but reference points have " +
                        std::to_string(reference.cols()));
  Eigen::MatrixXd alpha(points.rows(), reference.rows());
  for (Index j = 0; j < reference.rows(); ++j) {
    for (Index i = 0; i < points.rows(); ++i) {
      double d2 = 0.0;
      for (Index k = 0; k < points.cols(); ++k) {
        const double diff = points(i, k) - reference(j, k);
        d2 += diff * diff;
      }
      alpha(i, j) = std::exp(-d2 / epsilon);
    }
  }
  return alpha;
}

AffinityMatrix gaussian_affinity(const PointSet& points,
                                 const ReferenceSet& reference, double epsilon) {
  AffinityProvenance provenance;
  provenance.builder = AffinityProvenance::Builder::Gaussian;
  provenance.epsilon = epsilon;
  return AffinityMatrix(
      gaussian_affinity_values(points.coordinates(), reference.coordinates(), epsilon),
      provenance);
}

double median_bandwidth(const PointSet& points, const ReferenceSet& reference) {
  if (points.dimension() != reference.dimension())
    throw ArgumentError("point and reference dimensions differ");
  const auto& x = points.coordinates();
  const auto& y = reference.coordinates();
  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(x.rows() * y.rows()));
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < y.rows(); ++j) d2.push_back((x.row(i) - y.row(j)).squaredNorm());

  const auto n = d2.size();
  const auto mid = d2.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(d2.begin(), mid, d2.end());
  double median = *mid;
  if (n % 2 == 0) median = 0.5 * (median + *std::max_element(d2.begin(), mid));

  if (!(median > 0.0)) {
    if (*std::max_element(d2.begin(), d2.end()) == 0.0)
      throw DegenerateDataError(
          "all point-to-reference distances are zero; no bandwidth can be derived");
    // More than half the pairs coincide; fall back to the smallest positive
    // distance so the Gaussian still separates distinct points.
    double smallest = std::numeric_limits<double>::infinity();
    for (double v : d2)
      if (v > 0.0) smallest = std::min(smallest, v);
    median = smallest;
  }
  return median;
}

std::string content_digest(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

AffinityMatrix external_affinity(Eigen::MatrixXd values, std::string digest) {
  AffinityProvenance provenance;
  provenance.builder = AffinityProvenance::Builder::External;
  provenance.digest = std::move(digest);
  return AffinityMatrix(std::move(values), std::move(provenance));
}

Eigen::VectorXd data_density(const Eigen::MatrixXd& affinity) {
  Eigen::VectorXd omega(affinity.rows());
  for (Index x = 0; x < affinity.rows(); ++x) {
    double sum = 0.0;
    for (Index i = 0; i < affinity.cols(); ++i) sum += affinity(x, i);
    omega[x] = sum;
  }
  return omega;
}

std::pair<DensityPair, WeightedMeasure> compute_densities(
    const AffinityMatrix& affinity, const Measure& measure, double tol) {
  check_shapes(affinity, measure);
  const auto& alpha = affinity.values();
  const auto& mu = measure.weights();

  DensityPair densities;
  densities.data = data_density(alpha);
  for (Index x = 0; x < alpha.rows(); ++x)
    if (!density_ok(densities.data[x], tol))
      throw AssumptionViolation(
          AssumptionViolation::Density::Data, static_cast<std::size_t>(x),
          "data density at row " + std::to_string(x) + " is " +
              format_number(densities.data[x]) + "; point has no affinity to the reference set");

  densities.reference =
      reference_density_squared(alpha, densities.data, mu).array().sqrt();
  for (Index i = 0; i < alpha.cols(); ++i)
    if (!density_ok(densities.reference[i], tol))
      throw AssumptionViolation(
          AssumptionViolation::Density::Reference, static_cast<std::size_t>(i),
          "reference density at column " + std::to_string(i) + " is " +
              format_number(densities.reference[i]) +
              "; reference point has no affinity to the data");

  WeightedMeasure weighted{densities.data.array().square() * mu.array()};
  for (Index x = 0; x < weighted.weights.size(); ++x)
    if (!std::isfinite(weighted.weights[x]) || !(weighted.weights[x] > 0.0))
      throw NumericalError("weighted measure at row " + std::to_string(x) +
                           " is not finite and positive");
  return {std::move(densities), std::move(weighted)};
}

ValidationReport validate_assumptions(const AffinityMatrix& affinity,
                                      const Measure& measure, double tol,
                                      double min_density) {
  check_shapes(affinity, measure);
  const auto& alpha = affinity.values();
  const auto& mu = measure.weights();

  ValidationReport report;
  report.finite_affinity.name = "alpha(., y_i) square integrable";
  report.data_density.name = "0 < Omega(x) < inf";
  report.reference_density.name = "0 < omega(y_i) < inf";

  for (Index i = 0; i < alpha.cols(); ++i) {
    double norm2 = 0.0;
    for (Index x = 0; x < alpha.rows(); ++x) norm2 += alpha(x, i) * alpha(x, i) * mu[x];
    if (!std::isfinite(norm2)) report.finite_affinity.offending.push_back(i);
  }

  const Eigen::VectorXd omega_x = data_density(alpha);
  for (Index x = 0; x < omega_x.size(); ++x)
    if (!density_ok(omega_x[x], tol)) report.data_density.offending.push_back(x);

  const Eigen::VectorXd omega_y =
      reference_density_squared(alpha, omega_x, mu).array().sqrt();
  for (Index i = 0; i < omega_y.size(); ++i)
    if (!density_ok(omega_y[i], tol)) report.reference_density.offending.push_back(i);

  report.finite_affinity.passed = report.finite_affinity.offending.empty();
  report.data_density.passed = report.data_density.offending.empty();
  report.reference_density.passed = report.reference_density.offending.empty();
  report.min_data_density = omega_x.minCoeff();
  report.min_reference_density = omega_y.minCoeff();

  if (!report.data_density.passed)
    report.suggestions.push_back(
        "some points have no affinity to any reference point: increase epsilon "
        "or enlarge the reference set");
  if (!report.reference_density.passed)
    report.suggestions.push_back(
        "some reference points have no affinity to the data: increase epsilon "
        "or move those reference points closer to the data");
  if (!report.finite_affinity.passed)
    report.suggestions.push_back("affinity columns overflow; rescale the affinity");

  if (report.data_density.passed && report.min_data_density < min_density)
    report.warnings.push_back("minimum Omega " + format_number(report.min_data_density) +
                              " is below " + format_number(min_density) +
                              "; conditioning may be poor");
  if (report.reference_density.passed && report.min_reference_density < min_density)
    report.warnings.push_back("minimum omega " +
                              format_number(report.min_reference_density) +
                              " is below " + format_number(min_density) +
                              "; conditioning may be poor");
  return report;
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  const auto line = [&](const char* tag, const Condition& c, const char* unit) {
    out << tag << ' ' << c.name << ": " << (c.passed ? "pass" : "FAIL");
    if (!c.passed) out << " (" << unit << ' ' << join_indices(c.offending) << ')';
    out << '\n';
  };
  line("(2)", finite_affinity, "columns");
  line("(3)", data_density, "rows");
  line("(4)", reference_density, "columns");
  out << "min Omega = " << format_number(min_data_density) << '\n';
  out << "min omega = " << format_number(min_reference_density) << '\n';
  for (const auto& w : warnings) out << "warning: " << w << '\n';
  for (const auto& s : suggestions) out << "suggestion: " << s << '\n';
  out << "result: " << (passed() ? "pass" : "FAIL") << '\n';
  return out.str();
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& affinity,
                               const Eigen::VectorXd& data_density,
                               const Eigen::VectorXd& reference_density) {
  if (affinity.rows() != data_density.size() ||
      affinity.cols() != reference_density.size())
    throw ArgumentError("affinity is " + std::to_string(affinity.rows()) + "x" +
                        std::to_string(affinity.cols()) + " but densities have lengths " +
                        std::to_string(data_density.size()) + " and " +
                        std::to_string(reference_density.size()));
  Eigen::MatrixXd beta(affinity.rows(), affinity.cols());
  for (Index i = 0; i < affinity.cols(); ++i)
    for (Index x = 0; x < affinity.rows(); ++x)
      beta(x, i) = affinity(x, i) / (data_density[x] * reference_density[i]);
  return beta;
}

NormalizedAffinity normalize_affinity(const AffinityMatrix& affinity,
                                      const DensityPair& densities) {
  return {normalize_rows(affinity.values(), densities.data, densities.reference)};
}

}  // namespace bistochastic
