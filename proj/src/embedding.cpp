#include "bistochastic/embedding.hpp"

#include <cmath>
#include <limits>

namespace bistochastic {

namespace {

template <class F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (Error& e) {
    if (e.stage().empty()) e.set_stage(stage);
    throw;
  }
}

}  // namespace

ValidationFailure::ValidationFailure(ValidationReport report)
    : Error(ErrorKind::Validation, "affinity validation failed\n" + report.summary()),
      report_(std::move(report)) {}

FitResult fit_affinity(const AffinityMatrix& affinity, const Measure& measure,
                       const Eigen::MatrixXd& reference, const FitConfig& config) {
  ValidationReport report = staged("validate", [&] {
    auto r = validate_assumptions(affinity, measure, config.tolerance, config.min_density);
    if (!r.passed()) throw ValidationFailure(r);
    return r;
  });

  auto [densities, weighted] = staged(
      "densities", [&] { return compute_densities(affinity, measure, config.tolerance); });
  NormalizedAffinity beta =
      staged("normalize", [&] { return normalize_affinity(affinity, densities); });
  ReferenceGram a = staged("gram", [&] { return gram(beta, weighted); });

  ModelContext context;
  context.reference_points = reference;
  context.reference_density = densities.reference;
  context.provenance = affinity.provenance();
  context.m = affinity.rows();
  context.d = reference.cols();
  SpectralModel model = staged(
      "eigendecompose", [&] { return eigendecompose(a, config.cutoff, std::move(context)); });
  Eigen::MatrixXd psi = staged("extend", [&] { return extend_eigenfunctions(model, beta); });

  return FitResult{std::move(model),     std::move(psi),       affinity,
                   std::move(report),    std::move(densities), std::move(weighted),
                   std::move(beta),      std::move(a)};
}

FitResult fit(const PointSet& points, const Measure& measure, const FitConfig& config) {
  if (measure.size() != points.size())
    throw ArgumentError("measure has " + std::to_string(measure.size()) +
                        " weights but the point set has " + std::to_string(points.size()) +
                        " points");
  ReferenceSet reference = staged("select_reference", [&] {
    return select_reference(points, config.strategy, config.reference_size, config.seed);
  });
  const double epsilon = staged("bandwidth", [&] {
    return config.epsilon ? *config.epsilon : median_bandwidth(points, reference);
  });
  AffinityMatrix affinity =
      staged("affinity", [&] { return gaussian_affinity(points, reference, epsilon); });
  return fit_affinity(affinity, measure, reference.coordinates(), config);
}

DiffusionEmbedding diffusion_coordinates(const SpectralModel& model,
                                         const Eigen::MatrixXd& eigenfunctions,
                                         double time, Index components) {
  const Index r = model.rank();
  if (eigenfunctions.cols() != r)
    throw ArgumentError("eigenfunction table has " + std::to_string(eigenfunctions.cols()) +
                        " columns but the model retains " + std::to_string(r));
  if (components < 1 || components > r - 1)
    throw ArgumentError("embedding dimension " + std::to_string(components) +
                        " must lie in [1, r - 1] with r = " + std::to_string(r));
  if (!(time >= 0.0) || !std::isfinite(time))
    throw ArgumentError("diffusion time must be finite and >= 0");

  DiffusionEmbedding out;
  out.time = time;
  out.eigenvalues = model.eigenvalues.segment(1, components);
  out.coordinates.resize(eigenfunctions.rows(), components);
  for (Index k = 0; k < components; ++k)
    out.coordinates.col(k) =
        std::pow(model.eigenvalues[k + 1], time) * eigenfunctions.col(k + 1);
  return out;
}

Eigen::MatrixXd evaluate_eigenfunctions(const SpectralModel& model,
                                        const Eigen::MatrixXd& points,
                                        std::vector<PointFailure>* failures,
                                        double tolerance) {
  const auto& ctx = model.context;
  if (!ctx.provenance.computable() || ctx.reference_points.size() == 0)
    throw ArgumentError("model was fitted on an external affinity (" +
                        ctx.provenance.describe() +
                        "); it cannot be evaluated at new points");
  if (points.cols() != ctx.reference_points.cols())
    throw ArgumentError("new points have dimension " + std::to_string(points.cols()) +
                        " but the model expects " +
                        std::to_string(ctx.reference_points.cols()));

  const Eigen::MatrixXd alpha =
      gaussian_affinity_values(points, ctx.reference_points, ctx.provenance.epsilon);
  const Eigen::VectorXd omega_x = data_density(alpha);
  NormalizedAffinity beta{normalize_rows(alpha, omega_x, ctx.reference_density)};
  Eigen::MatrixXd psi = extend_eigenfunctions(model, beta);

  for (Index x = 0; x < omega_x.size(); ++x) {
    if (std::isfinite(omega_x[x]) && omega_x[x] > tolerance) continue;
    psi.row(x).setConstant(std::numeric_limits<double>::quiet_NaN());
    if (failures) failures->push_back({x, omega_x[x]});
  }
  return psi;
}

OutOfSampleEmbedding extend_new_points(const SpectralModel& model,
                                       const PointSet& new_points, double time,
                                       Index components, double tolerance) {
  OutOfSampleEmbedding out;
  const Eigen::MatrixXd psi =
      evaluate_eigenfunctions(model, new_points.coordinates(), &out.failures, tolerance);
  out.embedding = diffusion_coordinates(model, psi, time, components);
  return out;
}

}  // namespace bistochastic
