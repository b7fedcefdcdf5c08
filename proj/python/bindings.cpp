#include "bistochastic/affinity.hpp"
#include "bistochastic/data_model.hpp"
#include "bistochastic/embedding.hpp"
#include "bistochastic/errors.hpp"
#include "bistochastic/model_io.hpp"
#include "bistochastic/sinkhorn.hpp"
#include "bistochastic/spectral.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace bistochastic;

namespace {

// Raw arrays coming from Python carry no builder, so they are wrapped as
// external affinities; fit() keeps the Gaussian provenance it builds itself.
AffinityMatrix wrap_affinity(const Eigen::MatrixXd& alpha) {
  return external_affinity(alpha, "python");
}

Measure measure_or_uniform(const std::optional<Eigen::VectorXd>& weights, Index m) {
  return weights ? Measure(*weights) : uniform_measure(m);
}

py::dict report_to_dict(const ValidationReport& report) {
  const auto condition = [](const ValidationReport::Condition& c) {
    py::dict d;
    d["name"] = c.name;
    d["passed"] = c.passed;
    d["offending"] = c.offending;
    return d;
  };
  py::dict d;
  d["passed"] = report.passed();
  d["finite_affinity"] = condition(report.finite_affinity);
  d["data_density"] = condition(report.data_density);
  d["reference_density"] = condition(report.reference_density);
  d["min_data_density"] = report.min_data_density;
  d["min_reference_density"] = report.min_reference_density;
  d["warnings"] = report.warnings;
  d["suggestions"] = report.suggestions;
  d["summary"] = report.summary();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bi-stochastic kernels from asymmetric reference-set affinities";

  static py::exception<Error> base_error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ArgumentError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      py::set_error(base_error, e.what());
    }
  });

  m.def("uniform_measure",
        [](Index size) -> Eigen::VectorXd { return uniform_measure(size).weights(); },
        py::arg("m"));

  m.def(
      "select_reference",
      [](const Eigen::MatrixXd& points, const std::string& strategy, Index size,
         std::uint64_t seed) {
        const ReferenceSet ref = select_reference(
            PointSet(points), parse_reference_strategy(strategy), size, seed);
        return py::make_tuple(ref.coordinates(), ref.source_indices().value());
      },
      py::arg("points"), py::arg("strategy") = "all", py::arg("size") = 0,
      py::arg("seed") = 0);

  m.def(
      "gaussian_affinity",
      [](const Eigen::MatrixXd& points, const Eigen::MatrixXd& reference, double epsilon) {
        return gaussian_affinity(PointSet(points), ReferenceSet(reference), epsilon).values();
      },
      py::arg("points"), py::arg("reference"), py::arg("epsilon"));

  m.def(
      "median_bandwidth",
      [](const Eigen::MatrixXd& points, const Eigen::MatrixXd& reference) {
        return median_bandwidth(PointSet(points), ReferenceSet(reference));
      },
      py::arg("points"), py::arg("reference"));

  m.def(
      "compute_densities",
      [](const Eigen::MatrixXd& alpha, const Eigen::VectorXd& weights, double tol) {
        auto [densities, weighted] = compute_densities(wrap_affinity(alpha), Measure(weights), tol);
        return py::make_tuple(densities.data, densities.reference, weighted.weights);
      },
      py::arg("alpha"), py::arg("weights"), py::arg("tol") = kDefaultDensityTolerance,
      "Returns (Omega, omega, w).");

  m.def(
      "validate_assumptions",
      [](const Eigen::MatrixXd& alpha, const Eigen::VectorXd& weights, double tol,
         double min_density) {
        return report_to_dict(
            validate_assumptions(wrap_affinity(alpha), Measure(weights), tol, min_density));
      },
      py::arg("alpha"), py::arg("weights"), py::arg("tol") = kDefaultDensityTolerance,
      py::arg("min_density") = kDefaultMinDensity);

  m.def(
      "normalize_affinity",
      [](const Eigen::MatrixXd& alpha, const Eigen::VectorXd& data_density,
         const Eigen::VectorXd& reference_density) {
        return normalize_rows(alpha, data_density, reference_density);
      },
      py::arg("alpha"), py::arg("data_density"), py::arg("reference_density"));

  m.def(
      "gram",
      [](const Eigen::MatrixXd& beta, const Eigen::VectorXd& w) {
        return gram({beta}, {w}).values;
      },
      py::arg("beta"), py::arg("w"));

  py::class_<SpectralModel>(m, "SpectralModel")
      .def_readonly("eigenvalues", &SpectralModel::eigenvalues)
      .def_readonly("eigenvectors", &SpectralModel::eigenvectors)
      .def_readonly("cutoff", &SpectralModel::cutoff)
      .def_readonly("lambda_max", &SpectralModel::lambda_max)
      .def_readonly("warnings", &SpectralModel::warnings)
      .def_property_readonly("rank", &SpectralModel::rank)
      .def_property_readonly("reference_density",
                             [](const SpectralModel& s) { return s.context.reference_density; })
      .def_property_readonly("reference_points",
                             [](const SpectralModel& s) { return s.context.reference_points; })
      .def_property_readonly("epsilon",
                             [](const SpectralModel& s) { return s.context.provenance.epsilon; })
      .def(
          "save",
          [](const SpectralModel& s, const std::filesystem::path& dir, Index components,
             double time) { save_model(dir, s, components, time); },
          py::arg("directory"), py::arg("components"), py::arg("time"))
      .def_static(
          "load", [](const std::filesystem::path& dir) { return load_model(dir).model; },
          py::arg("directory"));

  m.def(
      "eigendecompose",
      [](const Eigen::MatrixXd& a, double cutoff) { return eigendecompose({a}, cutoff); },
      py::arg("gram"), py::arg("cutoff") = kDefaultCutoff);

  m.def(
      "extend_eigenfunctions",
      [](const SpectralModel& model, const Eigen::MatrixXd& beta) {
        return extend_eigenfunctions(model, {beta});
      },
      py::arg("model"), py::arg("beta"));

  m.def(
      "restrict_eigenfunctions",
      [](const SpectralModel& model, const Eigen::MatrixXd& psi, const Eigen::MatrixXd& beta,
         const Eigen::VectorXd& w) { return restrict_eigenfunctions(model, psi, {beta}, {w}); },
      py::arg("model"), py::arg("eigenfunctions"), py::arg("beta"), py::arg("w"));

  m.def(
      "apply_operator",
      [](const Eigen::MatrixXd& beta, const Eigen::VectorXd& w, const Eigen::VectorXd& f) {
        return apply_operator({beta}, {w}, f);
      },
      py::arg("beta"), py::arg("w"), py::arg("f"));

  m.def(
      "materialize_kernel",
      [](const Eigen::MatrixXd& beta, Index max_m, bool force) {
        return materialize_kernel({beta}, max_m, force).values;
      },
      py::arg("beta"), py::arg("max_m") = kDefaultMaxDense, py::arg("force") = false);

  m.def(
      "bistochastic_residual",
      [](const Eigen::MatrixXd& beta, const Eigen::VectorXd& w) {
        return bistochastic_residual({beta}, {w});
      },
      py::arg("beta"), py::arg("w"));

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("model", &FitResult::model)
      .def_readonly("eigenfunctions", &FitResult::eigenfunctions)
      .def_property_readonly("alpha", [](const FitResult& r) { return r.affinity.values(); })
      .def_property_readonly("data_density", [](const FitResult& r) { return r.densities.data; })
      .def_property_readonly("reference_density",
                             [](const FitResult& r) { return r.densities.reference; })
      .def_property_readonly("w", [](const FitResult& r) { return r.weighted.weights; })
      .def_property_readonly("beta", [](const FitResult& r) { return r.beta.values; })
      .def_property_readonly("gram", [](const FitResult& r) { return r.gram.values; });

  m.def(
      "fit",
      [](const Eigen::MatrixXd& points, std::optional<Eigen::VectorXd> weights,
         const std::string& strategy, Index reference_size, std::uint64_t seed,
         std::optional<double> epsilon, double cutoff) {
        FitConfig config;
        config.strategy = parse_reference_strategy(strategy);
        config.reference_size = reference_size;
        config.seed = seed;
        config.epsilon = epsilon;
        config.cutoff = cutoff;
        const PointSet x(points);
        return fit(x, measure_or_uniform(weights, x.size()), config);
      },
      py::arg("points"), py::arg("weights") = py::none(), py::arg("strategy") = "all",
      py::arg("reference_size") = 0, py::arg("seed") = 0, py::arg("epsilon") = py::none(),
      py::arg("cutoff") = kDefaultCutoff);

  m.def(
      "diffusion_coordinates",
      [](const SpectralModel& model, const Eigen::MatrixXd& psi, double time,
         Index components) {
        return diffusion_coordinates(model, psi, time, components).coordinates;
      },
      py::arg("model"), py::arg("eigenfunctions"), py::arg("time"), py::arg("components"));

  m.def(
      "extend_new_points",
      [](const SpectralModel& model, const Eigen::MatrixXd& points, double time,
         Index components) {
        const auto result = extend_new_points(model, PointSet(points), time, components);
        std::vector<Index> failed;
        for (const auto& f : result.failures) failed.push_back(f.index);
        return py::make_tuple(result.embedding.coordinates, failed);
      },
      py::arg("model"), py::arg("points"), py::arg("time"), py::arg("components"),
      "Returns (coordinates, indices of points with no reference affinity).");

  m.def(
      "sinkhorn_balance",
      [](const Eigen::MatrixXd& kernel, double tol, int max_iter) {
        const auto r = sinkhorn_balance(SymmetricKernel(kernel), tol, max_iter);
        py::dict d;
        d["scaling"] = r.scaling;
        d["balanced"] = r.balanced;
        d["iterations"] = r.iterations;
        d["residual"] = r.residual;
        d["residuals"] = r.residuals;
        d["converged"] = r.converged;
        return d;
      },
      py::arg("kernel"), py::arg("tol") = 1e-8, py::arg("max_iter") = 10000);

  m.def("stochastic_residual", &stochastic_residual, py::arg("matrix"));
}
