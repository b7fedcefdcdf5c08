#include "bistochastic/cli.hpp"

#include "bistochastic/affinity.hpp"
#include "bistochastic/data_model.hpp"
#include "bistochastic/embedding.hpp"
#include "bistochastic/errors.hpp"
#include "bistochastic/model_io.hpp"
#include "bistochastic/sinkhorn.hpp"
#include "bistochastic/spectral.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace bistochastic::cli {

namespace {

struct InputOptions {
  std::string points;
  std::string delimiter = ",";
  bool skip_header = false;
  std::string measure;
  std::string affinity;
  std::string ref_strategy = "all";
  Index ref_size = 0;
  std::uint64_t seed = 0;
  std::string ref_points;
  std::string epsilon = "median";
  double tol = kDefaultDensityTolerance;
  double min_density = kDefaultMinDensity;
  double cutoff = kDefaultCutoff;
};

struct EmbedOptions {
  Index components = 2;
  double time = 1.0;
  std::string out;
  std::string model_dir;
  bool header = false;
};

struct ExtendOptions {
  std::string model_dir;
  std::string points_new;
  std::string out;
  std::optional<Index> components;
  std::optional<double> time;
  std::string delimiter = ",";
  bool skip_header = false;
  bool header = false;
  double tol = kDefaultDensityTolerance;
};

struct DenseOptions {
  Index max_m = kDefaultMaxDense;
  bool force_dense = false;
  double sinkhorn_tol = 1e-8;
  int max_iter = 10000;
};

/// What every subcommand builds before doing its own work.
struct Prepared {
  AffinityMatrix affinity;
  Measure measure;
  Eigen::MatrixXd reference;
};

char delimiter_char(const std::string& text) {
  if (text == "\\t" || text == "tab") return '\t';
  if (text.size() != 1) throw ArgumentError("delimiter must be a single character");
  return text.front();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <class Loader>
auto load_file(const std::string& path, Loader&& loader) {
  const std::string bytes = read_file(path);
  std::istringstream in(bytes);
  try {
    return loader(in);
  } catch (IngestionError& e) {
    e.set_stage(path);
    throw;
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

void add_input_options(CLI::App* cmd, InputOptions& opt) {
  auto* points = cmd->add_option("--points", opt.points, "data points, one row per point");
  auto* affinity = cmd->add_option("--affinity", opt.affinity,
                                   "precomputed m x n affinity grid (replaces --points)");
  points->excludes(affinity);
  cmd->add_option("--delimiter", opt.delimiter, "field delimiter")->capture_default_str();
  cmd->add_flag("--skip-header", opt.skip_header, "skip the first line of input files");
  cmd->add_option("--measure", opt.measure, "point weights, one per line (default uniform)");
  auto* strategy = cmd->add_option("--ref-strategy", opt.ref_strategy, "all | uniform | fps")
                       ->check(CLI::IsMember({"all", "uniform", "fps"}))
                       ->capture_default_str();
  cmd->add_option("--ref-size", opt.ref_size, "reference set size for uniform/fps");
  cmd->add_option("--seed", opt.seed, "seed for uniform reference sampling");
  auto* ref_points =
      cmd->add_option("--ref-points", opt.ref_points, "explicit reference point file");
  ref_points->excludes(strategy);
  auto* epsilon = cmd->add_option("--epsilon", opt.epsilon, "Gaussian bandwidth or 'median'")
                      ->capture_default_str();
  affinity->excludes(epsilon)->excludes(strategy)->excludes(ref_points);
  cmd->add_option("--tol", opt.tol, "strict positivity floor for densities");
  cmd->add_option("--min-density", opt.min_density, "warn when a density falls below this");
  cmd->add_option("--cutoff", opt.cutoff, "relative spectral cutoff");
}

Prepared prepare(const InputOptions& opt) {
  const DelimitedFormat format{delimiter_char(opt.delimiter), opt.skip_header};
  const auto load_grid = [&](std::istream& in) { return load_matrix(in, format); };

  if (!opt.affinity.empty()) {
    const std::string bytes = read_file(opt.affinity);
    Eigen::MatrixXd grid = load_file(opt.affinity, load_grid);
    AffinityMatrix affinity = external_affinity(std::move(grid), content_digest(bytes));
    Measure measure = opt.measure.empty()
                          ? uniform_measure(affinity.rows())
                          : load_file(opt.measure, [&](std::istream& in) {
                              return load_measure(in, affinity.rows(), format);
                            });
    return {std::move(affinity), std::move(measure), Eigen::MatrixXd()};
  }

  if (opt.points.empty()) throw ArgumentError("one of --points or --affinity is required");
  const PointSet points =
      load_file(opt.points, [&](std::istream& in) { return load_points(in, format); });
  Measure measure = opt.measure.empty()
                        ? uniform_measure(points.size())
                        : load_file(opt.measure, [&](std::istream& in) {
                            return load_measure(in, points.size(), format);
                          });

  std::optional<ReferenceSet> reference;
  if (!opt.ref_points.empty()) {
    reference.emplace(load_file(opt.ref_points, load_grid));
    if (reference->dimension() != points.dimension())
      throw ArgumentError("reference points have dimension " +
                          std::to_string(reference->dimension()) + " but data has " +
                          std::to_string(points.dimension()));
  } else {
    const auto strategy = parse_reference_strategy(opt.ref_strategy);
    if (strategy != ReferenceStrategy::All && opt.ref_size == 0)
      throw ArgumentError("--ref-size is required for --ref-strategy " + opt.ref_strategy);
    reference.emplace(select_reference(points, strategy, opt.ref_size, opt.seed));
  }

  double epsilon = 0.0;
  if (opt.epsilon == "median") {
    epsilon = median_bandwidth(points, *reference);
  } else {
    try {
      std::size_t used = 0;
      epsilon = std::stod(opt.epsilon, &used);
      if (used != opt.epsilon.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ArgumentError("--epsilon must be a number or 'median', got '" + opt.epsilon + "'");
    }
  }
  AffinityMatrix affinity = gaussian_affinity(points, *reference, epsilon);
  return {std::move(affinity), std::move(measure), reference->coordinates()};
}

FitConfig fit_config(const InputOptions& opt) {
  FitConfig config;
  config.cutoff = opt.cutoff;
  config.tolerance = opt.tol;
  config.min_density = opt.min_density;
  return config;
}

FitResult prepare_and_fit(const InputOptions& opt) {
  const Prepared prepared = prepare(opt);
  return fit_affinity(prepared.affinity, prepared.measure, prepared.reference,
                      fit_config(opt));
}

void print_spectrum(std::ostream& out, const SpectralModel& model) {
  out << "affinity: " << model.context.provenance.describe() << '\n';
  out << "m=" << model.context.m << " n=" << model.context.n
      << " retained rank=" << model.rank() << " (cutoff " << format_number(model.cutoff)
      << " x lambda_max)\n";
  out << "eigenvalues:";
  const Index shown = std::min<Index>(model.rank(), 10);
  for (Index k = 0; k < shown; ++k) out << ' ' << format_number(model.eigenvalues[k]);
  if (model.rank() > shown) out << " ...";
  out << '\n';
  for (const auto& w : model.warnings) out << "warning: " << w << '\n';
}

int cmd_validate(const InputOptions& opt, std::ostream& out) {
  const Prepared prepared = prepare(opt);
  const ValidationReport report =
      validate_assumptions(prepared.affinity, prepared.measure, opt.tol, opt.min_density);
  out << "affinity: " << prepared.affinity.provenance().describe() << " ("
      << prepared.affinity.rows() << " x " << prepared.affinity.cols() << ")\n";
  out << report.summary();
  return report.passed() ? kSuccess : kValidationFailure;
}

int cmd_embed(const InputOptions& opt, const EmbedOptions& emb, std::ostream& out) {
  const FitResult result = prepare_and_fit(opt);
  const DiffusionEmbedding embedding =
      diffusion_coordinates(result.model, result.eigenfunctions, emb.time, emb.components);

  auto file = open_output(emb.out);
  write_embedding(file, embedding, emb.header, delimiter_char(opt.delimiter));
  if (!file) throw IoError("failed writing " + emb.out);
  if (!emb.model_dir.empty())
    save_model(emb.model_dir, result.model, emb.components, emb.time);

  print_spectrum(out, result.model);
  for (const auto& w : result.validation.warnings) out << "warning: " << w << '\n';
  out << "bi-stochastic residual (weighted measure): "
      << format_number(bistochastic_residual(result.beta, result.weighted)) << '\n';
  out << "wrote " << embedding.coordinates.rows() << " x " << embedding.coordinates.cols()
      << " embedding to " << emb.out << '\n';
  if (!emb.model_dir.empty()) out << "saved model to " << emb.model_dir << '\n';
  return kSuccess;
}

int cmd_extend(const ExtendOptions& opt, std::ostream& out, std::ostream& err) {
  const StoredModel stored = load_model(opt.model_dir);
  const DelimitedFormat format{delimiter_char(opt.delimiter), opt.skip_header};
  const PointSet points =
      load_file(opt.points_new, [&](std::istream& in) { return load_points(in, format); });
  const OutOfSampleEmbedding result =
      extend_new_points(stored.model, points, opt.time.value_or(stored.time),
                        opt.components.value_or(stored.components), opt.tol);

  auto file = open_output(opt.out);
  write_embedding(file, result.embedding, opt.header, format.delimiter);
  if (!file) throw IoError("failed writing " + opt.out);

  out << "wrote " << result.embedding.coordinates.rows() << " x "
      << result.embedding.coordinates.cols() << " embedding to " << opt.out << '\n';
  if (result.ok()) return kSuccess;
  err << result.failures.size()
      << " point(s) have no affinity to the reference set; their rows are nan:\n";
  for (const auto& f : result.failures)
    err << "  point " << f.index << ": Omega = " << format_number(f.data_density) << '\n';
  return kNumericalFailure;
}

int cmd_kernel_stats(const InputOptions& opt, const DenseOptions& dense, std::ostream& out) {
  const FitResult result = prepare_and_fit(opt);
  const KernelMatrix p = materialize_kernel(result.beta, dense.max_m, dense.force_dense);
  const Eigen::MatrixXd raw = result.beta.values * result.beta.values.transpose();
  const Eigen::VectorXd& w = result.weighted.weights;

  const double symmetry = (raw - raw.transpose()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> p_solver(p.values,
                                                          Eigen::EigenvaluesOnly);
  const double row_sum = ((p.values * w).array() - 1.0).abs().maxCoeff();

  // Nonzero spectrum of P equals that of W^{1/2} p W^{1/2}; compare with A.
  const Eigen::VectorXd sqrt_w = w.cwiseSqrt();
  const Eigen::MatrixXd operator_sym = sqrt_w.asDiagonal() * p.values * sqrt_w.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> op_solver(operator_sym,
                                                           Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a_solver(result.gram.values,
                                                          Eigen::EigenvaluesOnly);
  const Eigen::VectorXd op_eigs = op_solver.eigenvalues().reverse();
  const Eigen::VectorXd a_eigs = a_solver.eigenvalues().reverse();
  const Index common = std::min(op_eigs.size(), a_eigs.size());
  const double spectrum_match =
      (op_eigs.head(common) - a_eigs.head(common)).cwiseAbs().maxCoeff();

  out << "kernel: " << p.values.rows() << " x " << p.values.cols() << '\n';
  out << "symmetry error max|p - p^T|: " << format_number(symmetry) << '\n';
  out << "PSD min eigenvalue of p: " << format_number(p_solver.eigenvalues().minCoeff())
      << '\n';
  out << "weighted row-sum residual max|p w - 1|: " << format_number(row_sum) << '\n';
  out << "spectrum match max|eig(P) - eig(A)| over top " << common
      << " eigenvalues: " << format_number(spectrum_match) << '\n';
  return kSuccess;
}

int cmd_compare_sinkhorn(const InputOptions& opt, const DenseOptions& dense,
                         std::ostream& out) {
  const FitResult result = prepare_and_fit(opt);
  const KernelMatrix p = materialize_kernel(result.beta, dense.max_m, dense.force_dense);
  const Eigen::VectorXd& w = result.weighted.weights;

  out << "[target 1: weighted measure w = Omega^2 mu] one-pass construction\n";
  out << "  iterations: 0\n";
  out << "  residual max_x |sum_x' p(x,x') w(x') - 1| (dense): "
      << format_number(((p.values * w).array() - 1.0).abs().maxCoeff()) << '\n';
  out << "  residual (factored): "
      << format_number(bistochastic_residual(result.beta, result.weighted)) << '\n';

  const SinkhornResult sk =
      sinkhorn_balance(SymmetricKernel(p.values), dense.sinkhorn_tol, dense.max_iter);
  out << "[target 2: counting measure] Sinkhorn-Knopp on the same p, tol "
      << format_number(dense.sinkhorn_tol) << '\n';
  out << "  iterations: " << sk.iterations
      << (sk.converged ? " (converged)" : " (NOT converged)") << '\n';
  const std::size_t count = sk.residuals.size();
  const std::size_t stride = std::max<std::size_t>(1, count / 20);
  out << "  residual trajectory (iteration residual):\n";
  for (std::size_t k = 0; k < count; ++k)
    if (k % stride == 0 || k + 1 == count)
      out << "    " << (k + 1) << ' ' << format_number(sk.residuals[k]) << '\n';
  out << "  final residual max |row/col sum - 1|: " << format_number(sk.residual) << '\n';
  out << "note: target 1 is bi-stochasticity under Omega^2 mu, target 2 is classical "
         "double stochasticity; the residuals are not comparable quantities\n";
  return kSuccess;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Validation: return kValidationFailure;
    case ErrorKind::Ingestion:
    case ErrorKind::Io: return kIoFailure;
    case ErrorKind::Numerical:
    case ErrorKind::Degenerate: return kNumericalFailure;
    case ErrorKind::Argument: return kArgumentError;
  }
  return kNumericalFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bi-stochastic kernels from reference-set affinities"};
  app.require_subcommand(1);

  InputOptions input;
  EmbedOptions embed;
  ExtendOptions extend;
  DenseOptions dense;

  auto* validate = app.add_subcommand("validate", "check the affinity density conditions");
  add_input_options(validate, input);

  auto* embed_cmd = app.add_subcommand("embed", "fit a model and write diffusion coordinates");
  add_input_options(embed_cmd, input);
  embed_cmd->add_option("--components", embed.components, "embedding dimension K")
      ->capture_default_str();
  embed_cmd->add_option("--time", embed.time, "diffusion time t")->capture_default_str();
  embed_cmd->add_option("--out", embed.out, "embedding output file")->required();
  embed_cmd->add_option("--model-dir", embed.model_dir, "directory to persist the model");
  embed_cmd->add_flag("--header", embed.header, "write a metadata line and column header");

  auto* extend_cmd = app.add_subcommand("extend", "embed new points with a saved model");
  extend_cmd->add_option("--model-dir", extend.model_dir, "saved model")->required();
  extend_cmd->add_option("--points-new", extend.points_new, "points to embed")->required();
  extend_cmd->add_option("--out", extend.out, "embedding output file")->required();
  extend_cmd->add_option("--components", extend.components, "override K");
  extend_cmd->add_option("--time", extend.time, "override t");
  extend_cmd->add_option("--delimiter", extend.delimiter, "field delimiter");
  extend_cmd->add_flag("--skip-header", extend.skip_header, "skip the first input line");
  extend_cmd->add_flag("--header", extend.header, "write a metadata line and column header");
  extend_cmd->add_option("--tol", extend.tol, "strict positivity floor for Omega");

  auto* stats = app.add_subcommand("kernel-stats", "dense diagnostics of p (small m only)");
  add_input_options(stats, input);
  stats->add_option("--max-m", dense.max_m, "largest m to materialize")->capture_default_str();
  stats->add_flag("--force-dense", dense.force_dense, "materialize beyond --max-m");

  auto* compare = app.add_subcommand("compare-sinkhorn",
                                     "one-pass construction vs iterative Sinkhorn-Knopp");
  add_input_options(compare, input);
  compare->add_option("--max-m", dense.max_m, "largest m to materialize")->capture_default_str();
  compare->add_flag("--force-dense", dense.force_dense, "materialize beyond --max-m");
  compare->add_option("--sinkhorn-tol", dense.sinkhorn_tol, "Sinkhorn residual target")
      ->capture_default_str();
  compare->add_option("--max-iter", dense.max_iter, "Sinkhorn iteration cap")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kArgumentError;
  }

  try {
    if (*validate) return cmd_validate(input, out);
    if (*embed_cmd) return cmd_embed(input, embed, out);
    if (*extend_cmd) return cmd_extend(extend, out, err);
    if (*stats) return cmd_kernel_stats(input, dense, out);
    if (*compare) return cmd_compare_sinkhorn(input, dense, out);
  } catch (const Error& e) {
    err << "error";
    if (!e.stage().empty()) err << " [" << e.stage() << "]";
    err << ": " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kArgumentError;
}

}  // namespace bistochastic::cli
