#include "bistochastic/model_io.hpp"

#include "bistochastic/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace bistochastic {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

Eigen::MatrixXd read_matrix_file(const fs::path& path) {
  auto in = open_input(path);
  try {
    return load_matrix(in);
  } catch (const IngestionError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

const std::string& require_key(const std::map<std::string, std::string>& meta,
                               const std::string& key) {
  const auto it = meta.find(key);
  if (it == meta.end()) throw IoError("model metadata is missing '" + key + "'");
  return it->second;
}

template <class T>
T parse_value(const std::map<std::string, std::string>& meta, const std::string& key) {
  const std::string& text = require_key(meta, key);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw IoError("model metadata '" + key + "' is not a number: " + text);
  return value;
}

}  // namespace

std::map<std::string, std::string> read_metadata(std::istream& in) {
  std::map<std::string, std::string> meta;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed metadata line: " + line);
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

void save_model(const fs::path& dir, const SpectralModel& model, Index components,
                double time) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create model directory " + dir.string() + ": " + ec.message());

  const auto& ctx = model.context;
  {
    auto out = open_output(dir / "metadata.txt");
    out << "format_version=" << kModelFormatVersion << '\n'
        << "m=" << ctx.m << '\n'
        << "n=" << ctx.n << '\n'
        << "d=" << ctx.d << '\n'
        << "rank=" << model.rank() << '\n';
    if (ctx.provenance.builder == AffinityProvenance::Builder::Gaussian) {
      out << "affinity=gaussian\n"
          << "epsilon=" << format_number(ctx.provenance.epsilon) << '\n';
    } else {
      out << "affinity=external\n"
          << "digest=" << ctx.provenance.digest << '\n';
    }
    out << "cutoff=" << format_number(model.cutoff) << '\n'
        << "lambda_max=" << format_number(model.lambda_max) << '\n'
        << "components=" << components << '\n'
        << "time=" << format_number(time) << '\n';
    if (!out) throw IoError("failed writing model metadata");
  }
  if (ctx.reference_points.size() > 0) {
    auto out = open_output(dir / "reference.csv");
    write_matrix(out, ctx.reference_points);
  }
  const auto write_file = [&](const char* name, const Eigen::MatrixXd& values) {
    auto out = open_output(dir / name);
    write_matrix(out, values);
    if (!out) throw IoError(std::string("failed writing ") + name);
  };
  write_file("reference_density.csv", ctx.reference_density);
  write_file("eigenvalues.csv", model.eigenvalues);
  write_file("eigenvectors.csv", model.eigenvectors);
}

StoredModel load_model(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("model directory " + dir.string() + " not found");
  auto meta_in = open_input(dir / "metadata.txt");
  const auto meta = read_metadata(meta_in);

  const int version = parse_value<int>(meta, "format_version");
  if (version != kModelFormatVersion)
    throw IoError("unsupported model format version " + std::to_string(version));

  StoredModel stored;
  auto& model = stored.model;
  auto& ctx = model.context;
  ctx.m = parse_value<Index>(meta, "m");
  ctx.n = parse_value<Index>(meta, "n");
  ctx.d = parse_value<Index>(meta, "d");
  const auto rank = parse_value<Index>(meta, "rank");
  model.cutoff = parse_value<double>(meta, "cutoff");
  model.lambda_max = parse_value<double>(meta, "lambda_max");
  stored.components = parse_value<Index>(meta, "components");
  stored.time = parse_value<double>(meta, "time");

  const std::string& builder = require_key(meta, "affinity");
  if (builder == "gaussian") {
    ctx.provenance.builder = AffinityProvenance::Builder::Gaussian;
    ctx.provenance.epsilon = parse_value<double>(meta, "epsilon");
    ctx.reference_points = read_matrix_file(dir / "reference.csv");
    if (ctx.reference_points.rows() != ctx.n || ctx.reference_points.cols() != ctx.d)
      throw IoError("reference.csv does not match n x d from metadata");
  } else if (builder == "external") {
    ctx.provenance.builder = AffinityProvenance::Builder::External;
    ctx.provenance.digest = require_key(meta, "digest");
  } else {
    throw IoError("unknown affinity builder '" + builder + "'");
  }

  const Eigen::MatrixXd omega = read_matrix_file(dir / "reference_density.csv");
  const Eigen::MatrixXd lambda = read_matrix_file(dir / "eigenvalues.csv");
  model.eigenvectors = read_matrix_file(dir / "eigenvectors.csv");
  if (omega.cols() != 1 || omega.rows() != ctx.n)
    throw IoError("reference_density.csv must hold n values");
  if (lambda.cols() != 1 || lambda.rows() != rank)
    throw IoError("eigenvalues.csv must hold rank values");
  if (model.eigenvectors.rows() != ctx.n || model.eigenvectors.cols() != rank)
    throw IoError("eigenvectors.csv must be n x rank");
  ctx.reference_density = omega.col(0);
  model.eigenvalues = lambda.col(0);
  return stored;
}

void write_embedding(std::ostream& out, const DiffusionEmbedding& embedding, bool header,
                     char delimiter) {
  if (header) {
    out << "# t=" << format_number(embedding.time) << " lambda=";
    for (Index k = 0; k < embedding.eigenvalues.size(); ++k)
      out << (k ? " " : "") << format_number(embedding.eigenvalues[k]);
    out << '\n';
    for (Index k = 0; k < embedding.coordinates.cols(); ++k)
      out << (k ? std::string(1, delimiter) : "") << "psi_" << (k + 2);
    out << '\n';
  }
  write_matrix(out, embedding.coordinates, delimiter);
}

}  // namespace bistochastic
