#include "bistochastic/data_model.hpp"

#include "bistochastic/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace bistochastic {

namespace {

void require_finite(const Eigen::MatrixXd& values, const char* what) {
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < values.cols(); ++j)
      if (!std::isfinite(values(i, j)))
        throw ArgumentError(std::string(what) + ": non-finite value at row " +
                            std::to_string(i) + ", column " + std::to_string(j));
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_field(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end)
    throw IngestionError(line, "non-numeric field '" + std::string(field) + "'");
  if (!std::isfinite(value))
    throw IngestionError(line, "non-finite field '" + std::string(field) + "'");
  return value;
}

// Uniform draw in [0, bound) without the implementation-defined behaviour of
// std::uniform_int_distribution, so samples are stable across standard
// libraries.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return r % bound;
}

double squared_distance(const Eigen::MatrixXd& a, Index i,
                        const Eigen::MatrixXd& b, Index j) {
  double sum = 0.0;
  for (Index k = 0; k < a.cols(); ++k) {
    const double diff = a(i, k) - b(j, k);
    sum += diff * diff;
  }
  return sum;
}

}  // namespace

PointSet::PointSet(Eigen::MatrixXd points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1)
    throw ArgumentError("point set needs at least one point of dimension >= 1");
  require_finite(points_, "point set");
}

Measure::Measure(Eigen::VectorXd weights) : weights_(std::move(weights)) {
  if (weights_.size() < 1) throw ArgumentError("measure must be non-empty");
  for (Index i = 0; i < weights_.size(); ++i)
    if (!std::isfinite(weights_[i]) || weights_[i] <= 0.0)
      throw ArgumentError("measure weight " + std::to_string(i) +
                          " must be finite and strictly positive");
}

ReferenceSet::ReferenceSet(Eigen::MatrixXd points,
                           std::optional<std::vector<Index>> source_indices)
    : points_(std::move(points)), source_indices_(std::move(source_indices)) {
  if (points_.rows() < 1 || points_.cols() < 1)
    throw ArgumentError("reference set needs at least one point");
  require_finite(points_, "reference set");
  if (source_indices_ &&
      static_cast<Index>(source_indices_->size()) != points_.rows())
    throw ArgumentError("reference source indices do not match point count");
}

Eigen::MatrixXd load_matrix(std::istream& in, const DelimitedFormat& format) {
  std::vector<double> values;
  Index width = -1;
  Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && format.skip_header) continue;
    const std::string_view row = trim(line);
    if (row.empty()) continue;

    Index fields = 0;
    std::size_t start = 0;
    while (true) {
      const auto stop = row.find(format.delimiter, start);
      values.push_back(parse_field(row.substr(start, stop - start), line_no));
      ++fields;
      if (stop == std::string_view::npos) break;
      start = stop + 1;
    }
    if (width < 0) {
      width = fields;
    } else if (fields != width) {
      throw IngestionError(line_no, "expected " + std::to_string(width) +
                                        " fields, found " + std::to_string(fields));
    }
    ++rows;
  }
  if (rows == 0) throw IngestionError(line_no, "no data rows");

  Eigen::MatrixXd out(rows, width);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < width; ++j) out(i, j) = values[i * width + j];
  return out;
}

PointSet load_points(std::istream& in, const DelimitedFormat& format) {
  return PointSet(load_matrix(in, format));
}

Measure load_measure(std::istream& in, Index expected_size,
                     const DelimitedFormat& format) {
  const Eigen::MatrixXd raw = load_matrix(in, format);
  if (raw.cols() != 1)
    throw IngestionError(1, "measure file must hold one value per line");
  if (expected_size >= 0 && raw.rows() != expected_size)
    throw ArgumentError("measure has " + std::to_string(raw.rows()) +
                        " weights but the point set has " +
                        std::to_string(expected_size) + " points");
  return Measure(raw.col(0));
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& values,
                  char delimiter) {
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j) out << delimiter;
      out << format_number(values(i, j));
    }
    out << '\n';
  }
}

Measure uniform_measure(Index m) {
  if (m < 1) throw ArgumentError("uniform measure needs m >= 1");
  return Measure(Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m)));
}

ReferenceStrategy parse_reference_strategy(std::string_view name) {
  if (name == "all") return ReferenceStrategy::All;
  if (name == "uniform") return ReferenceStrategy::Uniform;
  if (name == "fps") return ReferenceStrategy::FarthestPoint;
  throw ArgumentError("unknown reference strategy '" + std::string(name) +
                      "' (expected all, uniform or fps)");
}

std::string_view to_string(ReferenceStrategy strategy) {
  switch (strategy) {
    case ReferenceStrategy::All: return "all";
    case ReferenceStrategy::Uniform: return "uniform";
    case ReferenceStrategy::FarthestPoint: return "fps";
  }
  return "unknown";
}

ReferenceSet select_reference(const PointSet& points, ReferenceStrategy strategy,
                              Index size, std::uint64_t seed) {
  const Index m = points.size();
  const auto& x = points.coordinates();

  if (strategy == ReferenceStrategy::All) {
    std::vector<Index> all(static_cast<std::size_t>(m));
    std::iota(all.begin(), all.end(), Index{0});
    return ReferenceSet(x, std::move(all));
  }

  if (size < 1 || size > m)
    throw ArgumentError("reference size " + std::to_string(size) +
                        " must lie in [1, " + std::to_string(m) + "]");

  std::vector<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(size));

  if (strategy == ReferenceStrategy::Uniform) {
    std::vector<Index> pool(static_cast<std::size_t>(m));
    std::iota(pool.begin(), pool.end(), Index{0});
    std::mt19937_64 rng(seed);
    for (Index k = 0; k < size; ++k) {
      const auto j = k + static_cast<Index>(
                             draw_below(rng, static_cast<std::uint64_t>(m - k)));
      std::swap(pool[k], pool[j]);
      chosen.push_back(pool[k]);
    }
    std::sort(chosen.begin(), chosen.end());
  } else {
    // Squared distances preserve the argmax, so they stand in for distances.
    // Already-chosen rows are skipped so duplicate points cannot be picked
    // twice under the same index.
    Eigen::VectorXd nearest(m);
    std::vector<bool> taken(static_cast<std::size_t>(m), false);
    chosen.push_back(0);
    taken[0] = true;
    for (Index i = 0; i < m; ++i) nearest[i] = squared_distance(x, i, x, 0);
    while (static_cast<Index>(chosen.size()) < size) {
      Index best = -1;
      for (Index i = 0; i < m; ++i)
        if (!taken[i] && (best < 0 || nearest[i] > nearest[best])) best = i;
      chosen.push_back(best);
      taken[best] = true;
      for (Index i = 0; i < m; ++i)
        nearest[i] = std::min(nearest[i], squared_distance(x, i, x, best));
    }
  }

  Eigen::MatrixXd y(size, points.dimension());
  for (Index k = 0; k < size; ++k) y.row(k) = x.row(chosen[k]);
  return ReferenceSet(std::move(y), std::move(chosen));
}

}  // namespace bistochastic
