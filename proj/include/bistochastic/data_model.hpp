#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bistochastic {

using Index = Eigen::Index;

/// Ordered point cloud in R^d, one point per row. Immutable after
/// construction; all coordinates are finite.
class PointSet {
 public:
  explicit PointSet(Eigen::MatrixXd points);

  Index size() const noexcept { return points_.rows(); }
  Index dimension() const noexcept { return points_.cols(); }
  const Eigen::MatrixXd& coordinates() const noexcept { return points_; }
  auto point(Index i) const { return points_.row(i); }

 private:
  Eigen::MatrixXd points_;
};

/// Strictly positive point masses. Never renormalized.
class Measure {
 public:
  explicit Measure(Eigen::VectorXd weights);

  Index size() const noexcept { return weights_.size(); }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }

 private:
  Eigen::VectorXd weights_;
};

/// The landmark set Y. When Y was drawn from a PointSet, `source_indices`
/// maps each reference point back to its row there.
class ReferenceSet {
 public:
  explicit ReferenceSet(Eigen::MatrixXd points,
                        std::optional<std::vector<Index>> source_indices = {});

  Index size() const noexcept { return points_.rows(); }
  Index dimension() const noexcept { return points_.cols(); }
  const Eigen::MatrixXd& coordinates() const noexcept { return points_; }
  auto point(Index i) const { return points_.row(i); }
  const std::optional<std::vector<Index>>& source_indices() const noexcept {
    return source_indices_;
  }

 private:
  Eigen::MatrixXd points_;
  std::optional<std::vector<Index>> source_indices_;
};

struct DelimitedFormat {
  char delimiter = ',';
  bool skip_header = false;
};

/// Parses delimiter-separated numeric rows of equal width. Throws
/// IngestionError naming the 1-based line on ragged rows, non-numeric
/// fields, or empty input.
Eigen::MatrixXd load_matrix(std::istream& in, const DelimitedFormat& format = {});
PointSet load_points(std::istream& in, const DelimitedFormat& format = {});

/// One positive weight per line. `expected_size` of -1 skips the length check.
Measure load_measure(std::istream& in, Index expected_size = -1,
                     const DelimitedFormat& format = {});

/// Shortest-round-trip is not required; numbers are written with 17
/// significant digits, which reproduces every double exactly on reload.
std::string format_number(double value);
void write_matrix(std::ostream& out, const Eigen::MatrixXd& values,
                  char delimiter = ',');

Measure uniform_measure(Index m);

enum class ReferenceStrategy { All, Uniform, FarthestPoint };

ReferenceStrategy parse_reference_strategy(std::string_view name);
std::string_view to_string(ReferenceStrategy strategy);

/// Chooses Y from X.
///   All:           Y = X in order; `size` ignored.
///   Uniform:       `size` distinct rows drawn with a seeded mt19937_64;
///                  returned in ascending index order.
///   FarthestPoint: starts at row 0, then repeatedly adds the row with the
///                  largest distance to the chosen set (lowest index on ties).
ReferenceSet select_reference(const PointSet& points, ReferenceStrategy strategy,
                              Index size = 0, std::uint64_t seed = 0);

}  // namespace bistochastic
