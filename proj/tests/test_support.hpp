#pragma once

#include "bistochastic/data_model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace testing_support {

/// Gaussian point cloud, deterministic in `seed`.
inline Eigen::MatrixXd random_points(Eigen::Index m, Eigen::Index d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(m, d);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = normal(rng);
  return x;
}

/// Positive weights in [0.2, 3).
inline Eigen::VectorXd random_weights(Eigen::Index m, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  Eigen::VectorXd w(m);
  for (Eigen::Index i = 0; i < m; ++i) w[i] = u(rng);
  return w;
}

inline Eigen::VectorXd random_vector(Eigen::Index m, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(m);
  for (Eigen::Index i = 0; i < m; ++i) v[i] = normal(rng);
  return v;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("bistochastic_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testing_support
