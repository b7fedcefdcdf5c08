#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace bistochastic {

/// Symmetric (to 1e-12) matrix with strictly positive finite entries.
class SymmetricKernel {
 public:
  explicit SymmetricKernel(Eigen::MatrixXd values);
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index size() const noexcept { return values_.rows(); }

 private:
  Eigen::MatrixXd values_;
};

struct SinkhornResult {
  Eigen::VectorXd scaling;        // d
  Eigen::MatrixXd balanced;       // diag(d) k diag(d)
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residuals;  // one entry per iteration
  bool converged = false;
};

/// Classical doubly-stochastic balancing under the counting measure. The row
/// and column normalizations of Sinkhorn-Knopp collapse into one symmetric
/// update d <- d / sqrt(rowsum(diag(d) k diag(d))). Stops at the first iterate
/// whose residual is <= tol, or after max_iter (converged = false).
SinkhornResult sinkhorn_balance(const SymmetricKernel& kernel, double tol,
                                int max_iter,
                                std::optional<Eigen::VectorXd> initial = {});

/// Max over all rows and columns of |sum - 1|.
double stochastic_residual(const Eigen::MatrixXd& matrix);

}  // namespace bistochastic
