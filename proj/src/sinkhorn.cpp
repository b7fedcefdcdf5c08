#include "bistochastic/sinkhorn.hpp"

#include "bistochastic/errors.hpp"

#include <cmath>
#include <string>

namespace bistochastic {

SymmetricKernel::SymmetricKernel(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols() || values_.rows() == 0)
    throw ArgumentError("kernel must be a non-empty square matrix");
  for (Eigen::Index j = 0; j < values_.cols(); ++j) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      const double v = values_(i, j);
      if (!std::isfinite(v) || !(v > 0.0))
        throw ArgumentError("kernel entry (" + std::to_string(i) + ", " +
                            std::to_string(j) + ") must be finite and > 0");
      if (std::abs(v - values_(j, i)) > 1e-12)
        throw ArgumentError("kernel is not symmetric at (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
    }
  }
}

double stochastic_residual(const Eigen::MatrixXd& matrix) {
  const double rows = (matrix.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (matrix.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

SinkhornResult sinkhorn_balance(const SymmetricKernel& kernel, double tol, int max_iter,
                                std::optional<Eigen::VectorXd> initial) {
  if (!(tol > 0.0)) throw ArgumentError("sinkhorn tolerance must be positive");
  if (max_iter < 1) throw ArgumentError("sinkhorn needs max_iter >= 1");
  const auto& k = kernel.values();

  SinkhornResult out;
  out.scaling = initial ? *initial : Eigen::VectorXd::Ones(k.rows());
  if (out.scaling.size() != k.rows() || !out.scaling.allFinite() ||
      !(out.scaling.minCoeff() > 0.0))
    throw ArgumentError("initial scaling must be positive with one entry per row");

  auto& d = out.scaling;
  while (out.iterations < max_iter) {
    const Eigen::VectorXd row_sums = d.cwiseProduct(k * d);
    d = d.cwiseQuotient(row_sums.cwiseSqrt());
    ++out.iterations;

    out.balanced = d.asDiagonal() * k * d.asDiagonal();
    out.residual = stochastic_residual(out.balanced);
    out.residuals.push_back(out.residual);
    if (out.residual <= tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace bistochastic
