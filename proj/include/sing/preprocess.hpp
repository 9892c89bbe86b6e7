#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "sing/errors.hpp"
#include "sing/types.hpp"

namespace sing {

/// Default relative eigenvalue cutoff for generalized inverses. Double
/// centering guarantees one exact zero eigenvalue that must be excluded.
inline constexpr double kEigenTol = 1e-10;

/// Remove row means, column means and add back the grand mean, so that every
/// row sum and column sum of the result is zero. Rank drops by one.
inline Matrix double_center(const Matrix& x) {
  if (x.rows() < 2 || x.cols() < 2)
    throw invalid_input_error("double_center: need at least 2x2 input");
  require_finite(x, "double_center");
  if (x.maxCoeff() == x.minCoeff())
    throw degenerate_input_error("double_center: input matrix is constant");

  const Vector row_mean = x.rowwise().mean();
  const Eigen::RowVectorXd col_mean = x.colwise().mean();
  const double grand_mean = x.mean();

  Matrix centered = x;
  centered.colwise() -= row_mean;
  centered.rowwise() -= col_mean;
  centered.array() += grand_mean;
  return centered;
}

inline DataMatrix double_center(const DataMatrix& data) {
  DataMatrix out(double_center(data.values));
  out.row_centered = true;
  out.column_standardized = data.column_standardized;
  return out;
}

struct StandardizeResult {
  DataMatrix data;
  bool converged = false;
  int iterations = 0;
  double max_deviation = 0.0;  // final max |column variance - 1|
};

/// Alternate column standardization (mean 0, variance 1 across subjects,
/// sample variance) with row centering until every column variance is within
/// tol of 1. Non-convergence is reported as a status, not an error.
inline StandardizeResult standardize_iterative(const DataMatrix& data,
                                               double tol = 1e-6,
                                               int max_iter = 50) {
  const Index n = data.n();
  const Index p = data.p();
  if (n < 3 || p < 2)
    throw invalid_input_error("standardize_iterative: need n >= 3, p >= 2");
  require_finite(data.values, "standardize_iterative");
  if (tol <= 0 || max_iter < 1)
    throw invalid_input_error("standardize_iterative: bad tol or max_iter");

  Matrix m = data.values;
  StandardizeResult result;
  for (int iter = 1; iter <= max_iter; ++iter) {
    // Column standardization.
    const Eigen::RowVectorXd col_mean = m.colwise().mean();
    m.rowwise() -= col_mean;
    for (Index j = 0; j < p; ++j) {
      const double sd =
          std::sqrt(m.col(j).squaredNorm() / static_cast<double>(n - 1));
      if (sd <= 1e-13 * std::max(1.0, std::abs(col_mean(j))))
        throw degenerate_input_error(
            "standardize_iterative: column " + std::to_string(j) +
            " is constant across subjects");
      m.col(j) /= sd;
    }
    // Row centering.
    m.colwise() -= m.rowwise().mean().eval();

    double dev = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double mean = m.col(j).mean();
      const double var = (m.col(j).array() - mean).square().sum() /
                         static_cast<double>(n - 1);
      dev = std::max(dev, std::abs(var - 1.0));
      dev = std::max(dev, std::abs(mean));
    }
    result.iterations = iter;
    result.max_deviation = dev;
    if (dev < tol) {
      result.converged = true;
      break;
    }
  }

  result.data = DataMatrix(std::move(m));
  result.data.row_centered = true;
  result.data.column_standardized = result.converged;
  return result;
}

/// V diag(lambda_i^exponent) V^T over eigenvalues above the cutoff; smaller
/// eigenvalues map to zero (generalized inverse semantics). eigen_tol is
/// relative to the largest absolute eigenvalue.
inline Matrix matrix_power(const Matrix& m, double exponent,
                           double eigen_tol = kEigenTol) {
  if (m.rows() != m.cols())
    throw invalid_input_error("matrix_power: matrix must be square");
  require_finite(m, "matrix_power");
  const double scale = m.norm();
  if ((m - m.transpose()).norm() > 1e-8 * std::max(scale, 1e-300))
    throw invalid_input_error("matrix_power: matrix must be symmetric");
  if (eigen_tol < 0)
    throw invalid_input_error("matrix_power: eigen_tol must be nonnegative");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success)
    throw numeric_error("matrix_power: eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  const double lambda_scale = lambda.cwiseAbs().maxCoeff();
  const double cutoff = eigen_tol * lambda_scale;

  const bool integer_exponent =
      std::abs(exponent - std::round(exponent)) <= 1e-12;
  Vector powered = Vector::Zero(lambda.size());
  for (Index i = 0; i < lambda.size(); ++i) {
    const double l = lambda(i);
    if (std::abs(l) <= cutoff) continue;
    if (l < 0 && !integer_exponent)
      throw domain_error(
          "matrix_power: negative eigenvalue with fractional exponent");
    powered(i) = std::pow(l, exponent);
  }
  return eig.eigenvectors() * powered.asDiagonal() *
         eig.eigenvectors().transpose();
}

/// Eigendecomposition-derived whitening of a double-centered data matrix.
struct Whitener {
  Matrix whitening;  // L = Sigma^(-1/2), generalized
  Matrix inverse;    // L^- = Sigma^(1/2), generalized
  Matrix whitened;   // L * data
  Index eigen_rank = 0;
  double eigen_tol = kEigenTol;
  bool sample_covariance = false;  // divisor p-1 instead of p
};

/// Whiten double-centered data: Sigma = X X^T / p (or p-1 with
/// sample_covariance), L = Sigma^(-1/2) with the zero eigenvalue from double
/// centering removed via the generalized inverse.
inline Whitener whiten(const DataMatrix& data, bool sample_covariance = false,
                       double eigen_tol = kEigenTol) {
  if (!data.row_centered)
    throw invalid_input_error(
        "whiten: data must be double-centered (apply double_center or "
        "standardize_iterative first)");
  const Index n = data.n();
  const Index p = data.p();
  if (n < 3 || p < 2) throw invalid_input_error("whiten: need n >= 3, p >= 2");

  const double divisor = sample_covariance ? static_cast<double>(p - 1)
                                           : static_cast<double>(p);
  const Matrix sigma = data.values * data.values.transpose() / divisor;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  if (eig.info() != Eigen::Success)
    throw numeric_error("whiten: eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  const double cutoff = eigen_tol * lambda.cwiseAbs().maxCoeff();

  Vector sqrt_pos = Vector::Zero(n);
  Vector inv_sqrt_pos = Vector::Zero(n);
  Index rank = 0;
  for (Index i = 0; i < n; ++i) {
    if (lambda(i) > cutoff) {
      sqrt_pos(i) = std::sqrt(lambda(i));
      inv_sqrt_pos(i) = 1.0 / sqrt_pos(i);
      ++rank;
    }
  }
  if (rank < 2)
    throw degenerate_input_error("whiten: data rank below 2");

  Whitener w;
  w.whitening =
      eig.eigenvectors() * inv_sqrt_pos.asDiagonal() * eig.eigenvectors().transpose();
  w.inverse =
      eig.eigenvectors() * sqrt_pos.asDiagonal() * eig.eigenvectors().transpose();
  w.whitened = w.whitening * data.values;
  w.eigen_rank = rank;
  w.eigen_tol = eigen_tol;
  w.sample_covariance = sample_covariance;
  return w;
}

}  // namespace sing
