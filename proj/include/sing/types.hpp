#pragma once

#include <Eigen/Dense>

#include "sing/errors.hpp"

namespace sing {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// n x p data matrix, rows are subjects, columns are features.
struct DataMatrix {
  Matrix values;
  bool row_centered = false;        // every row mean is 0
  bool column_standardized = false; // every column has mean 0 and variance 1

  DataMatrix() = default;
  explicit DataMatrix(Matrix v) : values(std::move(v)) {}

  Index n() const { return values.rows(); }
  Index p() const { return values.cols(); }
};

/// r x n semiorthogonal unmixing matrix: U U^T = I_r, rows are components.
struct Unmixing {
  Matrix U;

  Unmixing() = default;
  explicit Unmixing(Matrix u) : U(std::move(u)) {}

  Index r() const { return U.rows(); }
  Index n() const { return U.cols(); }
};

/// Frobenius norm of U U^T - I, the semiorthogonality defect.
inline double semiorthogonality_error(const Matrix& U) {
  const Index r = U.rows();
  return (U * U.transpose() - Matrix::Identity(r, r)).norm();
}

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite())
    throw invalid_input_error(std::string(what) + ": non-finite entries");
}

}  // namespace sing
