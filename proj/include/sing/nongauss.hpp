#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "sing/errors.hpp"
#include "sing/types.hpp"

namespace sing {

namespace detail {

/// Raw third and fourth moments (1/p) sum s^k of a component row.
inline std::pair<double, double> raw_moments_34(
    const Eigen::Ref<const Eigen::RowVectorXd>& s) {
  const double p = static_cast<double>(s.size());
  const auto sq = s.array().square();
  const double m3 = (sq * s.array()).sum() / p;
  const double m4 = sq.square().sum() / p;
  return {m3, m4};
}

inline double jb_from_moments(double m3, double m4, double alpha) {
  return alpha * m3 * m3 + (1.0 - alpha) * (m4 - 3.0) * (m4 - 3.0);
}

/// JB value of one row with no standardization checks. The optimizer and
/// the pipeline evaluate candidate rows through this path, mirroring the
/// formula's use as an objective.
inline double jb_raw(const Eigen::Ref<const Eigen::RowVectorXd>& s,
                     double alpha) {
  const auto [m3, m4] = raw_moments_34(s);
  return jb_from_moments(m3, m4, alpha);
}

/// Sum of raw JB values across rows.
inline double jb_sum_raw(const Matrix& S, double alpha) {
  double total = 0.0;
  for (Index l = 0; l < S.rows(); ++l) total += jb_raw(S.row(l), alpha);
  return total;
}

inline void validate_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw invalid_input_error("alpha must lie strictly between 0 and 1");
}

/// Enforce the standardized-row contract the JB constant 3 presumes:
/// mean 0 within 1e-8 and variance 1 within 1e-6.
inline void validate_component_row(
    const Eigen::Ref<const Eigen::RowVectorXd>& s, Index row_index = -1) {
  const std::string where =
      row_index >= 0 ? "row " + std::to_string(row_index) + ": " : "";
  const Index p = s.size();
  if (p < 2) throw invalid_input_error(where + "component row too short");
  if (!s.allFinite())
    throw invalid_input_error(where + "component row has non-finite entries");
  const double pd = static_cast<double>(p);
  const double mean = s.mean();
  const double var = (s.array() - mean).square().sum() / pd;
  if (var <= 1e-24)
    throw degenerate_input_error(where + "component row has zero variance");
  const double rms = std::sqrt(s.squaredNorm() / pd);
  if (std::abs(mean) > 1e-8 * std::max(1.0, rms))
    throw invalid_input_error(where +
                              "component row is not mean-zero; standardize "
                              "rows before computing JB");
  if (std::abs(var - 1.0) > 1e-6)
    throw invalid_input_error(where +
                              "component row variance differs from 1; "
                              "standardize rows before computing JB");
}

}  // namespace detail

/// Jarque-Bera non-Gaussianity of a standardized component row:
/// alpha * m3^2 + (1-alpha) * (m4 - 3)^2 with raw moments m_k = mean(s^k).
inline double jb_statistic(const Eigen::Ref<const Eigen::RowVectorXd>& s,
                           double alpha = 0.8) {
  detail::validate_alpha(alpha);
  detail::validate_component_row(s);
  return detail::jb_raw(s, alpha);
}

/// Sum of JB statistics across the rows of a component matrix.
inline double jb_total(const Matrix& S, double alpha = 0.8) {
  detail::validate_alpha(alpha);
  double total = 0.0;
  for (Index l = 0; l < S.rows(); ++l) {
    detail::validate_component_row(S.row(l), l);
    total += detail::jb_raw(S.row(l), alpha);
  }
  return total;
}

/// Gradient of f(u^T Xw) with respect to u, where f is the JB statistic:
///   alpha*2*m3*(3/p) * Xw s^2  +  (1-alpha)*2*(m4-3)*(4/p) * Xw s^3
/// with elementwise powers of s = u^T Xw.
inline Vector jb_gradient(const Vector& u, const Matrix& Xw,
                          double alpha = 0.8) {
  detail::validate_alpha(alpha);
  if (u.size() != Xw.rows())
    throw invalid_input_error("jb_gradient: u length must match rows of Xw");
  const double p = static_cast<double>(Xw.cols());
  const Eigen::RowVectorXd s = u.transpose() * Xw;
  const auto [m3, m4] = detail::raw_moments_34(s);
  const Eigen::RowVectorXd s2 = s.array().square();
  const Eigen::RowVectorXd s3 = s2.array() * s.array();
  return alpha * 2.0 * m3 * (3.0 / p) * (Xw * s2.transpose()) +
         (1.0 - alpha) * 2.0 * (m4 - 3.0) * (4.0 / p) * (Xw * s3.transpose());
}

/// Standardized third central moment of a row; 0 for (near-)constant rows.
inline double row_skewness(const Eigen::Ref<const Eigen::RowVectorXd>& s) {
  const double p = static_cast<double>(s.size());
  const double mean = s.mean();
  const auto centered = s.array() - mean;
  const double var = centered.square().sum() / p;
  if (var <= 1e-24) return 0.0;
  const double m3c = centered.cube().sum() / p;
  return m3c / std::pow(var, 1.5);
}

struct SignNormalized {
  Matrix S;
  Matrix M;
};

/// Flip rows of S with negative skewness, flipping the matching columns of M
/// so the product M * S is preserved exactly. Zero-skew rows are unchanged.
inline SignNormalized sign_normalize(const Matrix& S, const Matrix& M) {
  if (M.size() > 0 && M.cols() != S.rows())
    throw invalid_input_error(
        "sign_normalize: columns of M must match rows of S");
  SignNormalized out{S, M};
  for (Index l = 0; l < S.rows(); ++l) {
    if (row_skewness(S.row(l)) < 0.0) {
      out.S.row(l) = -S.row(l);
      if (M.size() > 0) out.M.col(l) = -M.col(l);
    }
  }
  return out;
}

inline Matrix sign_normalize(const Matrix& S) {
  return sign_normalize(S, Matrix()).S;
}

}  // namespace sing
