#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include <Eigen/Dense>

#include "sing/errors.hpp"
#include "sing/lngca.hpp"
#include "sing/matcher.hpp"
#include "sing/nongauss.hpp"
#include "sing/preprocess.hpp"
#include "sing/sing_solver.hpp"
#include "sing/types.hpp"

namespace sing {

struct SingConfig {
  std::optional<Index> rank_x, rank_y;
  bool standardize = false;  // iterative column standardization before whitening
  bool individual = false;   // also return the individual components
  std::variant<RhoExtent, double> rho_extent = RhoExtent::small;
  double alpha = 0.8;
  int n_perm = 1000;
  double alpha_level = 0.01;
  int restarts = 20;
  int max_iter = 1500;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  bool reestimate_mixing_ols = false;  // refit M by OLS after the joint solve
};

struct SingDiagnostics {
  double rho = 0.0;
  std::string rho_label;  // "small", "medium", "large" or "numeric"
  double joint_distance = 0.0;
  bool lngca_x_converged = false, lngca_y_converged = false;
  bool joint_converged = false;
  int joint_iterations = 0;
  double max_feasibility_error = 0.0;  // max over all optimizer iterations
  double pmse_joint = 0.0;
  JointRankTest rank_test;
  std::string warning;  // empty when clean
  std::string step_size_mode;
  std::uint64_t seed_x = 0, seed_y = 0, seed_perm = 0;
};

/// Joint decomposition output. Joint rows come first in each dataset's
/// component order; score columns M_j/M_jx/M_jy are unit norm and loadings
/// rows have nonnegative skewness.
struct SingResult {
  Matrix S_jx, S_jy;        // r_j x p
  Matrix M_j, M_jx, M_jy;   // n x r_j, unit-norm columns
  Vector scale_x, scale_y;  // r_j column norms of the unscaled joint mixing
  Matrix S_ix, S_iy;        // individual loadings (empty unless requested)
  Matrix M_ix, M_iy;        // individual scores, unnormalized
  SingDiagnostics diagnostics;
};

namespace detail {

inline Matrix center_columns(const Matrix& m) {
  Matrix out = m;
  out.rowwise() -= m.colwise().mean();
  return out;
}

/// Shared tail of the pipeline: given matched initial unmixing matrices and
/// the joint rank, select rho, run the coupled solve, and assemble the
/// result. With r_j = 0 the joint solve is skipped (nothing to couple) and
/// the matched single-dataset solutions are packaged directly.
inline SingResult assemble_sing_result(const DataMatrix& Xp,
                                       const DataMatrix& Yp,
                                       const Whitener& wx, const Whitener& wy,
                                       const Matrix& Ux0, const Matrix& Uy0,
                                       Index r_j, const SingConfig& config,
                                       SingDiagnostics diag) {
  const Index n = Xp.n();
  const Index rx = Ux0.rows();
  const Index ry = Uy0.rows();
  SingResult res;

  Matrix Ux = Ux0, Uy = Uy0;
  if (r_j > 0) {
    const Matrix Sx_cand = Ux0.topRows(r_j) * wx.whitened;
    const Matrix Sy_cand = Uy0.topRows(r_j) * wy.whitened;
    diag.rho = select_rho(Sx_cand, Sy_cand, config.rho_extent, config.alpha);
    diag.rho_label = std::holds_alternative<double>(config.rho_extent)
                         ? "numeric"
                         : to_string(std::get<RhoExtent>(config.rho_extent));

    JointProblem pb;
    pb.Xw = wx.whitened;
    pb.Yw = wy.whitened;
    pb.invLx = wx.inverse;
    pb.invLy = wy.inverse;
    pb.Ux0 = Ux0;
    pb.Uy0 = Uy0;
    pb.rho = diag.rho;
    pb.r_j = r_j;
    pb.alpha = config.alpha;
    pb.tol = config.tol;
    pb.max_iter = config.max_iter;
    const JointSolution sol = curvilinear_solve(pb);
    Ux = sol.Ux.U;
    Uy = sol.Uy.U;
    diag.joint_distance = sol.joint_distance;
    diag.joint_converged = sol.converged;
    diag.joint_iterations = sol.iterations;
    diag.max_feasibility_error =
        std::max(diag.max_feasibility_error, sol.max_feasibility_error);
    diag.step_size_mode = sol.step_size_mode;
  } else {
    diag.rho = 0.0;
    diag.rho_label = "unused";
    diag.joint_converged = true;
    diag.step_size_mode = "none";
    if (diag.warning.empty())
      diag.warning =
          "joint rank is 0: no significant matched pairs; joint blocks are "
          "empty";
  }

  const Matrix Sx_full = Ux * wx.whitened;
  const Matrix Sy_full = Uy * wy.whitened;
  const Matrix Mx_full = config.reestimate_mixing_ols
                             ? estimate_mixing_ols(Sx_full, Xp).M
                             : Matrix(wx.inverse * Ux.transpose());
  const Matrix My_full = config.reestimate_mixing_ols
                             ? estimate_mixing_ols(Sy_full, Yp).M
                             : Matrix(wy.inverse * Uy.transpose());

  res.S_jx = Sx_full.topRows(r_j);
  res.S_jy = Sy_full.topRows(r_j);
  res.scale_x.resize(r_j);
  res.scale_y.resize(r_j);
  res.M_jx.resize(n, r_j);
  res.M_jy.resize(n, r_j);
  for (Index l = 0; l < r_j; ++l) {
    res.scale_x(l) = Mx_full.col(l).norm();
    res.scale_y(l) = My_full.col(l).norm();
    if (res.scale_x(l) < 1e-150 || res.scale_y(l) < 1e-150)
      throw degenerate_input_error("joint mixing column " + std::to_string(l) +
                                   " has zero norm");
    res.M_jx.col(l) = Mx_full.col(l) / res.scale_x(l);
    res.M_jy.col(l) = My_full.col(l) / res.scale_y(l);
  }

  {
    const SignNormalized sx = sign_normalize(res.S_jx, res.M_jx);
    res.S_jx = sx.S;
    res.M_jx = sx.M;
    const SignNormalized sy = sign_normalize(res.S_jy, res.M_jy);
    res.S_jy = sy.S;
    res.M_jy = sy.M;
  }

  if (config.individual) {
    res.S_ix = Sx_full.bottomRows(rx - r_j);
    res.S_iy = Sy_full.bottomRows(ry - r_j);
    Matrix M_ix = Mx_full.rightCols(rx - r_j);
    Matrix M_iy = My_full.rightCols(ry - r_j);
    const SignNormalized sx = sign_normalize(res.S_ix, M_ix);
    res.S_ix = sx.S;
    res.M_ix = sx.M;
    const SignNormalized sy = sign_normalize(res.S_iy, M_iy);
    res.S_iy = sy.S;
    res.M_iy = sy.M;
  }

  if (r_j > 0) {
    // Per-dataset sign normalization can leave matched columns anti-aligned;
    // the average follows M_jx's sign, leaving the returned M_jy untouched.
    Matrix My_aligned = res.M_jy;
    for (Index l = 0; l < r_j; ++l) {
      const Vector xc = center_columns(res.M_jx.col(l));
      const Vector yc = center_columns(My_aligned.col(l));
      if (xc.dot(yc) < 0.0) My_aligned.col(l) = -My_aligned.col(l);
    }
    res.M_j = average_joint_scores(res.M_jx, My_aligned);
    diag.pmse_joint = pmse(res.M_jx, res.M_jy);
  } else {
    res.M_j.resize(n, 0);
    res.M_jx.resize(n, 0);
    res.M_jy.resize(n, 0);
    res.S_jx.resize(0, Xp.p());
    res.S_jy.resize(0, Yp.p());
  }

  res.diagnostics = std::move(diag);
  return res;
}

inline DataMatrix preprocess_for_sing(const DataMatrix& raw,
                                      const SingConfig& config,
                                      std::string& warning,
                                      const char* name) {
  if (config.standardize) {
    const StandardizeResult st = standardize_iterative(raw);
    if (!st.converged)
      warning += std::string(name) +
                 " standardization did not converge (max deviation " +
                 std::to_string(st.max_deviation) + "); ";
    return st.data;
  }
  return double_center(raw);
}

}  // namespace detail

/// Full SING pipeline: preprocess both datasets, run per-dataset LNGCA,
/// greedy-match the mixing columns, estimate the joint rank by permutation
/// test, select rho, run the coupled curvilinear solve, and assemble joint
/// (and optionally individual) loadings and scores. Deterministic given the
/// seed; the three seeded stages use seed, seed+1, seed+2.
inline SingResult sing_decompose(const DataMatrix& X, const DataMatrix& Y,
                                 const SingConfig& config) {
  if (X.n() != Y.n())
    throw invalid_input_error(
        "sing_decompose: X and Y must have the same number of subjects (" +
        std::to_string(X.n()) + " vs " + std::to_string(Y.n()) + ")");
  if (!config.rank_x || !config.rank_y)
    throw invalid_input_error(
        "sing_decompose: component ranks are required; supply rank_x and "
        "rank_y (estimate them externally or with estimate_rank_jb_null)");

  SingDiagnostics diag;
  diag.seed_x = config.seed;
  diag.seed_y = config.seed + 1;
  diag.seed_perm = config.seed + 2;

  const DataMatrix Xp =
      detail::preprocess_for_sing(X, config, diag.warning, "X");
  const DataMatrix Yp =
      detail::preprocess_for_sing(Y, config, diag.warning, "Y");
  const Whitener wx = whiten(Xp);
  const Whitener wy = whiten(Yp);

  const Decomposition dx =
      lngca_whitened(wx, *config.rank_x, config.alpha, config.restarts,
                     diag.seed_x, config.max_iter, config.tol);
  const Decomposition dy =
      lngca_whitened(wy, *config.rank_y, config.alpha, config.restarts,
                     diag.seed_y, config.max_iter, config.tol);
  diag.lngca_x_converged = dx.converged;
  diag.lngca_y_converged = dy.converged;
  diag.max_feasibility_error =
      std::max(dx.max_feasibility_error, dy.max_feasibility_error);

  const Matrix Mx = detail::center_columns(estimate_mixing_ols(dx.S, Xp).M);
  const Matrix My = detail::center_columns(estimate_mixing_ols(dy.S, Yp).M);
  const MatchResult match = greedy_match(Mx, My, dx.U, dy.U);

  diag.rank_test =
      perm_test_joint_rank(match.Mx_reordered, match.My_reordered,
                           config.n_perm, config.alpha_level, diag.seed_perm);

  return detail::assemble_sing_result(Xp, Yp, wx, wy, match.Ux_reordered.U,
                                      match.Uy_reordered.U,
                                      diag.rank_test.r_j, config, diag);
}

/// Staged entry point: run only rho selection, the joint solve and assembly
/// from externally supplied matched unmixing matrices and joint rank, as the
/// stage-wise command line does.
inline SingResult sing_decompose_from_init(const DataMatrix& X,
                                           const DataMatrix& Y,
                                           const Matrix& Ux0, const Matrix& Uy0,
                                           Index r_j,
                                           const SingConfig& config) {
  if (X.n() != Y.n())
    throw invalid_input_error(
        "sing_decompose_from_init: X and Y must have the same number of "
        "subjects");
  if (r_j < 0 || r_j > std::min(Ux0.rows(), Uy0.rows()))
    throw invalid_input_error(
        "sing_decompose_from_init: r_j exceeds min(r_x, r_y)");

  SingDiagnostics diag;
  diag.seed_x = diag.seed_y = diag.seed_perm = config.seed;
  const DataMatrix Xp =
      detail::preprocess_for_sing(X, config, diag.warning, "X");
  const DataMatrix Yp =
      detail::preprocess_for_sing(Y, config, diag.warning, "Y");
  const Whitener wx = whiten(Xp);
  const Whitener wy = whiten(Yp);
  diag.rank_test.r_j = r_j;
  diag.rank_test.alpha_level = config.alpha_level;
  return detail::assemble_sing_result(Xp, Yp, wx, wy, Ux0, Uy0, r_j, config,
                                      diag);
}

struct RankEstimate {
  Index rank = 0;
  double threshold = 0.0;
  Vector jb_values;  // descending, all n-2 candidate components
};

/// Convenience heuristic, not a formal test: count components whose JB value
/// exceeds the 99th percentile of max-JB values extracted from Gaussian data
/// of the same shape. Supplying externally estimated ranks is preferred.
inline RankEstimate estimate_rank_jb_null(const DataMatrix& data,
                                          std::uint64_t seed,
                                          int null_reps = 20, int restarts = 5,
                                          int max_iter = 500,
                                          double alpha = 0.8) {
  if (null_reps < 10)
    throw invalid_input_error("estimate_rank_jb_null: need >= 10 null reps");
  const DataMatrix centered =
      data.row_centered ? data : double_center(data);
  const Whitener wh = whiten(centered);
  const Index n = data.n();
  const Decomposition full = lngca_whitened(wh, n - 2, alpha, restarts, seed,
                                            max_iter, 1e-8);

  std::vector<double> null_values;
  null_values.reserve(static_cast<std::size_t>(null_reps));
  for (int b = 0; b < null_reps; ++b) {
    Rng rng(seed + 1 + static_cast<std::uint64_t>(b));
    const DataMatrix g =
        double_center(DataMatrix(rng.gaussian_matrix(n, data.p())));
    const Whitener wg = whiten(g);
    const Decomposition d1 =
        lngca_whitened(wg, 1, alpha, restarts, seed, max_iter, 1e-8);
    null_values.push_back(d1.jb_values(0));
  }
  std::sort(null_values.begin(), null_values.end());
  const std::size_t idx = static_cast<std::size_t>(
      std::min<double>(std::ceil(0.99 * null_reps) - 1, null_reps - 1));
  RankEstimate est;
  est.threshold = null_values[idx];
  est.jb_values = full.jb_values;
  est.rank = static_cast<Index>(
      (full.jb_values.array() > est.threshold).count());
  return est;
}

}  // namespace sing
