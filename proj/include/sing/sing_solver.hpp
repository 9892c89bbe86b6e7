#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sing/errors.hpp"
#include "sing/nongauss.hpp"
#include "sing/types.hpp"

namespace sing {

/// Squared Frobenius distance between the rank-one projectors of x and y:
/// || xx^T/|x|^2 - yy^T/|y|^2 ||_F^2 = 2 (1 - cos^2 theta). Sign-invariant,
/// zero iff the vectors are collinear.
inline double chordal_distance(const Eigen::Ref<const Vector>& x,
                               const Eigen::Ref<const Vector>& y) {
  if (x.size() != y.size())
    throw invalid_input_error("chordal_distance: length mismatch");
  const double bx = x.squaredNorm();
  const double by = y.squaredNorm();
  if (bx < 1e-300 || by < 1e-300)
    throw domain_error("chordal_distance: zero vector");
  const double a = x.dot(y);
  return std::max(0.0, 2.0 - 2.0 * (a * a) / (bx * by));
}

enum class RhoExtent { small, medium, large };

inline const char* to_string(RhoExtent e) {
  switch (e) {
    case RhoExtent::small: return "small";
    case RhoExtent::medium: return "medium";
    case RhoExtent::large: return "large";
  }
  return "small";
}

/// Coupling penalty weight from the candidate joint loadings: "small" is the
/// summed JB of all candidates divided by 10; medium and large scale that by
/// 10 and 100. Candidate rows are assumed standardized.
inline double select_rho(const Matrix& Sx_joint, const Matrix& Sy_joint,
                         RhoExtent extent, double alpha = 0.8) {
  detail::validate_alpha(alpha);
  const double base = (detail::jb_sum_raw(Sx_joint, alpha) +
                       detail::jb_sum_raw(Sy_joint, alpha)) /
                      10.0;
  switch (extent) {
    case RhoExtent::small: return base;
    case RhoExtent::medium: return 10.0 * base;
    case RhoExtent::large: return 100.0 * base;
  }
  return base;
}

/// Numeric penalty weight passes through verbatim.
inline double select_rho(double numeric_rho) {
  if (!(numeric_rho > 0.0))
    throw invalid_input_error("select_rho: numeric rho must be positive");
  return numeric_rho;
}

inline double select_rho(const Matrix& Sx_joint, const Matrix& Sy_joint,
                         const std::variant<RhoExtent, double>& extent,
                         double alpha = 0.8) {
  if (std::holds_alternative<double>(extent))
    return select_rho(std::get<double>(extent));
  return select_rho(Sx_joint, Sy_joint, std::get<RhoExtent>(extent), alpha);
}

struct LineSearchOptions {
  double tau0 = 0.01;
  double backtrack = 0.5;
  double armijo_c = 1e-4;
  int max_backtracks = 30;
};

/// Two-dataset curvilinear problem: maximize total JB of both component sets
/// minus rho times the chordal coupling on the first r_j matched columns,
/// over semiorthogonal Ux, Uy (joint rows first).
struct JointProblem {
  Matrix Xw, Yw;        // whitened data, n x p each
  Matrix invLx, invLy;  // generalized inverse whiteners, n x n
  Matrix Ux0, Uy0;      // initial unmixing matrices, r x n
  double rho = 0.0;
  Index r_j = 0;
  double alpha = 0.8;
  double tol = 1e-10;
  int max_iter = 1500;
  LineSearchOptions line_search{};
};

struct JointSolution {
  Unmixing Ux, Uy;
  std::vector<double> objective_trace;
  bool converged = false;
  double joint_distance = 0.0;  // final sum of chordal distances, l < r_j
  int iterations = 0;
  double max_feasibility_error = 0.0;  // max ||UU^T - I||_F over all iterates
  std::string step_size_mode;          // "shared" or "per-block"
};

namespace detail {

struct BlockData {
  const Matrix* Xw = nullptr;    // n x p
  const Matrix* invL = nullptr;  // n x n, only needed when the penalty is on
};

inline double chordal_raw(const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& y) {
  const double a = x.dot(y);
  return 2.0 - 2.0 * (a * a) / (x.squaredNorm() * y.squaredNorm());
}

/// Objective of the joint problem at V_b = U_b^T (orthonormal columns):
/// -sum_b sum_l f(V_b[:,l]^T Xw_b) + rho * sum_{l<rj} d(invLx Vx[:,l], invLy Vy[:,l]).
inline double blocks_objective(const std::vector<BlockData>& data,
                               const std::vector<Matrix>& V, double rho,
                               Index rj, double alpha) {
  double obj = 0.0;
  for (std::size_t b = 0; b < data.size(); ++b) {
    const Matrix S = V[b].transpose() * (*data[b].Xw);
    obj -= jb_sum_raw(S, alpha);
  }
  if (rho > 0.0 && rj > 0 && data.size() == 2) {
    const Matrix mx = (*data[0].invL) * V[0].leftCols(rj);
    const Matrix my = (*data[1].invL) * V[1].leftCols(rj);
    for (Index l = 0; l < rj; ++l)
      obj += rho * chordal_raw(mx.col(l), my.col(l));
  }
  return obj;
}

/// Euclidean gradient of blocks_objective with respect to each V_b.
inline void blocks_gradient(const std::vector<BlockData>& data,
                            const std::vector<Matrix>& V, double rho, Index rj,
                            double alpha, std::vector<Matrix>& G) {
  G.resize(data.size());
  for (std::size_t b = 0; b < data.size(); ++b) {
    const Matrix& Xw = *data[b].Xw;
    const double p = static_cast<double>(Xw.cols());
    const Matrix S = V[b].transpose() * Xw;  // r x p
    const Eigen::ArrayXXd S2 = S.array().square();
    const Eigen::ArrayXXd S3 = S2 * S.array();
    const Vector m3 = S3.rowwise().mean();
    const Vector m4 = S2.square().rowwise().mean();
    const Vector c3 = -(alpha * 6.0 / p) * m3;
    const Vector c4 = -((1.0 - alpha) * 8.0 / p) * (m4.array() - 3.0).matrix();
    const Matrix C = c3.asDiagonal() * S2.matrix() + c4.asDiagonal() * S3.matrix();
    G[b].noalias() = Xw * C.transpose();  // n x r
  }
  if (rho > 0.0 && rj > 0 && data.size() == 2) {
    const Matrix mx = (*data[0].invL) * V[0].leftCols(rj);
    const Matrix my = (*data[1].invL) * V[1].leftCols(rj);
    Matrix Px(mx.rows(), rj), Py(my.rows(), rj);
    for (Index l = 0; l < rj; ++l) {
      const double a = mx.col(l).dot(my.col(l));
      const double bx = mx.col(l).squaredNorm();
      const double by = my.col(l).squaredNorm();
      const double scale = 4.0 * a / (bx * by);
      Px.col(l) = scale * ((a / bx) * mx.col(l) - my.col(l));
      Py.col(l) = scale * ((a / by) * my.col(l) - mx.col(l));
    }
    G[0].leftCols(rj) += rho * ((*data[0].invL) * Px);
    G[1].leftCols(rj) += rho * ((*data[1].invL) * Py);
  }
}

/// Cayley retraction along the skew field W: solves
/// (I + tau/2 W) V(tau) = (I - tau/2 W) V, preserving V^T V = I.
inline Matrix cayley_step(const Matrix& V, const Matrix& W, double tau) {
  const Index n = V.rows();
  const Matrix A = Matrix::Identity(n, n) + (0.5 * tau) * W;
  return A.partialPivLu().solve(V - (0.5 * tau) * (W * V));
}

inline double orthonormality_error(const Matrix& V) {
  const Index r = V.cols();
  return (V.transpose() * V - Matrix::Identity(r, r)).norm();
}

struct DescentReport {
  std::vector<double> trace;
  bool converged = false;
  int iterations = 0;
  double max_feasibility_error = 0.0;
};

/// Monotone curvilinear descent with Armijo backtracking and a step size
/// shared across blocks. The directional derivative along the Cayley curve at
/// tau = 0 equals -0.5 * sum_b ||W_b||_F^2. The first line search starts at
/// tau0; later ones start from the safeguarded Barzilai-Borwein estimate, so
/// the step adapts to curvature (a fixed start needs ~10 backtracks per
/// iteration once the penalty Hessian scale reaches rho, and then max_iter is
/// not enough to close the coupling).
inline DescentReport curvilinear_descend(const std::vector<BlockData>& data,
                                         std::vector<Matrix>& V, double rho,
                                         Index rj, double alpha, double tol,
                                         int max_iter,
                                         const LineSearchOptions& ls) {
  DescentReport rep;
  double f = blocks_objective(data, V, rho, rj, alpha);
  if (!std::isfinite(f))
    throw numeric_error("curvilinear: non-finite objective at iteration 0");
  rep.trace.push_back(f);
  for (const Matrix& v : V)
    rep.max_feasibility_error =
        std::max(rep.max_feasibility_error, orthonormality_error(v));

  std::vector<Matrix> G, W(V.size()), trial(V.size());
  std::vector<Matrix> prev_V, prev_G;
  for (int iter = 1; iter <= max_iter; ++iter) {
    blocks_gradient(data, V, rho, rj, alpha, G);

    double tau_init = ls.tau0;
    if (!prev_V.empty()) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t b = 0; b < V.size(); ++b) {
        const Matrix s = V[b] - prev_V[b];
        const Matrix y = G[b] - prev_G[b];
        ss += s.squaredNorm();
        sy += s.cwiseProduct(y).sum();
      }
      if (std::isfinite(ss) && std::isfinite(sy) && sy > 0.0)
        tau_init = std::clamp(ss / sy, 1e-12, 1e3);
    }

    double descent = 0.0;
    for (std::size_t b = 0; b < V.size(); ++b) {
      W[b].noalias() = G[b] * V[b].transpose();
      W[b] -= W[b].transpose().eval();
      descent += 0.5 * W[b].squaredNorm();
    }

    double tau = tau_init;
    double f_new = f;
    bool accepted = false;
    bool saw_nonfinite = false;
    for (int bt = 0; bt <= ls.max_backtracks; ++bt) {
      for (std::size_t b = 0; b < V.size(); ++b)
        trial[b] = cayley_step(V[b], W[b], tau);
      f_new = blocks_objective(data, trial, rho, rj, alpha);
      if (!std::isfinite(f_new)) {
        saw_nonfinite = true;
      } else if (f_new <= f - ls.armijo_c * tau * descent) {
        accepted = true;
        break;
      }
      tau *= ls.backtrack;
    }
    if (!accepted) {
      if (saw_nonfinite)
        throw numeric_error("curvilinear: non-finite objective at iteration " +
                            std::to_string(iter));
      break;  // no decrease along the curve: stationary at float precision
    }

    prev_V = V;
    prev_G = G;
    const double rel = std::abs(f_new - f) / std::max(1.0, std::abs(f));
    for (std::size_t b = 0; b < V.size(); ++b) {
      V[b] = std::move(trial[b]);
      trial[b] = Matrix();
      rep.max_feasibility_error =
          std::max(rep.max_feasibility_error, orthonormality_error(V[b]));
    }
    f = f_new;
    rep.trace.push_back(f);
    rep.iterations = iter;
    if (rel < tol) {
      rep.converged = true;
      break;
    }
  }
  return rep;
}

inline void validate_unmixing_input(const Matrix& U, Index n,
                                    const char* name) {
  if (U.rows() < 1 || U.cols() != n)
    throw invalid_input_error(std::string(name) + ": expected r x n matrix");
  if (semiorthogonality_error(U) > 1e-8)
    throw invalid_input_error(std::string(name) +
                              ": initial unmixing is not semiorthogonal");
}

}  // namespace detail

/// Value of the joint objective at (Ux, Uy); feasibility is not required, so
/// this is also usable for finite-difference checks.
inline double joint_objective(const JointProblem& pb, const Matrix& Ux,
                              const Matrix& Uy) {
  const std::vector<detail::BlockData> data{{&pb.Xw, &pb.invLx},
                                            {&pb.Yw, &pb.invLy}};
  const std::vector<Matrix> V{Ux.transpose(), Uy.transpose()};
  return detail::blocks_objective(data, V, pb.rho, pb.r_j, pb.alpha);
}

/// Euclidean gradient of the joint objective with respect to the entries of
/// Ux and Uy (each r x n, matching the unmixing layout).
inline std::pair<Matrix, Matrix> joint_gradient(const JointProblem& pb,
                                                const Matrix& Ux,
                                                const Matrix& Uy) {
  const std::vector<detail::BlockData> data{{&pb.Xw, &pb.invLx},
                                            {&pb.Yw, &pb.invLy}};
  const std::vector<Matrix> V{Ux.transpose(), Uy.transpose()};
  std::vector<Matrix> G;
  detail::blocks_gradient(data, V, pb.rho, pb.r_j, pb.alpha, G);
  return {G[0].transpose(), G[1].transpose()};
}

/// Feasible-path curvilinear solver for the joint problem. With rho > 0 the
/// two unmixing matrices advance together under one shared step size; with
/// rho = 0 (or r_j = 0) the problem decouples exactly and each dataset runs
/// its own line search, reproducing two independent single-dataset solves.
inline JointSolution curvilinear_solve(const JointProblem& pb) {
  const Index n = pb.Xw.rows();
  if (pb.Yw.rows() != n)
    throw invalid_input_error("curvilinear_solve: Xw and Yw row mismatch");
  detail::validate_unmixing_input(pb.Ux0, n, "Ux0");
  detail::validate_unmixing_input(pb.Uy0, n, "Uy0");
  const Index rx = pb.Ux0.rows();
  const Index ry = pb.Uy0.rows();
  if (pb.r_j < 0 || pb.r_j > std::min(rx, ry))
    throw invalid_input_error("curvilinear_solve: r_j exceeds min(r_x, r_y)");
  if (pb.rho < 0.0)
    throw invalid_input_error("curvilinear_solve: rho must be nonnegative");
  if (pb.rho > 0.0 && pb.r_j > 0 &&
      (pb.invLx.rows() != n || pb.invLx.cols() != n || pb.invLy.rows() != n ||
       pb.invLy.cols() != n))
    throw invalid_input_error("curvilinear_solve: invLx/invLy must be n x n");
  detail::validate_alpha(pb.alpha);
  if (pb.tol <= 0 || pb.max_iter < 1)
    throw invalid_input_error("curvilinear_solve: bad tol or max_iter");

  JointSolution sol;
  if (pb.rho > 0.0 && pb.r_j > 0) {
    const std::vector<detail::BlockData> data{{&pb.Xw, &pb.invLx},
                                              {&pb.Yw, &pb.invLy}};
    std::vector<Matrix> V{pb.Ux0.transpose(), pb.Uy0.transpose()};
    const detail::DescentReport rep = detail::curvilinear_descend(
        data, V, pb.rho, pb.r_j, pb.alpha, pb.tol, pb.max_iter,
        pb.line_search);
    sol.Ux = Unmixing(V[0].transpose());
    sol.Uy = Unmixing(V[1].transpose());
    sol.objective_trace = rep.trace;
    sol.converged = rep.converged;
    sol.iterations = rep.iterations;
    sol.max_feasibility_error = rep.max_feasibility_error;
    sol.step_size_mode = "shared";
  } else {
    const std::vector<detail::BlockData> data_x{{&pb.Xw, nullptr}};
    const std::vector<detail::BlockData> data_y{{&pb.Yw, nullptr}};
    std::vector<Matrix> Vx{pb.Ux0.transpose()};
    std::vector<Matrix> Vy{pb.Uy0.transpose()};
    const detail::DescentReport rx_rep = detail::curvilinear_descend(
        data_x, Vx, 0.0, 0, pb.alpha, pb.tol, pb.max_iter, pb.line_search);
    const detail::DescentReport ry_rep = detail::curvilinear_descend(
        data_y, Vy, 0.0, 0, pb.alpha, pb.tol, pb.max_iter, pb.line_search);
    sol.Ux = Unmixing(Vx[0].transpose());
    sol.Uy = Unmixing(Vy[0].transpose());
    const std::size_t len =
        std::max(rx_rep.trace.size(), ry_rep.trace.size());
    sol.objective_trace.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      const double fx = rx_rep.trace[std::min(i, rx_rep.trace.size() - 1)];
      const double fy = ry_rep.trace[std::min(i, ry_rep.trace.size() - 1)];
      sol.objective_trace[i] = fx + fy;
    }
    sol.converged = rx_rep.converged && ry_rep.converged;
    sol.iterations = std::max(rx_rep.iterations, ry_rep.iterations);
    sol.max_feasibility_error = std::max(rx_rep.max_feasibility_error,
                                         ry_rep.max_feasibility_error);
    sol.step_size_mode = "per-block";
  }

  if (pb.r_j > 0 && pb.invLx.size() > 0 && pb.invLy.size() > 0) {
    const Matrix mx = pb.invLx * sol.Ux.U.topRows(pb.r_j).transpose();
    const Matrix my = pb.invLy * sol.Uy.U.topRows(pb.r_j).transpose();
    double dist = 0.0;
    for (Index l = 0; l < pb.r_j; ++l)
      dist += chordal_distance(mx.col(l), my.col(l));
    sol.joint_distance = dist;
  }
  return sol;
}

}  // namespace sing
