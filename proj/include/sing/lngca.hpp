#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "sing/errors.hpp"
#include "sing/nongauss.hpp"
#include "sing/preprocess.hpp"
#include "sing/rng.hpp"
#include "sing/sing_solver.hpp"
#include "sing/types.hpp"

namespace sing {

/// One-dataset decomposition: loadings, subject scores and per-component
/// non-Gaussianity, components ordered by descending JB.
struct Decomposition {
  Unmixing U;        // r x n semiorthogonal
  Matrix S;          // r x p loadings, S = U Xw
  Matrix M;          // n x r subject scores, M = L^- U^T
  Vector jb_values;  // descending
  bool converged = false;
  std::vector<double> objective_trace;  // best restart
  int iterations = 0;
  double max_feasibility_error = 0.0;
  int best_restart = 0;
};

/// r x n matrix with orthonormal rows: seeded Gaussian entries orthogonalized
/// by Householder QR, with column signs fixed by the R diagonal.
inline Matrix random_semiorthogonal(Index r, Index n, Rng& rng) {
  if (r < 1 || r > n)
    throw invalid_input_error("random_semiorthogonal: need 1 <= r <= n");
  const Matrix g = rng.gaussian_matrix(n, r);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, r);
  const Matrix r_factor = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  for (Index j = 0; j < r; ++j)
    if (r_factor(j, j) < 0) q.col(j) = -q.col(j);
  return q.transpose();
}

namespace detail {

inline int worker_threads() {
  if (const char* env = std::getenv("SING_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

/// V (V^T V)^{-1/2}, the closest matrix with orthonormal columns; falls back
/// to QR when the Gram matrix is near-singular.
inline Matrix symmetric_orthonormalize(const Matrix& V) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(V.transpose() * V);
  const Vector& lambda = eig.eigenvalues();
  if (lambda.minCoeff() <= 1e-12 * lambda.maxCoeff()) {
    Eigen::HouseholderQR<Matrix> qr(V);
    return qr.householderQ() * Matrix::Identity(V.rows(), V.cols());
  }
  const Vector inv_sqrt = lambda.array().rsqrt();
  return V * eig.eigenvectors() * inv_sqrt.asDiagonal() *
         eig.eigenvectors().transpose();
}

/// Fixed-point contrast iterations with symmetric decorrelation, alternating
/// the skewness map u <- E[x s^2] and the excess-kurtosis map
/// u <- E[x s^3] - 3 E[s^2] u. The JB objective is quartically flat around
/// Gaussian directions (its gradient vanishes to fifth order in the overlap
/// with a non-Gaussian component), so a gradient path from a random start can
/// stall before reaching a planted component; these maps shrink Gaussian
/// coordinates to the sample-noise floor and escape that region in a few
/// steps. Deterministic, used only to build initializations.
inline Matrix contrast_warm_start(const Matrix& Xw, Matrix V,
                                  int iterations = 30) {
  const double p = static_cast<double>(Xw.cols());
  for (int t = 0; t < iterations; ++t) {
    const Matrix S = V.transpose() * Xw;  // r x p
    Matrix Vnew(V.rows(), V.cols());
    if (t % 2 == 0) {
      const Matrix S2 = S.array().square().matrix();
      Vnew.noalias() = Xw * S2.transpose() / p;
    } else {
      const Matrix S3 = (S.array().square() * S.array()).matrix();
      const Vector m2 = S.array().square().rowwise().mean();
      Vnew.noalias() = Xw * S3.transpose() / p;
      Vnew -= V * (3.0 * m2).asDiagonal();
    }
    for (Index j = 0; j < Vnew.cols(); ++j)
      if (Vnew.col(j).norm() < 1e-12) Vnew.col(j) = V.col(j);
    V = symmetric_orthonormalize(Vnew);
  }
  return V;
}

}  // namespace detail

/// Initialization used by lngca for each restart: a seeded random
/// semiorthogonal matrix refined by the contrast warm start. Exposed so the
/// solver can be reproduced from identical initializations.
inline Matrix lngca_initial(const Matrix& Xw, Index r, Rng& rng) {
  Matrix V = random_semiorthogonal(r, Xw.rows(), rng).transpose();  // n x r
  return detail::contrast_warm_start(Xw, std::move(V)).transpose();
}

/// Single-dataset solve on an existing whitener. Runs `restarts` seeded
/// orthonormal initializations (concurrently, capped by SING_THREADS) and
/// keeps the lowest final objective; ties break on restart index, so the
/// result does not depend on scheduling.
inline Decomposition lngca_whitened(const Whitener& wh, Index r,
                                    double alpha = 0.8, int restarts = 20,
                                    std::uint64_t seed = 0,
                                    int max_iter = 1500, double tol = 1e-10,
                                    const LineSearchOptions& ls = {}) {
  const Index n = wh.whitened.rows();
  if (r < 1 || r > n - 2)
    throw invalid_rank_error("lngca: rank must satisfy 1 <= r <= n - 2, got " +
                             std::to_string(r) + " with n = " +
                             std::to_string(n));
  if (restarts < 1) throw invalid_input_error("lngca: restarts must be >= 1");
  detail::validate_alpha(alpha);

  // All initializations come from one seeded stream, drawn up front so that
  // concurrent execution cannot change them.
  Rng rng(seed);
  std::vector<Matrix> inits;
  inits.reserve(static_cast<std::size_t>(restarts));
  for (int i = 0; i < restarts; ++i)
    inits.push_back(lngca_initial(wh.whitened, r, rng).transpose());  // n x r

  const std::vector<detail::BlockData> data{{&wh.whitened, nullptr}};
  std::vector<detail::DescentReport> reports(
      static_cast<std::size_t>(restarts));
  std::vector<Matrix> finals(static_cast<std::size_t>(restarts));
  std::vector<std::exception_ptr> failures(
      static_cast<std::size_t>(restarts));

  const int threads =
      std::min(detail::worker_threads(), restarts);
  auto run_range = [&](int begin, int step) {
    for (int i = begin; i < restarts; i += step) {
      try {
        std::vector<Matrix> V{inits[static_cast<std::size_t>(i)]};
        reports[static_cast<std::size_t>(i)] = detail::curvilinear_descend(
            data, V, 0.0, 0, alpha, tol, max_iter, ls);
        finals[static_cast<std::size_t>(i)] = std::move(V[0]);
      } catch (...) {
        failures[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    run_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(run_range, t, threads);
    for (auto& th : pool) th.join();
  }
  for (int i = 0; i < restarts; ++i) {
    if (failures[static_cast<std::size_t>(i)]) {
      try {
        std::rethrow_exception(failures[static_cast<std::size_t>(i)]);
      } catch (const numeric_error& e) {
        throw numeric_error("restart " + std::to_string(i) + ": " + e.what());
      }
    }
  }

  int best = 0;
  for (int i = 1; i < restarts; ++i)
    if (reports[static_cast<std::size_t>(i)].trace.back() <
        reports[static_cast<std::size_t>(best)].trace.back())
      best = i;
  const detail::DescentReport& rep = reports[static_cast<std::size_t>(best)];

  Matrix U = finals[static_cast<std::size_t>(best)].transpose();  // r x n
  Matrix S = U * wh.whitened;
  Vector jb(r);
  for (Index l = 0; l < r; ++l) jb(l) = detail::jb_raw(S.row(l), alpha);

  std::vector<Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return jb(a) > jb(b); });

  Decomposition dec;
  dec.U.U.resize(r, n);
  dec.S.resize(r, S.cols());
  dec.jb_values.resize(r);
  for (Index l = 0; l < r; ++l) {
    dec.U.U.row(l) = U.row(order[static_cast<std::size_t>(l)]);
    dec.S.row(l) = S.row(order[static_cast<std::size_t>(l)]);
    dec.jb_values(l) = jb(order[static_cast<std::size_t>(l)]);
  }
  dec.M = wh.inverse * dec.U.U.transpose();
  dec.converged = rep.converged;
  dec.objective_trace = rep.trace;
  dec.iterations = rep.iterations;
  for (const auto& r_rep : reports)
    dec.max_feasibility_error =
        std::max(dec.max_feasibility_error, r_rep.max_feasibility_error);
  dec.best_restart = best;
  return dec;
}

/// Linear non-Gaussian component analysis of one dataset. Centers the data
/// if the row_centered flag is absent, whitens, and maximizes the summed JB
/// statistic over semiorthogonal unmixing matrices.
inline Decomposition lngca(const DataMatrix& data, Index r, double alpha = 0.8,
                           int restarts = 20, std::uint64_t seed = 0,
                           int max_iter = 1500, double tol = 1e-10) {
  const DataMatrix centered =
      data.row_centered ? data : double_center(data);
  const Whitener wh = whiten(centered);
  return lngca_whitened(wh, r, alpha, restarts, seed, max_iter, tol);
}

struct MixingEstimate {
  Matrix M;            // n x r
  std::string method;  // "ols" or "crossprod"
};

/// Subject scores by least squares: M = Xc S^T (S S^T)^-1, which reduces to
/// Xc S^T / p when S S^T = p I holds exactly. The raw cross-product variant
/// M = Xc S^T is available behind the flag.
inline MixingEstimate estimate_mixing_ols(const Matrix& S,
                                          const DataMatrix& data,
                                          bool raw_crossprod = false) {
  if (S.cols() != data.p())
    throw invalid_input_error(
        "estimate_mixing_ols: S columns must match data features");
  if (S.rows() < 1) throw invalid_input_error("estimate_mixing_ols: empty S");
  if (raw_crossprod)
    return {data.values * S.transpose(), "crossprod"};

  const Matrix gram = S * S.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success)
    throw numeric_error("estimate_mixing_ols: eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  if (lambda.minCoeff() <= 1e-12 * std::max(lambda.maxCoeff(), 1e-300))
    throw degenerate_input_error(
        "estimate_mixing_ols: S S^T is rank-deficient");
  Matrix M = gram.ldlt().solve(S * data.values.transpose()).transpose();
  return {std::move(M), "ols"};
}

}  // namespace sing
