#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sing/errors.hpp"
#include "sing/rng.hpp"
#include "sing/sing_solver.hpp"
#include "sing/types.hpp"

namespace sing {

/// Component alignment across datasets. Matched pairs come first in both
/// orders, sorted by ascending chordal distance; unmatched components keep
/// their original relative order at the tail.
struct MatchResult {
  std::vector<Index> order_x, order_y;
  std::vector<double> matched_distances;  // ascending, length min(r_x, r_y)
  Unmixing Ux_reordered, Uy_reordered;
  Matrix Mx_reordered, My_reordered;
};

/// Greedily pair the globally closest unmatched score columns by chordal
/// distance and reorder both unmixing matrices accordingly. Score columns
/// are expected to be column-centered.
inline MatchResult greedy_match(const Matrix& Mx, const Matrix& My,
                                const Unmixing& Ux, const Unmixing& Uy) {
  const Index n = Mx.rows();
  const Index rx = Mx.cols();
  const Index ry = My.cols();
  if (My.rows() != n)
    throw invalid_input_error("greedy_match: Mx and My row mismatch");
  if (Ux.r() != rx || Uy.r() != ry || Ux.n() != n || Uy.n() != n)
    throw invalid_input_error(
        "greedy_match: unmixing shapes do not match score matrices");
  for (Index j = 0; j < rx; ++j)
    if (Mx.col(j).norm() < 1e-150)
      throw degenerate_input_error("greedy_match: Mx column " +
                                   std::to_string(j) + " has zero norm");
  for (Index j = 0; j < ry; ++j)
    if (My.col(j).norm() < 1e-150)
      throw degenerate_input_error("greedy_match: My column " +
                                   std::to_string(j) + " has zero norm");

  Matrix dist(rx, ry);
  for (Index i = 0; i < rx; ++i)
    for (Index j = 0; j < ry; ++j)
      dist(i, j) = chordal_distance(Mx.col(i), My.col(j));

  const Index pairs = std::min(rx, ry);
  std::vector<bool> used_x(static_cast<std::size_t>(rx), false);
  std::vector<bool> used_y(static_cast<std::size_t>(ry), false);
  MatchResult res;
  for (Index k = 0; k < pairs; ++k) {
    Index bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < rx; ++i) {
      if (used_x[static_cast<std::size_t>(i)]) continue;
      for (Index j = 0; j < ry; ++j) {
        if (used_y[static_cast<std::size_t>(j)]) continue;
        if (dist(i, j) < best) {
          best = dist(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    used_x[static_cast<std::size_t>(bi)] = true;
    used_y[static_cast<std::size_t>(bj)] = true;
    res.order_x.push_back(bi);
    res.order_y.push_back(bj);
    res.matched_distances.push_back(best);
  }
  for (Index i = 0; i < rx; ++i)
    if (!used_x[static_cast<std::size_t>(i)]) res.order_x.push_back(i);
  for (Index j = 0; j < ry; ++j)
    if (!used_y[static_cast<std::size_t>(j)]) res.order_y.push_back(j);

  res.Ux_reordered.U.resize(rx, n);
  res.Mx_reordered.resize(n, rx);
  for (Index i = 0; i < rx; ++i) {
    res.Ux_reordered.U.row(i) = Ux.U.row(res.order_x[static_cast<std::size_t>(i)]);
    res.Mx_reordered.col(i) = Mx.col(res.order_x[static_cast<std::size_t>(i)]);
  }
  res.Uy_reordered.U.resize(ry, n);
  res.My_reordered.resize(n, ry);
  for (Index j = 0; j < ry; ++j) {
    res.Uy_reordered.U.row(j) = Uy.U.row(res.order_y[static_cast<std::size_t>(j)]);
    res.My_reordered.col(j) = My.col(res.order_y[static_cast<std::size_t>(j)]);
  }
  return res;
}

/// Joint-rank permutation test report. Pairs are the matched columns (i, i);
/// p-values carry max-statistic familywise error correction.
struct JointRankTest {
  Index r_j = 0;
  std::vector<double> pvalues_fwer;
  std::vector<double> correlations;  // signed Pearson, matched pairs
  int n_perm = 0;
  double alpha_level = 0.01;
  std::uint64_t seed = 0;
};

/// Permutation test of the joint rank: the observed statistic per matched
/// pair is |Pearson correlation|; the null permutes subject rows of My and
/// takes the maximum |correlation| over all column pairs each replicate.
inline JointRankTest perm_test_joint_rank(const Matrix& Mx, const Matrix& My,
                                          int n_perm = 1000,
                                          double alpha_level = 0.01,
                                          std::uint64_t seed = 0) {
  const Index n = Mx.rows();
  if (My.rows() != n)
    throw invalid_input_error("perm_test_joint_rank: row mismatch");
  if (n < 5)
    throw insufficient_data_error(
        "perm_test_joint_rank: need at least 5 subjects");
  if (n_perm < 100)
    throw insufficient_data_error(
        "perm_test_joint_rank: need at least 100 permutations");
  if (!(alpha_level > 0.0 && alpha_level < 1.0))
    throw invalid_input_error("perm_test_joint_rank: alpha_level in (0,1)");

  auto standardize_cols = [&](const Matrix& m, const char* name) {
    Matrix out = m;
    for (Index j = 0; j < m.cols(); ++j) {
      out.col(j).array() -= out.col(j).mean();
      const double norm = out.col(j).norm();
      if (norm < 1e-150)
        throw degenerate_input_error(std::string("perm_test_joint_rank: ") +
                                     name + " column " + std::to_string(j) +
                                     " is constant");
      out.col(j) /= norm;
    }
    return out;
  };
  const Matrix X = standardize_cols(Mx, "Mx");
  const Matrix Y = standardize_cols(My, "My");

  const Index pairs = std::min(X.cols(), Y.cols());
  JointRankTest test;
  test.n_perm = n_perm;
  test.alpha_level = alpha_level;
  test.seed = seed;
  for (Index i = 0; i < pairs; ++i)
    test.correlations.push_back(X.col(i).dot(Y.col(i)));

  Rng rng(seed);
  std::vector<double> null_max(static_cast<std::size_t>(n_perm));
  Matrix Yp(n, Y.cols());
  for (int t = 0; t < n_perm; ++t) {
    const std::vector<Index> perm = rng.permutation(n);
    for (Index i = 0; i < n; ++i)
      Yp.row(i) = Y.row(perm[static_cast<std::size_t>(i)]);
    null_max[static_cast<std::size_t>(t)] =
        (X.transpose() * Yp).cwiseAbs().maxCoeff();
  }

  test.pvalues_fwer.resize(static_cast<std::size_t>(pairs));
  for (Index i = 0; i < pairs; ++i) {
    const double obs = std::abs(test.correlations[static_cast<std::size_t>(i)]);
    int count = 0;
    for (double nm : null_max)
      if (nm >= obs) ++count;
    test.pvalues_fwer[static_cast<std::size_t>(i)] =
        static_cast<double>(1 + count) / static_cast<double>(n_perm + 1);
  }
  test.r_j = static_cast<Index>(
      std::count_if(test.pvalues_fwer.begin(), test.pvalues_fwer.end(),
                    [&](double p) { return p < alpha_level; }));
  return test;
}

/// Average matched joint score columns: unit-normalize each input column,
/// take the midpoint, renormalize. Columns must already be sign-aligned.
inline Matrix average_joint_scores(const Matrix& Mx_joint,
                                   const Matrix& My_joint) {
  if (Mx_joint.rows() != My_joint.rows() ||
      Mx_joint.cols() != My_joint.cols())
    throw invalid_input_error("average_joint_scores: shape mismatch");
  Matrix out(Mx_joint.rows(), Mx_joint.cols());
  for (Index l = 0; l < Mx_joint.cols(); ++l) {
    const double nx = Mx_joint.col(l).norm();
    const double ny = My_joint.col(l).norm();
    if (nx < 1e-150 || ny < 1e-150)
      throw degenerate_input_error("average_joint_scores: column " +
                                   std::to_string(l) + " has zero norm");
    const Vector x = Mx_joint.col(l) / nx;
    const Vector y = My_joint.col(l) / ny;
    // Correlation decides alignment; for the mean-zero score columns this
    // equals the cosine.
    const Vector xc = (x.array() - x.mean()).matrix();
    const Vector yc = (y.array() - y.mean()).matrix();
    const double align = (xc.norm() > 1e-150 && yc.norm() > 1e-150)
                             ? xc.dot(yc)
                             : x.dot(y);
    if (align < 0.0)
      throw alignment_error(
          "average_joint_scores: column " + std::to_string(l) +
          " is anti-aligned across datasets; apply a sign correction first");
    Vector avg = 0.5 * (x + y);
    out.col(l) = avg / avg.norm();
  }
  return out;
}

/// Mean chordal distance between corresponding score columns.
inline double pmse(const Matrix& Mx, const Matrix& My) {
  if (Mx.rows() != My.rows() || Mx.cols() != My.cols())
    throw invalid_input_error("pmse: shape mismatch");
  if (Mx.cols() == 0) return 0.0;
  double total = 0.0;
  for (Index l = 0; l < Mx.cols(); ++l)
    total += chordal_distance(Mx.col(l), My.col(l));
  return total / static_cast<double>(Mx.cols());
}

}  // namespace sing
