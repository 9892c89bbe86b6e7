#include <catch2/catch_amalgamated.hpp>

#include "sing/lngca.hpp"
#include "sing/matcher.hpp"
#include "sing/rng.hpp"

using namespace sing;

namespace {

Matrix centered_gaussian(Index n, Index r, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m = rng.gaussian_matrix(n, r);
  m.rowwise() -= m.colwise().mean().eval();
  return m;
}

Unmixing dummy_unmixing(Index r, Index n, std::uint64_t seed) {
  Rng rng(seed);
  return Unmixing(random_semiorthogonal(r, n, rng));
}

}  // namespace

TEST_CASE("greedy_match on identical score matrices is the identity",
          "[matcher]") {
  const Matrix M = centered_gaussian(20, 4, 11);
  const Unmixing Ux = dummy_unmixing(4, 20, 12);
  const Unmixing Uy = dummy_unmixing(4, 20, 13);
  const MatchResult res = greedy_match(M, M, Ux, Uy);
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(res.order_x[i] == res.order_y[i]);
    REQUIRE(res.matched_distances[i] < 1e-12);
  }
  REQUIRE((res.Ux_reordered.U.row(0) - Ux.U.row(res.order_x[0])).norm() ==
          0.0);
}

TEST_CASE("greedy_match finds a reversed column order", "[matcher]") {
  const Matrix Mx = centered_gaussian(20, 4, 15);
  const Matrix My = Mx.rowwise().reverse();
  const MatchResult res =
      greedy_match(Mx, My, dummy_unmixing(4, 20, 16), dummy_unmixing(4, 20, 17));
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(res.order_y[i] == 3 - res.order_x[i]);
    REQUIRE(res.matched_distances[i] < 1e-12);
  }
}

TEST_CASE("greedy_match pulls a planted shared column to the front",
          "[matcher]") {
  const Matrix Mx = centered_gaussian(20, 3, 19);
  Matrix My = centered_gaussian(20, 4, 20);
  My.col(2) = -Mx.col(1);  // sign-flipped copy; chordal distance is sign-free
  const MatchResult res =
      greedy_match(Mx, My, dummy_unmixing(3, 20, 21), dummy_unmixing(4, 20, 22));
  REQUIRE(res.order_x[0] == 1);
  REQUIRE(res.order_y[0] == 2);
  REQUIRE(res.matched_distances[0] < 1e-12);
  REQUIRE(res.matched_distances.size() == 3);
}

TEST_CASE("greedy picks always equal the brute-force minimum", "[matcher]") {
  const Index rx = 5, ry = 4, n = 15;
  const Matrix Mx = centered_gaussian(n, rx, 23);
  const Matrix My = centered_gaussian(n, ry, 24);
  const MatchResult res =
      greedy_match(Mx, My, dummy_unmixing(rx, n, 25), dummy_unmixing(ry, n, 26));

  // Independent distance matrix straight from the projector formula.
  Matrix dist(rx, ry);
  for (Index i = 0; i < rx; ++i)
    for (Index j = 0; j < ry; ++j) {
      const Matrix px = Mx.col(i) * Mx.col(i).transpose() /
                        Mx.col(i).squaredNorm();
      const Matrix py = My.col(j) * My.col(j).transpose() /
                        My.col(j).squaredNorm();
      dist(i, j) = (px - py).squaredNorm();
    }
  std::vector<bool> used_x(rx, false), used_y(ry, false);
  for (std::size_t k = 0; k < res.matched_distances.size(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < rx; ++i)
      for (Index j = 0; j < ry; ++j)
        if (!used_x[static_cast<std::size_t>(i)] &&
            !used_y[static_cast<std::size_t>(j)])
          best = std::min(best, dist(i, j));
    REQUIRE(std::abs(res.matched_distances[k] - best) < 1e-12);
    used_x[static_cast<std::size_t>(res.order_x[k])] = true;
    used_y[static_cast<std::size_t>(res.order_y[k])] = true;
    if (k > 0)
      REQUIRE(res.matched_distances[k] >= res.matched_distances[k - 1]);
  }
  REQUIRE(semiorthogonality_error(res.Ux_reordered.U) < 1e-8);
  REQUIRE(semiorthogonality_error(res.Uy_reordered.U) < 1e-8);
}

TEST_CASE("greedy_match rejects zero-norm columns", "[matcher]") {
  Matrix Mx = centered_gaussian(10, 3, 27);
  Mx.col(1).setZero();
  REQUIRE_THROWS_WITH(
      greedy_match(Mx, centered_gaussian(10, 3, 28),
                   dummy_unmixing(3, 10, 29), dummy_unmixing(3, 10, 30)),
      Catch::Matchers::ContainsSubstring("column 1"));
}

TEST_CASE("perm_test_joint_rank detects an exact duplicated column",
          "[matcher]") {
  const Index n = 48;
  const Matrix Mx = centered_gaussian(n, 3, 31);
  Matrix My = centered_gaussian(n, 3, 32);
  My.col(0) = Mx.col(0);
  const JointRankTest t = perm_test_joint_rank(Mx, My, 200, 0.01, 33);
  REQUIRE(t.pvalues_fwer[0] == 1.0 / 201.0);  // minimum achievable
  REQUIRE(t.r_j >= 1);
  REQUIRE(std::abs(t.correlations[0] - 1.0) < 1e-12);
}

TEST_CASE("perm_test_joint_rank holds its level on independent scores",
          "[matcher]") {
  int false_positives = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix Mx = centered_gaussian(48, 4, 100 + rep);
    const Matrix My = centered_gaussian(48, 4, 200 + rep);
    const JointRankTest t =
        perm_test_joint_rank(Mx, My, 300, 0.01, 300 + rep);
    if (t.r_j > 0) ++false_positives;
  }
  REQUIRE(false_positives <= 2);
}

TEST_CASE("perm_test_joint_rank p-values are monotone over matched pairs",
          "[matcher]") {
  const Matrix Mx = centered_gaussian(30, 4, 41);
  Matrix My = centered_gaussian(30, 4, 42);
  My.col(0) += 3.0 * Mx.col(0);  // strong pair first
  My.col(1) += 0.8 * Mx.col(1);  // weaker second
  const JointRankTest t = perm_test_joint_rank(Mx, My, 300, 0.05, 43);
  // Pairs fed in matched order; check monotonicity after sorting by |corr|.
  std::vector<std::size_t> idx{0, 1, 2, 3};
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(t.correlations[a]) > std::abs(t.correlations[b]);
  });
  for (std::size_t k = 1; k < idx.size(); ++k)
    REQUIRE(t.pvalues_fwer[idx[k]] >= t.pvalues_fwer[idx[k - 1]]);
}

TEST_CASE("perm_test_joint_rank is invariant to column sign flips",
          "[matcher]") {
  const Matrix Mx = centered_gaussian(25, 3, 51);
  Matrix My = centered_gaussian(25, 3, 52);
  My.col(1) += 2.0 * Mx.col(1);
  const JointRankTest a = perm_test_joint_rank(Mx, My, 200, 0.01, 53);
  Matrix My_flipped = My;
  My_flipped.col(0) = -My_flipped.col(0);
  My_flipped.col(2) = -My_flipped.col(2);
  const JointRankTest b = perm_test_joint_rank(Mx, My_flipped, 200, 0.01, 53);
  REQUIRE(a.pvalues_fwer == b.pvalues_fwer);
  REQUIRE(a.r_j == b.r_j);
}

TEST_CASE("perm_test_joint_rank determinism and validation", "[matcher]") {
  const Matrix Mx = centered_gaussian(12, 2, 61);
  const Matrix My = centered_gaussian(12, 2, 62);
  const JointRankTest a = perm_test_joint_rank(Mx, My, 150, 0.01, 7);
  const JointRankTest b = perm_test_joint_rank(Mx, My, 150, 0.01, 7);
  REQUIRE(a.pvalues_fwer == b.pvalues_fwer);
  REQUIRE(a.correlations == b.correlations);

  REQUIRE_THROWS_AS(perm_test_joint_rank(Mx, My, 50, 0.01, 1),
                    insufficient_data_error);
  REQUIRE_THROWS_AS(perm_test_joint_rank(centered_gaussian(4, 2, 63),
                                         centered_gaussian(4, 2, 64), 200,
                                         0.01, 1),
                    insufficient_data_error);
  Matrix constant = Matrix::Ones(12, 2);
  REQUIRE_THROWS_AS(perm_test_joint_rank(constant, My, 200, 0.01, 1),
                    degenerate_input_error);
}

TEST_CASE("average_joint_scores analytic cases", "[matcher]") {
  const Matrix M = centered_gaussian(15, 3, 71);

  SECTION("identical inputs give unit-normalized columns") {
    const Matrix avg = average_joint_scores(M, M);
    for (Index l = 0; l < 3; ++l) {
      REQUIRE(std::abs(avg.col(l).norm() - 1.0) < 1e-12);
      REQUIRE(chordal_distance(avg.col(l), M.col(l)) < 1e-12);
    }
  }
  SECTION("scaling invariance") {
    const Matrix avg = average_joint_scores(M, 3.0 * M);
    for (Index l = 0; l < 3; ++l)
      REQUIRE((avg.col(l) - M.col(l) / M.col(l).norm()).norm() < 1e-12);
  }
  SECTION("normalized bisector of positively correlated columns") {
    Rng rng(72);
    Matrix My = M + 0.5 * rng.gaussian_matrix(15, 3);
    const Matrix avg = average_joint_scores(M, My);
    for (Index l = 0; l < 3; ++l) {
      const Vector x = M.col(l) / M.col(l).norm();
      const Vector y = My.col(l) / My.col(l).norm();
      Vector bisector = 0.5 * (x + y);
      bisector /= bisector.norm();
      REQUIRE((avg.col(l) - bisector).norm() < 1e-12);
    }
  }
  SECTION("anti-aligned columns are an error") {
    REQUIRE_THROWS_AS(average_joint_scores(M, -M), alignment_error);
  }
  SECTION("shape mismatch") {
    REQUIRE_THROWS_AS(average_joint_scores(M, M.leftCols(2)),
                      invalid_input_error);
  }
}

TEST_CASE("pmse averages per-column chordal distances", "[matcher]") {
  const Matrix Mx = centered_gaussian(12, 3, 81);
  const Matrix My = centered_gaussian(12, 3, 82);
  double expected = 0.0;
  for (Index l = 0; l < 3; ++l)
    expected += chordal_distance(Mx.col(l), My.col(l)) / 3.0;
  REQUIRE(std::abs(pmse(Mx, My) - expected) < 1e-12);
  REQUIRE(pmse(Mx, Mx) < 1e-12);
  REQUIRE_THROWS_AS(pmse(Mx, My.leftCols(2)), invalid_input_error);
}
