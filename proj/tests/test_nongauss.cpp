#include <algorithm>
#include <numeric>

#include <catch2/catch_amalgamated.hpp>

#include "sing/nongauss.hpp"
#include "sing/rng.hpp"

using namespace sing;

namespace {

// Independent brute-force evaluation of the JB formula, kept free of any
// library moment helpers.
double jb_brute_force(const Eigen::RowVectorXd& s, double alpha) {
  const double p = static_cast<double>(s.size());
  double sum3 = 0.0, sum4 = 0.0;
  for (Index j = 0; j < s.size(); ++j) {
    sum3 += s(j) * s(j) * s(j);
    sum4 += s(j) * s(j) * s(j) * s(j);
  }
  const double skew_part = sum3 / p;
  const double kurt_part = sum4 / p - 3.0;
  return alpha * skew_part * skew_part +
         (1.0 - alpha) * kurt_part * kurt_part;
}

Eigen::RowVectorXd standardized_row(Eigen::RowVectorXd s) {
  s.array() -= s.mean();
  s /= std::sqrt(s.squaredNorm() / static_cast<double>(s.size()));
  return s;
}

Eigen::RowVectorXd moment_matched_row() {
  Eigen::RowVectorXd s(6);
  const double a = std::sqrt(3.0);
  s << a, -a, 0, 0, 0, 0;  // m2 = 1, m3 = 0, m4 = 3
  return s;
}

Eigen::RowVectorXd alternating_row(Index p) {
  Eigen::RowVectorXd s(p);
  for (Index j = 0; j < p; ++j) s(j) = (j % 2 == 0) ? 1.0 : -1.0;
  return s;
}

}  // namespace

TEST_CASE("jb_statistic unit values", "[nongauss]") {
  REQUIRE(jb_statistic(moment_matched_row()) < 1e-12);
  REQUIRE(std::abs(jb_statistic(alternating_row(10)) - 0.8) < 1e-12);
  REQUIRE(std::abs(jb_statistic(alternating_row(10), 0.3) -
                   0.7 * 4.0) < 1e-12);
}

TEST_CASE("jb_statistic matches the brute-force formula", "[nongauss]") {
  Rng rng(17);
  Eigen::RowVectorXd raw(10000);
  for (Index j = 0; j < raw.size(); ++j) {
    const double z = rng.gaussian();
    raw(j) = z * z;  // strongly skewed
  }
  const Eigen::RowVectorXd s = standardized_row(raw);
  REQUIRE(std::abs(jb_statistic(s) - jb_brute_force(s, 0.8)) < 1e-12);
  REQUIRE(std::abs(jb_statistic(s, 0.35) - jb_brute_force(s, 0.35)) < 1e-12);
}

TEST_CASE("jb_statistic invariances", "[nongauss]") {
  Rng rng(19);
  Eigen::RowVectorXd raw(500);
  for (Index j = 0; j < raw.size(); ++j)
    raw(j) = rng.gaussian() + 0.3 * std::pow(rng.gaussian(), 3);
  const Eigen::RowVectorXd s = standardized_row(raw);

  SECTION("permutation of entries") {
    std::vector<Index> perm(500);
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffler(20);
    for (Index i = 499; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[shuffler.below(static_cast<std::uint64_t>(i) + 1)]);
    Eigen::RowVectorXd shuffled(500);
    for (Index j = 0; j < 500; ++j)
      shuffled(j) = s(perm[static_cast<std::size_t>(j)]);
    REQUIRE(std::abs(jb_statistic(shuffled) - jb_statistic(s)) < 1e-12);
  }
  SECTION("sign flip") {
    REQUIRE(std::abs(jb_statistic(-s) - jb_statistic(s)) < 1e-15);
  }
}

TEST_CASE("jb_statistic enforces the standardized-row contract", "[nongauss]") {
  REQUIRE_THROWS_AS(jb_statistic(Eigen::RowVectorXd::Zero(8)),
                    degenerate_input_error);
  REQUIRE_THROWS_AS(jb_statistic(2.0 * alternating_row(10)),
                    invalid_input_error);  // variance 4
  Eigen::RowVectorXd shifted = alternating_row(10);
  shifted.array() += 0.5;
  REQUIRE_THROWS_AS(jb_statistic(shifted), invalid_input_error);
  REQUIRE_THROWS_AS(jb_statistic(alternating_row(10), 1.2),
                    invalid_input_error);
  REQUIRE_THROWS_AS(jb_statistic(alternating_row(10), 0.0),
                    invalid_input_error);
}

TEST_CASE("jb_total sums row statistics", "[nongauss]") {
  const Eigen::RowVectorXd row = alternating_row(12);
  Matrix single = row;
  REQUIRE(std::abs(jb_total(single) - jb_statistic(row)) < 1e-15);

  Matrix twice(2, 12);
  twice << row, row;
  REQUIRE(std::abs(jb_total(twice) - 2.0 * jb_statistic(row)) < 1e-12);

  Rng rng(23);
  Matrix s3(3, 5000);
  for (Index l = 0; l < 3; ++l) {
    Eigen::RowVectorXd raw(5000);
    for (Index j = 0; j < raw.size(); ++j)
      raw(j) = std::pow(rng.gaussian(), l + 1.0);
    s3.row(l) = standardized_row(raw);
  }
  double expected = 0.0;
  for (Index l = 0; l < 3; ++l) expected += jb_statistic(s3.row(l));
  REQUIRE(std::abs(jb_total(s3) - expected) < 1e-12);
}

TEST_CASE("jb_total names the offending row", "[nongauss]") {
  Matrix s(2, 10);
  s.row(0) = alternating_row(10);
  s.row(1).setZero();
  REQUIRE_THROWS_WITH(jb_total(s),
                      Catch::Matchers::ContainsSubstring("row 1"));
}

TEST_CASE("jb_gradient vanishes at a moment-matched point", "[nongauss]") {
  Matrix Xw(2, 6);
  Xw.row(0) = moment_matched_row();
  Xw.row(1) = alternating_row(6);
  Vector u(2);
  u << 1.0, 0.0;
  const Vector g = jb_gradient(u, Xw);
  REQUIRE(g.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("jb_gradient matches central finite differences", "[nongauss]") {
  const Index n = 10, p = 200;
  const double h = 1e-5;
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix Xw = rng.gaussian_matrix(n, p);
    Vector u = rng.gaussian_matrix(n, 1);
    u.normalize();
    const Vector g = jb_gradient(u, Xw);
    Vector fd(n);
    for (Index i = 0; i < n; ++i) {
      Vector up = u, dn = u;
      up(i) += h;
      dn(i) -= h;
      const Eigen::RowVectorXd sp = up.transpose() * Xw;
      const Eigen::RowVectorXd sn = dn.transpose() * Xw;
      fd(i) = (detail::jb_raw(sp, 0.8) - detail::jb_raw(sn, 0.8)) / (2 * h);
    }
    REQUIRE((g - fd).norm() / fd.norm() < 1e-5);
  }
}

TEST_CASE("jb_gradient on sign-flipped data still matches finite differences",
          "[nongauss]") {
  const Index n = 8, p = 150;
  const double h = 1e-5;
  Rng rng(31);
  const Matrix Xw = -rng.gaussian_matrix(n, p);
  Vector u = rng.gaussian_matrix(n, 1);
  u.normalize();
  const Vector g = jb_gradient(u, Xw);
  Vector fd(n);
  for (Index i = 0; i < n; ++i) {
    Vector up = u, dn = u;
    up(i) += h;
    dn(i) -= h;
    fd(i) = (detail::jb_raw((up.transpose() * Xw).eval(), 0.8) -
             detail::jb_raw((dn.transpose() * Xw).eval(), 0.8)) /
            (2 * h);
  }
  REQUIRE((g - fd).norm() / fd.norm() < 1e-5);
}

TEST_CASE("jb_gradient validates dimensions", "[nongauss]") {
  REQUIRE_THROWS_AS(jb_gradient(Vector::Ones(3), Matrix::Ones(4, 5)),
                    invalid_input_error);
}

TEST_CASE("sign_normalize flips negative-skew rows and preserves the product",
          "[nongauss]") {
  Rng rng(37);
  Matrix S(4, 1000);
  for (Index l = 0; l < 4; ++l) {
    for (Index j = 0; j < 1000; ++j) {
      const double z = rng.gaussian();
      S(l, j) = (l % 2 == 0 ? 1.0 : -1.0) * (z * z + 0.2 * z);
    }
  }
  const Matrix M = rng.gaussian_matrix(6, 4);
  const Matrix product = M * S;

  const SignNormalized out = sign_normalize(S, M);
  for (Index l = 0; l < 4; ++l) REQUIRE(row_skewness(out.S.row(l)) >= 0.0);
  REQUIRE((out.M * out.S - product).norm() == 0.0);

  SECTION("idempotent") {
    const SignNormalized again = sign_normalize(out.S, out.M);
    REQUIRE((again.S - out.S).norm() == 0.0);
    REQUIRE((again.M - out.M).norm() == 0.0);
  }
  SECTION("positive-skew input is untouched") {
    const SignNormalized same = sign_normalize(out.S, out.M);
    REQUIRE((same.S - out.S).norm() == 0.0);
  }
  SECTION("shape mismatch rejected") {
    REQUIRE_THROWS_AS(sign_normalize(S, Matrix::Ones(6, 3)),
                      invalid_input_error);
  }
}

TEST_CASE("sign_normalize leaves zero-skew rows alone", "[nongauss]") {
  Matrix S(1, 6);
  S.row(0) = alternating_row(6);  // exactly symmetric, zero skewness
  const Matrix out = sign_normalize(S);
  REQUIRE((out - S).norm() == 0.0);
}
