#include <catch2/catch_amalgamated.hpp>

#include "sing/preprocess.hpp"
#include "sing/rng.hpp"

using namespace sing;

TEST_CASE("double_center annihilates 2x2 with equal cross-differences",
          "[preprocess]") {
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  const Matrix c = double_center(x);
  REQUIRE(c.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("double_center zeroes row and column sums", "[preprocess]") {
  Rng rng(42);
  const Matrix x = rng.gaussian_matrix(5, 7) * 3.0;
  const Matrix c = double_center(x);
  const double scale = 1e-12 * x.cwiseAbs().maxCoeff();
  REQUIRE(c.rowwise().sum().cwiseAbs().maxCoeff() / 7 < scale);
  REQUIRE(c.colwise().sum().cwiseAbs().maxCoeff() / 5 < scale);

  SECTION("idempotent") {
    const Matrix c2 = double_center(c);
    REQUIRE((c2 - c).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("rank drops below n") {
    Eigen::JacobiSVD<Matrix> svd(c);
    REQUIRE(svd.singularValues()(4) < 1e-12 * svd.singularValues()(0));
  }
}

TEST_CASE("double_center input validation", "[preprocess]") {
  Matrix bad(3, 3);
  bad.setOnes();
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(double_center(bad), invalid_input_error);
  REQUIRE_THROWS_AS(double_center(Matrix::Constant(4, 4, 2.5)),
                    degenerate_input_error);
  REQUIRE_THROWS_AS(double_center(Matrix::Ones(1, 5)), invalid_input_error);
}

TEST_CASE("standardize_iterative reaches the column contract", "[preprocess]") {
  Rng rng(7);
  DataMatrix data(rng.gaussian_matrix(6, 4) * 2.0);
  data.values.array() += 1.5;
  const StandardizeResult res = standardize_iterative(data, 1e-6, 50);
  REQUIRE(res.converged);
  REQUIRE(res.data.row_centered);
  REQUIRE(res.data.column_standardized);
  const Matrix& m = res.data.values;
  for (Index j = 0; j < 4; ++j) {
    const double mean = m.col(j).mean();
    const double var = (m.col(j).array() - mean).square().sum() / 5.0;
    REQUIRE(std::abs(mean) < 1e-6);
    REQUIRE(std::abs(var - 1.0) < 1e-6);
  }
  REQUIRE(m.rowwise().mean().cwiseAbs().maxCoeff() < 1e-6);

  SECTION("already standardized input is a fixed point") {
    const StandardizeResult again = standardize_iterative(res.data, 1e-6, 50);
    REQUIRE(again.converged);
    REQUIRE((again.data.values - m).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("standardize_iterative rejects constant columns", "[preprocess]") {
  Rng rng(3);
  Matrix m = rng.gaussian_matrix(6, 4);
  m.col(2).setConstant(4.0);
  REQUIRE_THROWS_WITH(standardize_iterative(DataMatrix(m)),
                      Catch::Matchers::ContainsSubstring("column 2"));
}

TEST_CASE("standardize_iterative reports non-convergence", "[preprocess]") {
  Rng rng(9);
  DataMatrix data(rng.gaussian_matrix(6, 5));
  const StandardizeResult res = standardize_iterative(data, 1e-12, 1);
  REQUIRE_FALSE(res.converged);
  REQUIRE(res.iterations == 1);
  REQUIRE(res.max_deviation > 0.0);
  REQUIRE_FALSE(res.data.column_standardized);
}

TEST_CASE("matrix_power analytic cases", "[preprocess]") {
  REQUIRE((matrix_power(Matrix::Identity(3, 3), 0.5) - Matrix::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-14);

  Matrix d = Vector{{4.0, 9.0}}.asDiagonal();
  Matrix expected = Vector{{2.0, 3.0}}.asDiagonal();
  REQUIRE((matrix_power(d, 0.5) - expected).cwiseAbs().maxCoeff() < 1e-12);

  Matrix singular = Vector{{4.0, 0.0}}.asDiagonal();
  Matrix ginv_sqrt = Vector{{0.5, 0.0}}.asDiagonal();
  REQUIRE((matrix_power(singular, -0.5, 1e-10) - ginv_sqrt)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("matrix_power domain and symmetry errors", "[preprocess]") {
  Matrix asym(2, 2);
  asym << 1, 2, 3, 4;
  REQUIRE_THROWS_AS(matrix_power(asym, 0.5), invalid_input_error);

  Matrix indefinite = Vector{{1.0, -1.0}}.asDiagonal();
  REQUIRE_THROWS_AS(matrix_power(indefinite, 0.5), domain_error);
  // Integer exponents tolerate negative eigenvalues.
  REQUIRE((matrix_power(indefinite, 1.0) - indefinite).cwiseAbs().maxCoeff() <
          1e-12);
  REQUIRE((matrix_power(indefinite, 2.0) - Matrix::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("matrix_power exponent addition on the retained eigenspace",
          "[preprocess]") {
  Rng rng(11);
  const Matrix g = rng.gaussian_matrix(5, 5);
  const Matrix psd = g * g.transpose();
  const Matrix low = rng.gaussian_matrix(5, 2);
  const Matrix singular = low * low.transpose();  // rank 2
  const double powers[] = {-0.5, 0.5, 1.0};
  for (const Matrix& m : {psd, singular})
    for (double a : powers)
      for (double b : powers) {
        const Matrix lhs = matrix_power(m, a) * matrix_power(m, b);
        const Matrix rhs = matrix_power(m, a + b);
        REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
      }
}

TEST_CASE("whiten satisfies the whitener identities", "[preprocess]") {
  Rng rng(5);
  const DataMatrix data = double_center(DataMatrix(rng.gaussian_matrix(10, 50)));
  const Whitener w = whiten(data);

  REQUIRE(w.eigen_rank == 9);  // double centering removes one dimension
  REQUIRE((w.whitening - w.whitening.transpose()).cwiseAbs().maxCoeff() <
          1e-12);
  REQUIRE((w.inverse - w.inverse.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(Eigen::SelfAdjointEigenSolver<Matrix>(w.whitening)
              .eigenvalues()
              .minCoeff() > -1e-12);
  REQUIRE(Eigen::SelfAdjointEigenSolver<Matrix>(w.inverse)
              .eigenvalues()
              .minCoeff() > -1e-12);

  const Matrix projector = w.whitening * w.inverse;
  REQUIRE((projector * projector - projector).norm() < 1e-8);
  REQUIRE((w.whitening * w.inverse * w.whitening - w.whitening).norm() < 1e-8);

  const Matrix cov_w = w.whitened * w.whitened.transpose() / 50.0;
  REQUIRE((cov_w - projector).norm() < 1e-6);
}

TEST_CASE("whiten requires centered data and rank", "[preprocess]") {
  Rng rng(6);
  DataMatrix raw(rng.gaussian_matrix(6, 9));
  REQUIRE_THROWS_AS(whiten(raw), invalid_input_error);

  Matrix rank1(3, 4);
  rank1 << 1, 2, 3, 4, 2, 4, 6, 8, 3, 6, 9, 12;
  REQUIRE_THROWS_AS(whiten(double_center(DataMatrix(rank1))),
                    degenerate_input_error);
}

TEST_CASE("whiten of double-centered random wide data keeps invariants",
          "[preprocess]") {
  for (std::uint64_t seed : {21, 22, 23}) {
    Rng rng(seed);
    const Index n = 8, p = 40;
    const DataMatrix data =
        double_center(DataMatrix(rng.gaussian_matrix(n, p)));
    const Whitener w = whiten(data);
    REQUIRE(w.eigen_rank == n - 1);
    const Matrix projector = w.whitening * w.inverse;
    REQUIRE((w.whitened * w.whitened.transpose() / static_cast<double>(p) -
             projector)
                .norm() < 1e-6);
  }
}

TEST_CASE("whiten sample-covariance variant rescales the identity",
          "[preprocess]") {
  Rng rng(31);
  const Index p = 60;
  const DataMatrix data =
      double_center(DataMatrix(rng.gaussian_matrix(9, p)));
  const Whitener w = whiten(data, /*sample_covariance=*/true);
  REQUIRE(w.sample_covariance);
  const Matrix projector = w.whitening * w.inverse;
  const Matrix cov_w =
      w.whitened * w.whitened.transpose() / static_cast<double>(p - 1);
  REQUIRE((cov_w - projector).norm() < 1e-6);
}
