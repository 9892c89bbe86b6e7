#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sing/errors.hpp"
#include "sing/nongauss.hpp"
#include "sing/rng.hpp"
#include "sing/types.hpp"

namespace sing {

/// Toy two-dataset design: image-like loadings for X (vectorized grid x grid
/// blobs), network-vector loadings for Y (community blocks on the lower
/// triangle of a nodes x nodes symmetric matrix), block-mean subject scores.
struct ToySpec {
  Index n = 48;
  Index grid = 33;    // p_x = grid * grid
  Index nodes = 100;  // p_y = nodes * (nodes - 1) / 2
  Index r_j = 2;
  Index r_ind = 2;  // individual components per dataset
  double noise_sd = 1.0;
  std::uint64_t seed = 0;
};

struct ToyTruth {
  Matrix M_j;          // n x r_j
  Matrix S_jx, S_jy;   // r_j x p
  Matrix S_ix, S_iy;   // r_ind x p
  Vector D_x, D_y;     // r_j diagonal scales
};

struct ToyData {
  DataMatrix X, Y;
  ToyTruth truth;
};

/// Symmetric k x k matrix from a lower-triangle vector, filled column-major;
/// the diagonal takes diag_value (NaN marks "missing").
inline Matrix vec_to_net(const Vector& v,
                         double diag_value =
                             std::numeric_limits<double>::quiet_NaN()) {
  const double len = static_cast<double>(v.size());
  const double k_real = (1.0 + std::sqrt(1.0 + 8.0 * len)) / 2.0;
  const Index k = static_cast<Index>(std::llround(k_real));
  if (k < 2 || k * (k - 1) / 2 != v.size())
    throw invalid_input_error(
        "vec_to_net: length must be a triangular number k(k-1)/2");
  Matrix net = Matrix::Constant(k, k, diag_value);
  Index idx = 0;
  for (Index j = 0; j < k; ++j)
    for (Index i = j + 1; i < k; ++i) {
      net(i, j) = v(idx);
      net(j, i) = v(idx);
      ++idx;
    }
  return net;
}

/// Lower triangle of a square matrix, column-major: the inverse of
/// vec_to_net for symmetric input.
inline Vector net_to_vec(const Matrix& net) {
  const Index k = net.rows();
  if (net.cols() != k || k < 2)
    throw invalid_input_error("net_to_vec: need a square matrix, k >= 2");
  Vector v(k * (k - 1) / 2);
  Index idx = 0;
  for (Index j = 0; j < k; ++j)
    for (Index i = j + 1; i < k; ++i) v(idx++) = net(i, j);
  return v;
}

namespace detail {

/// Alternating +/-1 block pattern of the subject-score means.
inline Vector block_pattern(Index n, Index block, double start_sign) {
  Vector mu(n);
  double sign = start_sign;
  Index filled = 0;
  while (filled < n) {
    const Index stop = std::min(n, filled + std::max<Index>(block, 1));
    for (Index i = filled; i < stop; ++i) mu(i) = sign;
    filled = stop;
    sign = -sign;
  }
  return mu;
}

/// Sign-sequence pattern in blocks of `block` entries.
inline Vector sign_sequence_pattern(Index n, Index block,
                                    const std::vector<int>& signs) {
  Vector mu(n);
  for (Index i = 0; i < n; ++i) {
    const std::size_t b = static_cast<std::size_t>(i / std::max<Index>(block, 1)) %
                          signs.size();
    mu(i) = static_cast<double>(signs[b]);
  }
  return mu;
}

inline void standardize_row_inplace(Eigen::Ref<Eigen::RowVectorXd> row) {
  const double p = static_cast<double>(row.size());
  row.array() -= row.mean();
  const double sd = std::sqrt(row.squaredNorm() / p);
  if (sd < 1e-300)
    throw degenerate_input_error("toy loading row is constant");
  row /= sd;
}

/// Vectorized Gaussian bump on the grid, standardized to mean 0 variance 1.
inline Eigen::RowVectorXd blob_loading(Index grid, double cx, double cy,
                                       double sigma) {
  Eigen::RowVectorXd row(grid * grid);
  for (Index j = 0; j < grid; ++j)
    for (Index i = 0; i < grid; ++i) {
      const double dx = (static_cast<double>(i) - cx * (grid - 1));
      const double dy = (static_cast<double>(j) - cy * (grid - 1));
      row(j * grid + i) = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  standardize_row_inplace(row);
  return row;
}

/// Community-block network loading: ones inside a node block, vectorized.
inline Eigen::RowVectorXd community_loading(Index nodes, Index first,
                                            Index size) {
  Matrix net = Matrix::Zero(nodes, nodes);
  for (Index u = first; u < first + size; ++u)
    for (Index v = first; v < first + size; ++v)
      if (u != v) net(u, v) = 1.0;
  Eigen::RowVectorXd row = net_to_vec(net).transpose();
  standardize_row_inplace(row);
  return row;
}

}  // namespace detail

/// Seeded toy model: X = M_J D_x S_Jx + M_Ix S_Ix + noise_sd * M_Nx N_x and
/// the analogous Y. Joint score means are the half-and-half +/-1 blocks (and
/// their negation); D_x = I, D_y cycles (-5, 2). Loading rows are
/// standardized and designed to be strongly non-Gaussian.
inline ToyData generate_toy(const ToySpec& spec) {
  const Index n = spec.n;
  const Index r_total = spec.r_j + spec.r_ind;
  if (n < 8 || spec.grid < 8 || spec.nodes < 10)
    throw invalid_input_error("generate_toy: need n >= 8, grid >= 8, nodes >= 10");
  if (spec.r_j < 1 || spec.r_ind < 0 || r_total > n - 2)
    throw invalid_input_error(
        "generate_toy: ranks must satisfy r_j >= 1, r_j + r_ind <= n - 2");
  if (spec.noise_sd < 0)
    throw invalid_input_error("generate_toy: noise_sd must be nonnegative");
  const Index px = spec.grid * spec.grid;
  const Index py = spec.nodes * (spec.nodes - 1) / 2;
  const Index community = std::max<Index>(2, spec.nodes / (2 * r_total));
  if (community * r_total > spec.nodes)
    throw invalid_input_error("generate_toy: too many components for nodes");

  Rng rng(spec.seed);
  ToyData out;

  // Subject scores: block means plus unit Gaussian noise, drawn in a fixed
  // order so the seed pins every entry.
  out.truth.M_j.resize(n, spec.r_j);
  for (Index l = 0; l < spec.r_j; ++l) {
    Vector mu;
    if (l == 0)
      mu = detail::block_pattern(n, n / 2, 1.0);
    else if (l == 1)
      mu = -detail::block_pattern(n, n / 2, 1.0);
    else
      mu = detail::block_pattern(n, std::max<Index>(1, n / (2 * (l + 1))),
                                 l % 2 == 0 ? 1.0 : -1.0);
    for (Index i = 0; i < n; ++i) out.truth.M_j(i, l) = mu(i) + rng.gaussian();
  }

  Matrix M_ix(n, spec.r_ind), M_iy(n, spec.r_ind);
  for (Index l = 0; l < spec.r_ind; ++l) {
    Vector mu = (l == 0)
                    ? detail::block_pattern(n, n / 4, -1.0)
                    : (l == 1 ? detail::block_pattern(n, n / 4, 1.0)
                              : detail::block_pattern(
                                    n, std::max<Index>(1, n / 8),
                                    l % 2 == 0 ? -1.0 : 1.0));
    for (Index i = 0; i < n; ++i) M_ix(i, l) = mu(i) + rng.gaussian();
  }
  for (Index l = 0; l < spec.r_ind; ++l) {
    Vector mu = (l == 0)
                    ? detail::sign_sequence_pattern(
                          n, n / 8, {-1, 1, -1, 1, -1, 1, -1, -1})
                    : (l == 1 ? detail::block_pattern(n, n / 2, 1.0)
                              : detail::sign_sequence_pattern(
                                    n, std::max<Index>(1, n / 6),
                                    {1, -1, -1, 1, 1, -1}));
    for (Index i = 0; i < n; ++i) M_iy(i, l) = mu(i) + rng.gaussian();
  }

  // Loadings: blobs at spread grid positions, widened until sharp enough.
  const double centers[][2] = {{0.3, 0.3}, {0.7, 0.7}, {0.3, 0.7},
                               {0.7, 0.3}, {0.5, 0.5}, {0.2, 0.5},
                               {0.8, 0.5}, {0.5, 0.2}};
  const Index n_centers = static_cast<Index>(sizeof(centers) / sizeof(centers[0]));
  auto make_blob = [&](Index k) {
    const auto& c = centers[k % n_centers];
    double sigma = static_cast<double>(spec.grid) / 12.0;
    Eigen::RowVectorXd row = detail::blob_loading(spec.grid, c[0], c[1], sigma);
    for (int attempt = 0; attempt < 8 && detail::jb_raw(row, 0.8) <= 0.5;
         ++attempt) {
      sigma *= 0.75;  // sharper blob means heavier tails
      row = detail::blob_loading(spec.grid, c[0], c[1], sigma);
    }
    if (detail::jb_raw(row, 0.8) <= 0.5)
      throw numeric_error("generate_toy: blob loading insufficiently non-Gaussian");
    return row;
  };
  out.truth.S_jx.resize(spec.r_j, px);
  for (Index l = 0; l < spec.r_j; ++l) out.truth.S_jx.row(l) = make_blob(l);
  out.truth.S_ix.resize(spec.r_ind, px);
  for (Index l = 0; l < spec.r_ind; ++l)
    out.truth.S_ix.row(l) = make_blob(spec.r_j + l);

  out.truth.S_jy.resize(spec.r_j, py);
  for (Index l = 0; l < spec.r_j; ++l)
    out.truth.S_jy.row(l) =
        detail::community_loading(spec.nodes, l * community, community);
  out.truth.S_iy.resize(spec.r_ind, py);
  for (Index l = 0; l < spec.r_ind; ++l)
    out.truth.S_iy.row(l) = detail::community_loading(
        spec.nodes, (spec.r_j + l) * community, community);

  out.truth.D_x = Vector::Ones(spec.r_j);
  out.truth.D_y.resize(spec.r_j);
  for (Index l = 0; l < spec.r_j; ++l)
    out.truth.D_y(l) = (l % 2 == 0) ? -5.0 : 2.0;

  // Gaussian subspace.
  const Index gx = n - r_total - 1;
  const Matrix M_nx = rng.gaussian_matrix(n, gx);
  const Matrix N_x = rng.gaussian_matrix(gx, px);
  const Matrix M_ny = rng.gaussian_matrix(n, gx);
  const Matrix N_y = rng.gaussian_matrix(gx, py);

  Matrix X = out.truth.M_j * out.truth.D_x.asDiagonal() * out.truth.S_jx;
  Matrix Y = out.truth.M_j * out.truth.D_y.asDiagonal() * out.truth.S_jy;
  if (spec.r_ind > 0) {
    X += M_ix * out.truth.S_ix;
    Y += M_iy * out.truth.S_iy;
  }
  if (spec.noise_sd > 0) {
    X += spec.noise_sd * (M_nx * N_x);
    Y += spec.noise_sd * (M_ny * N_y);
  }
  out.X = DataMatrix(std::move(X));
  out.Y = DataMatrix(std::move(Y));
  return out;
}

}  // namespace sing
