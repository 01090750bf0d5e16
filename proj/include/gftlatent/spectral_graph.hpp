// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_SPECTRAL_GRAPH_HPP
#define GFTLATENT_SPECTRAL_GRAPH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gftlatent/error.hpp"
#include "gftlatent/point_cloud.hpp"
#include "gftlatent/voxel_grid.hpp"

namespace gftl {

enum class DistanceMode { kColor, kGeometry };

/// Complete weighted graph over the points of one voxel block.
struct BlockGraph {
  Eigen::MatrixXd weights;  // symmetric adjacency, zero diagonal
  double alpha = 1.0;
  DistanceMode distance_mode = DistanceMode::kColor;

  Eigen::Index n() const noexcept { return weights.rows(); }
};

/// Eigenpairs of a block Laplacian, ascending by eigenvalue.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // column k pairs with eigenvalues[k]

  Eigen::Index n() const noexcept { return eigenvalues.size(); }
};

inline constexpr double kMinMeanDistance = 1e-6;

namespace detail {

inline Eigen::MatrixXd pairwise_distances(const VoxelBlock& block, std::span<const Yuv> attrs,
                                          DistanceMode mode) {
  const auto n = static_cast<Eigen::Index>(block.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (int c = 0; c < 3; ++c) {
        double diff = 0.0;
        if (mode == DistanceMode::kColor) {
          diff = attrs[static_cast<std::size_t>(i)][c] - attrs[static_cast<std::size_t>(j)][c];
        } else {
          diff = static_cast<double>(block.local_coords[static_cast<std::size_t>(i)][c] -
                                     block.local_coords[static_cast<std::size_t>(j)][c]);
        }
        s += diff * diff;
      }
      d(i, j) = d(j, i) = std::sqrt(s);
    }
  }
  return d;
}

}  // namespace detail

/// Default edge-weight scale: 1 / mean pairwise distance (floored at 1e-6).
inline double auto_alpha(const Eigen::MatrixXd& distances) {
  const Eigen::Index n = distances.rows();
  if (n < 2) return 1.0;
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double mean = distances.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().sum() / pairs;
  return 1.0 / std::max(mean, kMinMeanDistance);
}

/// Builds the complete graph with w_ij = exp(-alpha * d_ij).
///
/// `attrs` holds the YUV triples of the block's members in point_indices
/// order. In geometry mode distances are taken between local coordinates and
/// `attrs` is unused. When `alpha` is unset it is derived per block.
inline BlockGraph build_graph(const VoxelBlock& block, std::span<const Yuv> attrs,
                              std::optional<double> alpha = std::nullopt,
                              DistanceMode mode = DistanceMode::kColor) {
  if (block.size() == 0) throw config_error("cannot build a graph on an empty block");
  if (mode == DistanceMode::kColor && attrs.size() != block.size()) {
    throw config_error("block has " + std::to_string(block.size()) + " points but " +
                       std::to_string(attrs.size()) + " attribute triples");
  }
  if (alpha && !(*alpha > 0.0 && std::isfinite(*alpha))) {
    throw config_error("alpha must be positive and finite");
  }
  const Eigen::MatrixXd d = detail::pairwise_distances(block, attrs, mode);
  BlockGraph g;
  g.distance_mode = mode;
  g.alpha = alpha ? *alpha : auto_alpha(d);
  g.weights = (-g.alpha * d.array()).exp().matrix();
  g.weights.diagonal().setZero();
  return g;
}

/// Row sums of the adjacency matrix.
inline Eigen::VectorXd degree_matrix(const BlockGraph& g) { return g.weights.rowwise().sum(); }

/// Non-normalized Laplacian L = D - A.
inline Eigen::MatrixXd laplacian(const BlockGraph& g) {
  Eigen::MatrixXd l = -g.weights;
  l.diagonal() = degree_matrix(g);
  return l;
}

struct JacobiOptions {
  double off_diagonal_tolerance = 1e-12;
  int max_sweeps = 100;
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues ascend; each eigenvector's first component with magnitude
/// above 1e-12 is made positive. Throws Error(kNumeric) when the sweep budget
/// runs out.
inline Spectrum eigendecompose(const Eigen::MatrixXd& symmetric, const JacobiOptions& options = {}) {
  const Eigen::Index n = symmetric.rows();
  if (symmetric.cols() != n) throw config_error("eigendecompose needs a square matrix");
  if (!symmetric.allFinite()) throw numeric_error("eigendecompose input is not finite");
  if (n == 0) return {Eigen::VectorXd(0), Eigen::MatrixXd(0, 0)};
  if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, symmetric.cwiseAbs().maxCoeff())) {
    throw config_error("eigendecompose input is not symmetric");
  }

  Eigen::MatrixXd a = (symmetric + symmetric.transpose()) / 2.0;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = std::max(1.0, a.norm());
  const double threshold = options.off_diagonal_tolerance * scale;

  auto off_max = [&]() {
    double m = 0.0;
    for (Eigen::Index j = 1; j < n; ++j) {
      for (Eigen::Index i = 0; i < j; ++i) m = std::max(m, std::abs(a(i, j)));
    }
    return m;
  };

  int sweep = 0;
  for (; sweep < options.max_sweeps && off_max() > threshold; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that annihilates a(p, q).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_max() > threshold) {
    throw numeric_error("Jacobi eigensolver did not converge in " +
                        std::to_string(options.max_sweeps) + " sweeps");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  Spectrum s;
  s.eigenvalues.resize(n);
  s.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    s.eigenvalues[k] = a(src, src);
    Eigen::VectorXd col = v.col(src);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(col[i]) > 1e-12) {
        if (col[i] < 0.0) col = -col;
        break;
      }
    }
    s.eigenvectors.col(k) = col;
  }
  return s;
}

}  // namespace gftl

#endif  // GFTLATENT_SPECTRAL_GRAPH_HPP
