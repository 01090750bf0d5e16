// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_DIAGNOSTICS_HPP
#define GFTLATENT_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gftlatent/gft.hpp"
#include "gftlatent/nn_kernels.hpp"
#include "gftlatent/spectral_graph.hpp"

// Runtime invariant suites behind `gftl selfcheck`.

namespace gftl::diagnostics {

struct CheckResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;   // worst observed error measure
  double limit = 0.0;   // threshold the error is compared against
  int instances = 0;
};

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

/// Central differences of a scalar function with respect to every entry of m.
inline Eigen::MatrixXd numeric_gradient(Eigen::MatrixXd& m, const std::function<double()>& loss,
                                        double step = 1e-5) {
  Eigen::MatrixXd g(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double saved = m(i, j);
      m(i, j) = saved + step;
      const double up = loss();
      m(i, j) = saved - step;
      const double down = loss();
      m(i, j) = saved;
      g(i, j) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                                     double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
  }
  return m;
}

inline CheckResult check_attention_gradients(std::uint64_t seed, int instances) {
  CheckResult r{"attention_gradient", true, 0.0, 1e-4, instances};
  std::mt19937_64 rng(seed);
  for (int t = 0; t < instances; ++t) {
    Eigen::MatrixXd f = random_matrix(4, 3, rng);
    AttentionParams p{random_matrix(3, 3, rng, 0.5), random_matrix(3, 3, rng, 0.5),
                      random_matrix(3, 3, rng, 0.5)};
    const Eigen::MatrixXd up = random_matrix(4, 3, rng);
    auto loss = [&] { return channel_attention(f, p).cwiseProduct(up).sum(); };
    const AttentionGradients g = channel_attention_grad(f, p, up);
    r.worst = std::max({r.worst, relative_error(g.features, numeric_gradient(f, loss)),
                        relative_error(g.w_query, numeric_gradient(p.w_query, loss)),
                        relative_error(g.w_key, numeric_gradient(p.w_key, loss)),
                        relative_error(g.w_value, numeric_gradient(p.w_value, loss))});
  }
  r.passed = r.worst <= r.limit;
  return r;
}

inline CheckResult check_mlp_gradients(std::uint64_t seed, int instances) {
  CheckResult r{"mlp_gradient", true, 0.0, 1e-4, instances};
  std::mt19937_64 rng(seed);
  for (int t = 0; t < instances; ++t) {
    MlpParams p = make_mlp(6, 2, seed + static_cast<std::uint64_t>(t));
    for (auto* stack : {&p.encoder, &p.decoder}) {
      for (auto& l : *stack) l.bias = random_matrix(l.bias.size(), 1, rng, 0.3).col(0);
    }
    Eigen::MatrixXd x = random_matrix(6, 1, rng);
    const Eigen::VectorXd up = random_matrix(6, 1, rng).col(0);
    const Eigen::VectorXd up_latent = random_matrix(2, 1, rng).col(0);
    auto loss = [&] {
      const MlpOutput o = mlp_forward(x.col(0), p);
      return o.reconstruction.dot(up) + o.latent.dot(up_latent);
    };
    const MlpGradients g = mlp_backward(x.col(0), p, up, &up_latent);
    double worst = relative_error(g.input, numeric_gradient(x, loss));
    for (std::size_t i = 0; i < p.encoder.size(); ++i) {
      worst = std::max(worst, relative_error(g.params.encoder[i].weight,
                                             numeric_gradient(p.encoder[i].weight, loss)));
    }
    for (std::size_t i = 0; i < p.decoder.size(); ++i) {
      worst = std::max(worst, relative_error(g.params.decoder[i].weight,
                                             numeric_gradient(p.decoder[i].weight, loss)));
    }
    r.worst = std::max(r.worst, worst);
  }
  r.passed = r.worst <= r.limit;
  return r;
}

/// Random complete block graphs: Laplacian row sums, PSD, orthonormal
/// eigenvectors, reconstruction and GFT round trip.
inline std::vector<CheckResult> check_spectra(std::uint64_t seed, int instances) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(1, 64);
  std::uniform_real_distribution<double> color(0.0, 255.0);
  CheckResult ortho{"eigenvector_orthonormality", true, 0.0, 1e-9, instances};
  CheckResult psd{"laplacian_psd", true, 0.0, 1e-9, instances};
  CheckResult rows{"laplacian_row_sums", true, 0.0, 1e-12, instances};
  CheckResult recon{"spectral_reconstruction", true, 0.0, 1e-8, instances};
  CheckResult round{"gft_round_trip", true, 0.0, 1e-8, instances};
  for (int t = 0; t < instances; ++t) {
    const int n = size(rng);
    VoxelBlock b;
    b.block_size = 4;
    std::vector<int> cells(64);
    for (int i = 0; i < 64; ++i) cells[static_cast<std::size_t>(i)] = i;
    std::shuffle(cells.begin(), cells.end(), rng);
    std::vector<Yuv> attrs;
    for (int i = 0; i < n; ++i) {
      const int cell = cells[static_cast<std::size_t>(i)];
      b.point_indices.push_back(static_cast<std::size_t>(i));
      b.local_coords.push_back({cell % 4, (cell / 4) % 4, cell / 16});
      attrs.push_back({color(rng), color(rng), color(rng)});
    }
    const DistanceMode mode = t % 2 == 0 ? DistanceMode::kColor : DistanceMode::kGeometry;
    const BlockGraph g = build_graph(b, attrs, std::nullopt, mode);
    const Eigen::MatrixXd l = laplacian(g);
    const Spectrum s = eigendecompose(l);
    const Eigen::Index m = s.n();
    const double lmax = std::max(1.0, s.eigenvalues.cwiseAbs().maxCoeff());
    rows.worst = std::max(rows.worst, l.rowwise().sum().cwiseAbs().maxCoeff());
    psd.worst = std::max(psd.worst, -s.eigenvalues.minCoeff());
    ortho.worst = std::max(ortho.worst, (s.eigenvectors.transpose() * s.eigenvectors -
                                         Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff());
    const Eigen::MatrixXd rebuilt =
        s.eigenvectors * s.eigenvalues.asDiagonal() * s.eigenvectors.transpose();
    recon.worst = std::max(recon.worst, (rebuilt - l).cwiseAbs().maxCoeff() / lmax);
    const AttrMatrix x = to_attr_matrix(attrs);
    round.worst = std::max(round.worst,
                           (gft_inverse(s, gft_forward(s, x)) - x).cwiseAbs().maxCoeff());
  }
  std::vector<CheckResult> out{rows, psd, ortho, recon, round};
  for (auto& c : out) c.passed = c.worst <= c.limit;
  return out;
}

inline std::vector<CheckResult> run_all(std::uint64_t seed, int instances) {
  std::vector<CheckResult> out = check_spectra(seed, instances);
  out.push_back(check_attention_gradients(seed + 1, instances));
  out.push_back(check_mlp_gradients(seed + 2, instances));
  return out;
}

}  // namespace gftl::diagnostics

#endif  // GFTLATENT_DIAGNOSTICS_HPP
