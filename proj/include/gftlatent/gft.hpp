// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_GFT_HPP
#define GFTLATENT_GFT_HPP

#include <span>
#include <string>

#include <Eigen/Dense>

#include "gftlatent/error.hpp"
#include "gftlatent/point_cloud.hpp"
#include "gftlatent/spectral_graph.hpp"

namespace gftl {

/// n x 3 attribute matrix, columns Y, U, V.
using AttrMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Per-channel frequency responses of one block.
struct SpectralCoeffs {
  AttrMatrix z;                  // row k = (z_y, z_u, z_v) at frequency k
  Eigen::VectorXd frequencies;   // shared with the block's Spectrum

  Eigen::Index n() const noexcept { return z.rows(); }
  auto channel(int c) const { return z.col(c); }
};

inline AttrMatrix to_attr_matrix(std::span<const Yuv> attrs) {
  AttrMatrix m(static_cast<Eigen::Index>(attrs.size()), 3);
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    for (int c = 0; c < 3; ++c) m(static_cast<Eigen::Index>(i), c) = attrs[i][c];
  }
  return m;
}

/// Analysis: z_c = V^T * x_c for each channel.
inline SpectralCoeffs gft_forward(const Spectrum& spectrum, const AttrMatrix& attrs) {
  if (attrs.rows() != spectrum.n()) {
    throw config_error("gft_forward: spectrum has " + std::to_string(spectrum.n()) +
                       " nodes, attributes have " + std::to_string(attrs.rows()) + " rows");
  }
  return {spectrum.eigenvectors.transpose() * attrs, spectrum.eigenvalues};
}

/// Synthesis: x_c = V * z_c for each channel.
inline AttrMatrix gft_inverse(const Spectrum& spectrum, const SpectralCoeffs& coeffs) {
  if (coeffs.n() != spectrum.n()) {
    throw config_error("gft_inverse: spectrum has " + std::to_string(spectrum.n()) +
                       " nodes, coefficients have " + std::to_string(coeffs.n()) + " rows");
  }
  return spectrum.eigenvectors * coeffs.z;
}

}  // namespace gftl

#endif  // GFTLATENT_GFT_HPP
