// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_COLOR_HPP
#define GFTLATENT_COLOR_HPP

#include <algorithm>
#include <array>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "gftlatent/error.hpp"

namespace gftl {

using Rgb = std::array<double, 3>;

/// Affine RGB <-> YUV conversion pair on the 8-bit scale.
///
/// Luma follows the preset's (Kr, Kb) weights exactly. Chroma is
/// 128 + 254 * Pb (resp. Pr) with Pb, Pr in [-0.5, 0.5], so every RGB triple
/// in the [0, 255] cube lands in [1, 255] without clipping and the inverse
/// recovers it.
struct ColorMatrix {
  Eigen::Matrix3d rgb_to_yuv;
  Eigen::Vector3d yuv_offset;  // added after rgb_to_yuv
  Eigen::Matrix3d yuv_to_rgb;  // applied to (yuv - yuv_offset)

  static ColorMatrix from_luma_weights(double kr, double kb) {
    const double kg = 1.0 - kr - kb;
    const double chroma_gain = 254.0 / 255.0;
    const double cb = chroma_gain / (2.0 * (1.0 - kb));
    const double cr = chroma_gain / (2.0 * (1.0 - kr));
    ColorMatrix m;
    m.rgb_to_yuv << kr, kg, kb,
        -kr * cb, -kg * cb, (1.0 - kb) * cb,
        (1.0 - kr) * cr, -kg * cr, -kb * cr;
    m.yuv_offset = Eigen::Vector3d(0.0, 128.0, 128.0);
    m.yuv_to_rgb = m.rgb_to_yuv.inverse();
    return m;
  }

  /// Full-range ITU-R BT.709 luma weights (default).
  static ColorMatrix bt709() { return from_luma_weights(0.2126, 0.0722); }
  /// Full-range ITU-R BT.601 luma weights.
  static ColorMatrix bt601() { return from_luma_weights(0.299, 0.114); }

  static ColorMatrix by_name(std::string_view name) {
    if (name == "bt709") return bt709();
    if (name == "bt601") return bt601();
    throw config_error("unknown color matrix '" + std::string(name) +
                       "' (expected bt709 or bt601)");
  }
};

namespace detail {
inline std::array<double, 3> clamp255(const Eigen::Vector3d& v) {
  return {std::clamp(v[0], 0.0, 255.0), std::clamp(v[1], 0.0, 255.0),
          std::clamp(v[2], 0.0, 255.0)};
}
}  // namespace detail

inline std::array<double, 3> rgb_to_yuv(const Rgb& rgb,
                                        const ColorMatrix& m = ColorMatrix::bt709()) {
  const Eigen::Vector3d in(rgb[0], rgb[1], rgb[2]);
  return detail::clamp255(m.rgb_to_yuv * in + m.yuv_offset);
}

inline Rgb yuv_to_rgb(const std::array<double, 3>& yuv,
                      const ColorMatrix& m = ColorMatrix::bt709()) {
  const Eigen::Vector3d in(yuv[0], yuv[1], yuv[2]);
  return detail::clamp255(m.yuv_to_rgb * (in - m.yuv_offset));
}

}  // namespace gftl

#endif  // GFTLATENT_COLOR_HPP
