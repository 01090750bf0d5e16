// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_POINT_CLOUD_HPP
#define GFTLATENT_POINT_CLOUD_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "gftlatent/error.hpp"

namespace gftl {

/// Integer voxel coordinate (x, y, z).
using Coord = std::array<std::int32_t, 3>;

/// Per-point attribute triple in (Y, U, V) order, nominal range [0, 255].
using Yuv = std::array<double, 3>;

inline constexpr int kMaxBitDepth = 16;

/// Packs a coordinate with components in [0, 2^16) into one ordered key.
/// Key order equals lexicographic (x, y, z) order.
inline std::uint64_t coord_key(const Coord& c) noexcept {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c[0])) << 32) |
         (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c[1])) << 16) |
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(c[2]));
}

inline std::string to_string(const Coord& c) {
  return "(" + std::to_string(c[0]) + ", " + std::to_string(c[1]) + ", " +
         std::to_string(c[2]) + ")";
}

/// Smallest n >= 1 such that every value in [0, max_coord] fits in n bits.
inline int required_bit_depth(std::int64_t max_coord) noexcept {
  int n = 1;
  while (n < 62 && (std::int64_t{1} << n) <= max_coord) ++n;
  return n;
}

/// Voxelized point cloud: unique integer coordinates, optional YUV attributes.
///
/// A cloud either carries one attribute triple per point or none at all
/// (geometry-only clouds, e.g. the output of a coordinate downscale).
class PointCloud {
 public:
  PointCloud() = default;

  /// Validates all invariants; throws Error(kParse) on violation.
  PointCloud(std::vector<Coord> coords, std::vector<Yuv> attrs, int bit_depth)
      : coords_(std::move(coords)), attrs_(std::move(attrs)), bit_depth_(bit_depth) {
    validate();
  }

  /// Builds a cloud from raw points, averaging the attributes of duplicate
  /// coordinates. The first occurrence of each coordinate keeps its position.
  static PointCloud merge_duplicates(const std::vector<Coord>& coords,
                                     const std::vector<Yuv>& attrs, int bit_depth) {
    if (!attrs.empty() && attrs.size() != coords.size()) {
      throw parse_error("coordinate and attribute counts differ");
    }
    std::vector<std::size_t> order(coords.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return coord_key(coords[a]) < coord_key(coords[b]);
    });

    // survivor[i] = index of the first occurrence of coords[i]
    std::vector<std::size_t> survivor(coords.size());
    for (std::size_t k = 0; k < order.size();) {
      std::size_t end = k;
      while (end < order.size() && coords[order[end]] == coords[order[k]]) ++end;
      for (std::size_t j = k; j < end; ++j) survivor[order[j]] = order[k];
      k = end;
    }

    std::vector<Coord> out_coords;
    std::vector<Yuv> sums;
    std::vector<std::size_t> counts;
    std::vector<std::size_t> slot(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (survivor[i] == i) {
        slot[i] = out_coords.size();
        out_coords.push_back(coords[i]);
        sums.push_back({0.0, 0.0, 0.0});
        counts.push_back(0);
      }
      const std::size_t s = slot[survivor[i]];
      if (!attrs.empty()) {
        for (int c = 0; c < 3; ++c) sums[s][c] += attrs[i][c];
      }
      ++counts[s];
    }
    std::vector<Yuv> out_attrs;
    if (!attrs.empty()) {
      out_attrs.resize(out_coords.size());
      for (std::size_t s = 0; s < out_coords.size(); ++s) {
        for (int c = 0; c < 3; ++c) {
          out_attrs[s][c] = sums[s][c] / static_cast<double>(counts[s]);
        }
      }
    }
    return PointCloud(std::move(out_coords), std::move(out_attrs), bit_depth);
  }

  std::size_t size() const noexcept { return coords_.size(); }
  bool empty() const noexcept { return coords_.empty(); }
  bool has_attributes() const noexcept { return !attrs_.empty(); }
  int bit_depth() const noexcept { return bit_depth_; }

  const std::vector<Coord>& coords() const noexcept { return coords_; }
  const std::vector<Yuv>& attrs() const noexcept { return attrs_; }
  const Coord& coord(std::size_t i) const { return coords_[i]; }
  const Yuv& attr(std::size_t i) const { return attrs_[i]; }

  /// Same points and attributes, declared at a different bit depth.
  PointCloud with_bit_depth(int bit_depth) const {
    return PointCloud(coords_, attrs_, bit_depth);
  }

  /// Same geometry with replaced attributes.
  PointCloud with_attributes(std::vector<Yuv> attrs) const {
    return PointCloud(coords_, std::move(attrs), bit_depth_);
  }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  void validate() const {
    if (bit_depth_ < 1 || bit_depth_ > kMaxBitDepth) {
      throw parse_error("bit depth " + std::to_string(bit_depth_) + " outside [1, 16]");
    }
    if (!attrs_.empty() && attrs_.size() != coords_.size()) {
      throw parse_error("coordinate and attribute counts differ");
    }
    const std::int32_t limit = (std::int32_t{1} << bit_depth_) - 1;
    for (const Coord& c : coords_) {
      for (std::int32_t v : c) {
        if (v < 0 || v > limit) {
          throw parse_error("coordinate " + to_string(c) + " outside " +
                            std::to_string(bit_depth_) + "-bit range");
        }
      }
    }
    std::vector<std::uint64_t> keys(coords_.size());
    std::transform(coords_.begin(), coords_.end(), keys.begin(), coord_key);
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
      throw parse_error("duplicate coordinates in voxelized cloud");
    }
  }

  std::vector<Coord> coords_;
  std::vector<Yuv> attrs_;
  int bit_depth_ = 1;
};

}  // namespace gftl

#endif  // GFTLATENT_POINT_CLOUD_HPP
