// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_VOXEL_GRID_HPP
#define GFTLATENT_VOXEL_GRID_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gftlatent/error.hpp"
#include "gftlatent/point_cloud.hpp"

namespace gftl {

// ============================================================================
// k-d tree patches
// ============================================================================

/// Inclusive axis-aligned integer box. A default box is empty (min > max).
struct Box {
  Coord min{0, 0, 0};
  Coord max{-1, -1, -1};

  bool empty() const noexcept { return min[0] > max[0]; }
  bool contains(const Coord& c) const noexcept {
    for (int k = 0; k < 3; ++k) {
      if (c[k] < min[k] || c[k] > max[k]) return false;
    }
    return true;
  }
  friend bool operator==(const Box&, const Box&) = default;
};

struct Patch {
  std::vector<std::size_t> points;  // indices into the parent cloud, ascending
  Box bounds;                       // tight bounds of `points`
};

namespace detail {

inline Box bounds_of(const PointCloud& pc, const std::vector<std::size_t>& idx) {
  Box b;
  if (idx.empty()) return b;
  b.min = b.max = pc.coord(idx.front());
  for (std::size_t i : idx) {
    const Coord& c = pc.coord(i);
    for (int k = 0; k < 3; ++k) {
      b.min[k] = std::min(b.min[k], c[k]);
      b.max[k] = std::max(b.max[k], c[k]);
    }
  }
  return b;
}

inline void kd_split(const PointCloud& pc, std::vector<std::size_t> idx, int depth,
                     std::vector<Patch>& out) {
  if (depth == 0) {
    std::sort(idx.begin(), idx.end());
    Box b = bounds_of(pc, idx);
    out.push_back({std::move(idx), b});
    return;
  }
  const Box b = bounds_of(pc, idx);
  int axis = 0;
  if (!b.empty()) {
    // Longest extent; ties resolved x -> y -> z.
    for (int k = 1; k < 3; ++k) {
      if (b.max[k] - b.min[k] > b.max[axis] - b.min[axis]) axis = k;
    }
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t c) {
    const Coord& ca = pc.coord(a);
    const Coord& cc = pc.coord(c);
    if (ca[axis] != cc[axis]) return ca[axis] < cc[axis];
    if (ca != cc) return ca < cc;
    return a < c;
  });
  // The median point goes to the lower half.
  const std::size_t lower = (idx.size() + 1) / 2;
  std::vector<std::size_t> hi(idx.begin() + static_cast<std::ptrdiff_t>(lower), idx.end());
  idx.resize(lower);
  kd_split(pc, std::move(idx), depth - 1, out);
  kd_split(pc, std::move(hi), depth - 1, out);
}

}  // namespace detail

/// Splits the cloud into exactly 2^depth patches by recursive median splits
/// along the longest bounding-box axis.
inline std::vector<Patch> kd_partition(const PointCloud& pc, int depth) {
  if (depth < 0 || depth > 24) throw config_error("kd depth must be in [0, 24]");
  std::vector<std::size_t> all(pc.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<Patch> out;
  out.reserve(std::size_t{1} << depth);
  detail::kd_split(pc, std::move(all), depth, out);
  return out;
}

// ============================================================================
// Voxel blocks
// ============================================================================

struct VoxelBlock {
  Coord origin{0, 0, 0};  // multiple of block_size
  int block_size = 2;
  std::vector<std::size_t> point_indices;  // ascending
  std::vector<Coord> local_coords;         // coord - origin, per member

  std::size_t size() const noexcept { return point_indices.size(); }
};

inline void check_block_size(int block_size) {
  if (block_size != 2 && block_size != 4) {
    throw config_error("block size must be 2 or 4, got " + std::to_string(block_size));
  }
}

inline Coord block_origin(const Coord& c, int block_size) noexcept {
  return {c[0] / block_size * block_size, c[1] / block_size * block_size,
          c[2] / block_size * block_size};
}

/// Groups the points (optionally a subset) into cubic blocks, emitted in
/// lexicographic origin order.
inline std::vector<VoxelBlock> extract_blocks(const PointCloud& pc, int block_size,
                                              const std::vector<std::size_t>* subset = nullptr) {
  check_block_size(block_size);
  std::vector<std::size_t> idx;
  if (subset) {
    idx = *subset;
  } else {
    idx.resize(pc.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(idx.size());
  for (std::size_t i : idx) keyed.emplace_back(coord_key(block_origin(pc.coord(i), block_size)), i);
  std::sort(keyed.begin(), keyed.end());

  std::vector<VoxelBlock> blocks;
  for (std::size_t k = 0; k < keyed.size();) {
    VoxelBlock b;
    b.block_size = block_size;
    b.origin = block_origin(pc.coord(keyed[k].second), block_size);
    for (; k < keyed.size() && coord_key(b.origin) == keyed[k].first; ++k) {
      const std::size_t i = keyed[k].second;
      const Coord& c = pc.coord(i);
      b.point_indices.push_back(i);
      b.local_coords.push_back({c[0] - b.origin[0], c[1] - b.origin[1], c[2] - b.origin[2]});
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

// ============================================================================
// Multi-resolution coordinate mapping
// ============================================================================

/// round((2^(n-1) - 1) * c / (2^n - 1)), rounding halves away from zero.
inline std::int32_t downscale_component(std::int32_t c, int bit_depth) noexcept {
  const std::int64_t num = ((std::int64_t{1} << (bit_depth - 1)) - 1) * c;
  const std::int64_t den = (std::int64_t{1} << bit_depth) - 1;
  return static_cast<std::int32_t>((2 * num + den) / (2 * den));
}

inline Coord downscale_coord(const Coord& c, int bit_depth) noexcept {
  return {downscale_component(c[0], bit_depth), downscale_component(c[1], bit_depth),
          downscale_component(c[2], bit_depth)};
}

/// Child <-> parent correspondence between an n-bit cloud and its (n-1)-bit
/// (or coarser, after composition) downscale.
class ScaleMap {
 public:
  ScaleMap() = default;

  ScaleMap(std::vector<Coord> child_coords, std::vector<Coord> parent_coords,
           std::vector<std::size_t> parent_index)
      : child_coords_(std::move(child_coords)),
        parent_coords_(std::move(parent_coords)),
        parent_index_(std::move(parent_index)) {
    children_.resize(parent_coords_.size());
    for (std::size_t c = 0; c < child_coords_.size(); ++c) {
      children_[parent_index_[c]].push_back(c);
      child_lookup_.emplace(coord_key(child_coords_[c]), c);
    }
    for (std::size_t p = 0; p < parent_coords_.size(); ++p) {
      parent_lookup_.emplace(coord_key(parent_coords_[p]), p);
    }
  }

  const std::vector<Coord>& child_coords() const noexcept { return child_coords_; }
  const std::vector<Coord>& parent_coords() const noexcept { return parent_coords_; }
  /// parent_index()[c] is the parent of child c.
  const std::vector<std::size_t>& parent_index() const noexcept { return parent_index_; }
  /// children()[p] lists the children of parent p, ascending.
  const std::vector<std::vector<std::size_t>>& children() const noexcept { return children_; }

  std::optional<Coord> parent_of(const Coord& child) const {
    auto it = child_lookup_.find(coord_key(child));
    if (it == child_lookup_.end()) return std::nullopt;
    return parent_coords_[parent_index_[it->second]];
  }

  std::vector<Coord> children_of(const Coord& parent) const {
    std::vector<Coord> out;
    auto it = parent_lookup_.find(coord_key(parent));
    if (it == parent_lookup_.end()) return out;
    for (std::size_t c : children_[it->second]) out.push_back(child_coords_[c]);
    return out;
  }

  std::optional<std::size_t> parent_slot(const Coord& parent) const {
    auto it = parent_lookup_.find(coord_key(parent));
    if (it == parent_lookup_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<Coord> child_coords_;
  std::vector<Coord> parent_coords_;
  std::vector<std::size_t> parent_index_;
  std::vector<std::vector<std::size_t>> children_;
  std::unordered_map<std::uint64_t, std::size_t> child_lookup_;
  std::unordered_map<std::uint64_t, std::size_t> parent_lookup_;
};

struct Downscaled {
  PointCloud cloud;  // geometry only, lexicographically sorted
  ScaleMap map;
};

/// Maps an n-bit cloud to n-1 bits; colliding parents merge into one point.
inline Downscaled downscale_coords(const PointCloud& pc) {
  const int n = pc.bit_depth();
  if (n < 2) throw config_error("downscale needs bit depth >= 2, got " + std::to_string(n));

  std::vector<Coord> mapped(pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i) mapped[i] = downscale_coord(pc.coord(i), n);

  std::vector<std::uint64_t> keys(mapped.size());
  std::transform(mapped.begin(), mapped.end(), keys.begin(), coord_key);
  std::vector<std::uint64_t> unique_keys = keys;
  std::sort(unique_keys.begin(), unique_keys.end());
  unique_keys.erase(std::unique(unique_keys.begin(), unique_keys.end()), unique_keys.end());

  std::vector<Coord> parents(unique_keys.size());
  std::vector<std::size_t> parent_index(pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const auto slot = static_cast<std::size_t>(
        std::lower_bound(unique_keys.begin(), unique_keys.end(), keys[i]) - unique_keys.begin());
    parent_index[i] = slot;
    parents[slot] = mapped[i];
  }
  PointCloud coarse(parents, {}, n - 1);
  return {std::move(coarse), ScaleMap(pc.coords(), std::move(parents), std::move(parent_index))};
}

/// Composes fine (n -> n-1) with coarse (n-1 -> n-2) into n -> n-2.
inline ScaleMap compose(const ScaleMap& fine, const ScaleMap& coarse) {
  std::vector<std::size_t> index(fine.child_coords().size());
  for (std::size_t c = 0; c < index.size(); ++c) {
    const Coord& mid = fine.parent_coords()[fine.parent_index()[c]];
    const auto parent = coarse.parent_of(mid);
    if (!parent) throw config_error("scale maps do not compose at " + to_string(mid));
    index[c] = *coarse.parent_slot(*parent);
  }
  return ScaleMap(fine.child_coords(), coarse.parent_coords(), std::move(index));
}

/// Copies each parent's feature row to all of its children, in child order.
inline Eigen::MatrixXd unpool(const PointCloud& children, const std::vector<Coord>& parent_coords,
                              const Eigen::MatrixXd& parent_features, const ScaleMap& map) {
  if (static_cast<std::size_t>(parent_features.rows()) != parent_coords.size()) {
    throw config_error("parent feature rows do not match parent coordinates");
  }
  std::unordered_map<std::uint64_t, Eigen::Index> row_of;
  row_of.reserve(parent_coords.size());
  for (std::size_t p = 0; p < parent_coords.size(); ++p) {
    row_of.emplace(coord_key(parent_coords[p]), static_cast<Eigen::Index>(p));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(children.size()), parent_features.cols());
  for (std::size_t c = 0; c < children.size(); ++c) {
    const Coord& child = children.coord(c);
    const auto parent = map.parent_of(child);
    if (!parent) throw config_error("child " + to_string(child) + " is not in the scale map");
    auto it = row_of.find(coord_key(*parent));
    if (it == row_of.end()) {
      throw config_error("no feature for parent " + to_string(*parent) + " of orphan child " +
                         to_string(child));
    }
    out.row(static_cast<Eigen::Index>(c)) = parent_features.row(it->second);
  }
  return out;
}

}  // namespace gftl

#endif  // GFTLATENT_VOXEL_GRID_HPP
