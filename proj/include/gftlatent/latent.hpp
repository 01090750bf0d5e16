// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_LATENT_HPP
#define GFTLATENT_LATENT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gftlatent/byte_io.hpp"
#include "gftlatent/error.hpp"
#include "gftlatent/gft.hpp"
#include "gftlatent/point_cloud.hpp"
#include "gftlatent/voxel_grid.hpp"

namespace gftl {

// ============================================================================
// Lloyd-Max frequency quantizer
// ============================================================================

struct QuantizerConfig {
  int bins = 32;
  double f_max = 1.0;  // centroids start uniformly over [-f_max, f_max]
  int max_iters = 200;
  double tol = 1e-10;  // stop when no centroid moves by tol or more

  void validate() const {
    if (bins < 1) throw config_error("quantizer needs at least one bin");
    if (!(f_max > 0.0) || !std::isfinite(f_max)) throw config_error("f_max must be positive");
    if (max_iters < 0) throw config_error("max_iters must be non-negative");
    if (!(tol > 0.0)) throw config_error("tol must be positive");
  }
};

/// Bin count paired with each block size: 32 for 2^3 blocks, 64 for 4^3.
inline int default_bins(int block_size) { return block_size == 4 ? 64 : 32; }

struct LloydMaxQuantizer {
  std::vector<double> centroids;   // non-decreasing, length K
  std::vector<double> boundaries;  // midpoints, length K - 1
  double mse = 0.0;                // final quantization MSE on the fit samples
  int iterations = 0;
  std::vector<double> mse_trace;   // MSE of each assignment step, first = initial

  int bins() const noexcept { return static_cast<int>(centroids.size()); }

  static LloydMaxQuantizer from_centroids(std::vector<double> centroids) {
    LloydMaxQuantizer q;
    q.centroids = std::move(centroids);
    q.refresh_boundaries();
    return q;
  }

  void refresh_boundaries() {
    boundaries.resize(centroids.empty() ? 0 : centroids.size() - 1);
    for (std::size_t i = 0; i + 1 < centroids.size(); ++i) {
      boundaries[i] = (centroids[i] + centroids[i + 1]) / 2.0;
    }
  }
};

/// Nearest-centroid bin; a value on a boundary goes to the lower bin.
inline int bin_index(const LloydMaxQuantizer& q, double f) {
  return static_cast<int>(std::lower_bound(q.boundaries.begin(), q.boundaries.end(), f) -
                          q.boundaries.begin());
}

/// Largest |sample|, or 1 when every sample is zero.
inline double default_f_max(std::span<const double> samples) {
  double m = 0.0;
  for (double s : samples) m = std::max(m, std::abs(s));
  return m > 0.0 ? m : 1.0;
}

namespace detail {

// Bin b owns sorted[begin[b], begin[b + 1]).
inline std::vector<std::size_t> bin_ranges(const std::vector<double>& sorted,
                                           const std::vector<double>& boundaries) {
  std::vector<std::size_t> begin(boundaries.size() + 2, 0);
  for (std::size_t b = 0; b < boundaries.size(); ++b) {
    begin[b + 1] = static_cast<std::size_t>(
        std::upper_bound(sorted.begin(), sorted.end(), boundaries[b]) - sorted.begin());
  }
  begin.back() = sorted.size();
  return begin;
}

inline double quantizer_mse(const std::vector<double>& sorted, const std::vector<double>& centroids,
                            const std::vector<std::size_t>& begin) {
  double sse = 0.0;
  for (std::size_t b = 0; b < centroids.size(); ++b) {
    for (std::size_t i = begin[b]; i < begin[b + 1]; ++i) {
      const double e = sorted[i] - centroids[b];
      sse += e * e;
    }
  }
  return sse / static_cast<double>(sorted.size());
}

}  // namespace detail

/// Fits a K-level scalar quantizer by alternating nearest-centroid assignment
/// and mean recentering. Bins that receive no sample keep their centroid.
inline LloydMaxQuantizer lloyd_max_fit(std::span<const double> samples, const QuantizerConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw config_error("lloyd_max_fit needs at least one sample");
  for (double s : samples) {
    if (!std::isfinite(s)) throw numeric_error("lloyd_max_fit sample is not finite");
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());

  LloydMaxQuantizer q;
  const auto k = static_cast<std::size_t>(cfg.bins);
  q.centroids.resize(k);
  if (k == 1) {
    q.centroids[0] = 0.0;
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      q.centroids[i] = -cfg.f_max + 2.0 * cfg.f_max * static_cast<double>(i) /
                                        static_cast<double>(k - 1);
    }
  }
  q.refresh_boundaries();

  auto ranges = detail::bin_ranges(sorted, q.boundaries);
  q.mse_trace.push_back(detail::quantizer_mse(sorted, q.centroids, ranges));
  for (int it = 0; it < cfg.max_iters; ++it) {
    double moved = 0.0;
    for (std::size_t b = 0; b < k; ++b) {
      if (ranges[b] == ranges[b + 1]) continue;
      double sum = 0.0;
      for (std::size_t i = ranges[b]; i < ranges[b + 1]; ++i) sum += sorted[i];
      const double mean = sum / static_cast<double>(ranges[b + 1] - ranges[b]);
      moved = std::max(moved, std::abs(mean - q.centroids[b]));
      q.centroids[b] = mean;
    }
    q.refresh_boundaries();
    ranges = detail::bin_ranges(sorted, q.boundaries);
    q.mse_trace.push_back(detail::quantizer_mse(sorted, q.centroids, ranges));
    q.iterations = it + 1;
    if (moved < cfg.tol) break;
  }
  q.mse = q.mse_trace.back();
  return q;
}

// ============================================================================
// Latent vectors
// ============================================================================

/// Binned spectrum of one block: bins() values per channel, stored Y | U | V.
struct LatentVector {
  std::vector<double> values;

  LatentVector() = default;
  explicit LatentVector(int bins) : values(3 * static_cast<std::size_t>(bins), 0.0) {}

  int bins() const noexcept { return static_cast<int>(values.size() / 3); }
  std::size_t width() const noexcept { return values.size(); }
  double& at(int channel, int bin) {
    return values[static_cast<std::size_t>(channel * bins() + bin)];
  }
  double at(int channel, int bin) const {
    return values[static_cast<std::size_t>(channel * bins() + bin)];
  }
  std::span<const double> flat() const noexcept { return values; }

  friend bool operator==(const LatentVector&, const LatentVector&) = default;
};

/// Sums each channel's coefficients into the bin of their frequency,
/// visiting frequencies in ascending index order.
inline LatentVector assemble_latent(const SpectralCoeffs& coeffs, const LloydMaxQuantizer& q,
                                    int bins) {
  if (bins != q.bins()) {
    throw config_error("latent bin count " + std::to_string(bins) +
                       " does not match quantizer with " + std::to_string(q.bins()) + " bins");
  }
  LatentVector latent(bins);
  for (Eigen::Index i = 0; i < coeffs.n(); ++i) {
    const int b = bin_index(q, coeffs.frequencies[i]);
    for (int c = 0; c < 3; ++c) latent.at(c, b) += coeffs.z(i, c);
  }
  return latent;
}

/// Approximate inverse of assemble_latent for one block: a bin holding a
/// single frequency returns its value to that frequency; a bin shared by m
/// frequencies gives each an equal 1/m share (lossy).
inline SpectralCoeffs split_latent(const LatentVector& latent, const Eigen::VectorXd& frequencies,
                                   const LloydMaxQuantizer& q) {
  if (latent.bins() != q.bins()) throw config_error("latent and quantizer bin counts differ");
  const Eigen::Index n = frequencies.size();
  std::vector<int> bin(static_cast<std::size_t>(n));
  std::vector<int> members(static_cast<std::size_t>(q.bins()), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    bin[static_cast<std::size_t>(i)] = bin_index(q, frequencies[i]);
    ++members[static_cast<std::size_t>(bin[static_cast<std::size_t>(i)])];
  }
  SpectralCoeffs out{AttrMatrix(n, 3), frequencies};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int b = bin[static_cast<std::size_t>(i)];
    const double share = 1.0 / members[static_cast<std::size_t>(b)];
    for (int c = 0; c < 3; ++c) out.z(i, c) = latent.at(c, b) * share;
  }
  return out;
}

// ============================================================================
// GFTL latent files
// ============================================================================
//
// 32-byte header, little-endian:
//   0  char[4]  "GFTL"
//   4  u8       version (1)
//   5  u8       block_size (2 or 4)
//   6  u16      K (bins per channel)
//   8  u64      point count
//   16 u8       bit depth of the point coordinates
//   17 u8       flags (bit 0: K differs from the block size default)
//   18 u8[14]   reserved, zero
// then per point: 3 x i32 coordinate, 3K x f32 latent (Y bins, U bins, V bins).

inline constexpr std::size_t kGftlHeaderBytes = 32;
inline constexpr std::uint8_t kGftlVersion = 1;

struct LatentFile {
  PointCloud cloud;  // geometry only
  int block_size = 2;
  std::vector<LatentVector> latents;
};

inline std::size_t gftl_record_bytes(int bins) { return 12 + 3 * static_cast<std::size_t>(bins) * 4; }

inline void serialize_latents(const PointCloud& cloud, std::span<const LatentVector> latents,
                              int block_size, int bins, std::ostream& os) {
  check_block_size(block_size);
  if (cloud.size() != latents.size()) {
    throw config_error("serialize_latents: " + std::to_string(cloud.size()) + " points but " +
                       std::to_string(latents.size()) + " latents");
  }
  if (bins < 1 || bins > 0xFFFF) throw config_error("bin count out of range");
  for (const auto& l : latents) {
    if (l.bins() != bins) throw config_error("latent width does not match bin count");
  }
  os.write("GFTL", 4);
  byte_io::write_le<std::uint8_t>(os, kGftlVersion);
  byte_io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(block_size));
  byte_io::write_le<std::uint16_t>(os, static_cast<std::uint16_t>(bins));
  byte_io::write_le<std::uint64_t>(os, cloud.size());
  byte_io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(cloud.bit_depth()));
  byte_io::write_le<std::uint8_t>(os, bins != default_bins(block_size) ? 1 : 0);
  const char reserved[14] = {};
  os.write(reserved, sizeof(reserved));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::int32_t v : cloud.coord(i)) byte_io::write_le(os, v);
    for (double v : latents[i].values) byte_io::write_le(os, static_cast<float>(v));
  }
}

inline void serialize_latents(const PointCloud& cloud, std::span<const LatentVector> latents,
                              int block_size, int bins, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw io_error("cannot open '" + path.string() + "' for writing");
  serialize_latents(cloud, latents, block_size, bins, os);
  os.flush();
  if (!os) throw io_error("write to '" + path.string() + "' failed");
}

inline LatentFile deserialize_latents(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4)) throw parse_error("truncated file while reading GFTL magic");
  if (std::memcmp(magic, "GFTL", 4) != 0) throw parse_error("bad magic: not a GFTL latent file");
  const auto version = byte_io::read_le<std::uint8_t>(is, "version");
  if (version != kGftlVersion) {
    throw parse_error("unsupported GFTL version " + std::to_string(version));
  }
  const int block_size = byte_io::read_le<std::uint8_t>(is, "block size");
  const int bins = byte_io::read_le<std::uint16_t>(is, "bin count");
  const auto count = byte_io::read_le<std::uint64_t>(is, "point count");
  const int bit_depth = byte_io::read_le<std::uint8_t>(is, "bit depth");
  const auto flags = byte_io::read_le<std::uint8_t>(is, "flags");
  char reserved[14];
  if (!is.read(reserved, sizeof(reserved))) throw parse_error("truncated GFTL header");

  if (block_size != 2 && block_size != 4) {
    throw parse_error("GFTL declares block size " + std::to_string(block_size));
  }
  if (bins < 1 || ((flags & 1) == 0 && bins != default_bins(block_size))) {
    throw parse_error("GFTL K=" + std::to_string(bins) + " does not match block size " +
                      std::to_string(block_size));
  }
  if (bit_depth < 1 || bit_depth > kMaxBitDepth) {
    throw parse_error("GFTL declares bit depth " + std::to_string(bit_depth));
  }

  std::vector<Coord> coords;
  std::vector<LatentVector> latents;
  const std::size_t record = gftl_record_bytes(bins);
  std::vector<char> buf(record);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (!is.read(buf.data(), static_cast<std::streamsize>(record))) {
      throw parse_error("truncated GFTL file: expected " + std::to_string(count) +
                        " records, got " + std::to_string(i));
    }
    Coord c{};
    for (int k = 0; k < 3; ++k) c[k] = byte_io::from_le_bytes<std::int32_t>(buf.data() + 4 * k);
    LatentVector l(bins);
    for (std::size_t j = 0; j < l.values.size(); ++j) {
      l.values[j] = byte_io::from_le_bytes<float>(buf.data() + 12 + 4 * j);
    }
    coords.push_back(c);
    latents.push_back(std::move(l));
  }
  return {PointCloud(std::move(coords), {}, bit_depth), block_size, std::move(latents)};
}

inline LatentFile deserialize_latents(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open '" + path.string() + "' for reading");
  return deserialize_latents(is);
}

}  // namespace gftl

#endif  // GFTLATENT_LATENT_HPP
