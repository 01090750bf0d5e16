// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_PIPELINE_HPP
#define GFTLATENT_PIPELINE_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gftlatent/error.hpp"
#include "gftlatent/gft.hpp"
#include "gftlatent/latent.hpp"
#include "gftlatent/parallel.hpp"
#include "gftlatent/point_cloud.hpp"
#include "gftlatent/spectral_graph.hpp"
#include "gftlatent/voxel_grid.hpp"

namespace gftl {

struct PipelineConfig {
  int block_size = 2;
  int bins = 0;                 // 0: 32 for block size 2, 64 for block size 4
  std::optional<double> alpha;  // unset: per-block automatic scale
  DistanceMode distance = DistanceMode::kColor;
  int kd_depth = 0;
  int threads = 1;
  std::uint64_t seed = 0;
  std::string color_matrix = "bt709";
  bool force = false;  // allow K that does not match the block size
  int quantizer_max_iters = 200;
  double quantizer_tol = 1e-10;

  int effective_bins() const { return bins > 0 ? bins : default_bins(block_size); }

  void validate() const {
    check_block_size(block_size);
    if (bins < 0 || bins > 0xFFFF) throw config_error("bin count out of range");
    if (!force && effective_bins() != default_bins(block_size)) {
      throw config_error("K=" + std::to_string(effective_bins()) + " does not match block size " +
                         std::to_string(block_size) + " (expected " +
                         std::to_string(default_bins(block_size)) + "; pass --force to override)");
    }
    if (alpha && !(*alpha > 0.0)) throw config_error("alpha must be positive");
    if (kd_depth < 0 || kd_depth > 24) throw config_error("kd depth must be in [0, 24]");
    if (threads < 1) throw config_error("threads must be >= 1");
  }
};

/// Number of single-step downscales that take a block to one coarse point.
inline int downscale_levels(int block_size) { return block_size == 4 ? 2 : 1; }

/// Per-block graphs and spectra of one cloud plus the global quantizer.
struct BlockAnalysis {
  std::vector<Patch> patches;
  std::vector<VoxelBlock> blocks;  // lexicographic origin order
  std::vector<Spectrum> spectra;
  PointCloud coarse;               // block_i <-> coarse point i
  LloydMaxQuantizer quantizer;
  double f_max = 0.0;
};

namespace detail {

inline std::vector<Yuv> member_attrs(const PointCloud& pc, const VoxelBlock& b) {
  std::vector<Yuv> out;
  if (!pc.has_attributes()) return out;
  out.reserve(b.size());
  for (std::size_t i : b.point_indices) out.push_back(pc.attr(i));
  return out;
}

}  // namespace detail

inline BlockAnalysis analyze_blocks(const PointCloud& pc, const PipelineConfig& cfg) {
  cfg.validate();
  if (pc.empty()) throw parse_error("empty point cloud");
  if (cfg.distance == DistanceMode::kColor && !pc.has_attributes()) {
    throw config_error("color-distance graphs need an attributed cloud");
  }

  BlockAnalysis a;
  a.patches = kd_partition(pc, cfg.kd_depth);
  a.blocks = extract_blocks(pc, cfg.block_size);

  // Coordinates are only re-declared, never changed, when the bit depth is
  // raised so that the downscale steps are defined.
  const int levels = downscale_levels(cfg.block_size);
  PointCloud level = pc.with_attributes({}).with_bit_depth(
      std::max(pc.bit_depth(), std::min(kMaxBitDepth, levels + 1)));
  for (int l = 0; l < levels; ++l) level = downscale_coords(level).cloud;
  a.coarse = std::move(level);
  if (a.coarse.size() != a.blocks.size()) {
    throw numeric_error("downscaled cloud has " + std::to_string(a.coarse.size()) +
                        " points for " + std::to_string(a.blocks.size()) + " blocks");
  }
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    const Coord& o = a.blocks[i].origin;
    const Coord expect{o[0] / cfg.block_size, o[1] / cfg.block_size, o[2] / cfg.block_size};
    if (a.coarse.coord(i) != expect) {
      throw numeric_error("block " + to_string(o) + " does not map to coarse point " +
                          to_string(a.coarse.coord(i)));
    }
  }

  a.spectra.resize(a.blocks.size());
  parallel_for(a.blocks.size(), cfg.threads, [&](std::size_t i) {
    const auto attrs = detail::member_attrs(pc, a.blocks[i]);
    const BlockGraph g = build_graph(a.blocks[i], attrs, cfg.alpha, cfg.distance);
    a.spectra[i] = eigendecompose(laplacian(g));
  });

  std::vector<double> frequencies;
  for (const auto& s : a.spectra) {
    frequencies.insert(frequencies.end(), s.eigenvalues.data(),
                       s.eigenvalues.data() + s.eigenvalues.size());
  }
  QuantizerConfig qc;
  qc.bins = cfg.effective_bins();
  qc.f_max = default_f_max(frequencies);
  qc.max_iters = cfg.quantizer_max_iters;
  qc.tol = cfg.quantizer_tol;
  a.quantizer = lloyd_max_fit(frequencies, qc);
  a.f_max = qc.f_max;
  return a;
}

struct EncodeStats {
  std::size_t points = 0;
  int bit_depth = 0;
  std::size_t patches = 0;
  std::size_t largest_patch = 0;
  std::size_t smallest_patch = 0;
  std::size_t blocks = 0;
  double mean_block_size = 0.0;
  std::size_t max_block_size = 0;
  std::size_t latent_points = 0;
  int bins = 0;
  std::size_t latent_width = 0;
  double f_max = 0.0;
  double quantizer_mse = 0.0;
  int quantizer_iterations = 0;
};

struct EncodeResult {
  LatentFile file;
  LloydMaxQuantizer quantizer;
  EncodeStats stats;
};

/// Cloud -> blocks -> spectra -> global quantizer -> one latent per coarse point.
inline EncodeResult encode_cloud(const PointCloud& pc, const PipelineConfig& cfg) {
  BlockAnalysis a = analyze_blocks(pc, cfg);
  const int bins = cfg.effective_bins();

  std::vector<LatentVector> latents(a.blocks.size());
  parallel_for(a.blocks.size(), cfg.threads, [&](std::size_t i) {
    const AttrMatrix x = to_attr_matrix(detail::member_attrs(pc, a.blocks[i]));
    latents[i] = assemble_latent(gft_forward(a.spectra[i], x), a.quantizer, bins);
  });

  EncodeStats st;
  st.points = pc.size();
  st.bit_depth = pc.bit_depth();
  st.patches = a.patches.size();
  st.smallest_patch = pc.size();
  for (const auto& p : a.patches) {
    st.largest_patch = std::max(st.largest_patch, p.points.size());
    st.smallest_patch = std::min(st.smallest_patch, p.points.size());
  }
  st.blocks = a.blocks.size();
  for (const auto& b : a.blocks) st.max_block_size = std::max(st.max_block_size, b.size());
  st.mean_block_size = static_cast<double>(pc.size()) / static_cast<double>(a.blocks.size());
  st.latent_points = latents.size();
  st.bins = bins;
  st.latent_width = 3 * static_cast<std::size_t>(bins);
  st.f_max = a.f_max;
  st.quantizer_mse = a.quantizer.mse;
  st.quantizer_iterations = a.quantizer.iterations;

  EncodeResult r;
  r.file = {std::move(a.coarse), cfg.block_size, std::move(latents)};
  r.quantizer = std::move(a.quantizer);
  r.stats = st;
  return r;
}

/// Rebuilds attributes from a latent file using the reference cloud's
/// geometry (and, in color mode, its colors) to recover block spectra.
///
/// Diagnostic inverse: bins shared by several frequencies of one block are
/// split equally, so reconstruction is exact only when each block's
/// frequencies fall in distinct bins.
inline PointCloud decode_latents(const LatentFile& file, const PointCloud& reference,
                                 PipelineConfig cfg) {
  cfg.block_size = file.block_size;
  if (file.latents.empty()) {
    if (!reference.empty()) throw config_error("latent file is empty but the reference is not");
    return reference;
  }
  cfg.bins = file.latents.front().bins();
  cfg.force = true;
  const BlockAnalysis a = analyze_blocks(reference, cfg);
  if (a.coarse.coords() != file.cloud.coords()) {
    throw config_error("reference geometry does not match the latent file (" +
                       std::to_string(a.coarse.size()) + " vs " +
                       std::to_string(file.cloud.size()) + " coarse points)");
  }

  std::vector<Yuv> attrs(reference.size());
  parallel_for(a.blocks.size(), cfg.threads, [&](std::size_t i) {
    const SpectralCoeffs z = split_latent(file.latents[i], a.spectra[i].eigenvalues, a.quantizer);
    const AttrMatrix x = gft_inverse(a.spectra[i], z);
    const auto& members = a.blocks[i].point_indices;
    for (std::size_t k = 0; k < members.size(); ++k) {
      for (int c = 0; c < 3; ++c) attrs[members[k]][c] = x(static_cast<Eigen::Index>(k), c);
    }
  });
  return reference.with_attributes(std::move(attrs));
}

}  // namespace gftl

#endif  // GFTLATENT_PIPELINE_HPP
