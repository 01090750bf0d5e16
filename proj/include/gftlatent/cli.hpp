// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_CLI_HPP
#define GFTLATENT_CLI_HPP

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gftlatent/diagnostics.hpp"
#include "gftlatent/error.hpp"
#include "gftlatent/latent.hpp"
#include "gftlatent/metrics.hpp"
#include "gftlatent/nn_kernels.hpp"
#include "gftlatent/pipeline.hpp"
#include "gftlatent/ply.hpp"
#include "gftlatent/voxel_grid.hpp"

namespace gftl::cli {

namespace detail {

struct SharedFlags {
  int block_size = 2;
  int bins = 0;
  std::string alpha = "auto";
  std::string distance = "color";
  int kd_depth = 0;
  int threads = 1;
  std::uint64_t seed = 0;
  std::string color_matrix = "bt709";
  bool force = false;

  PipelineConfig to_config() const {
    PipelineConfig cfg;
    cfg.block_size = block_size;
    cfg.bins = bins;
    if (alpha != "auto") {
      try {
        std::size_t used = 0;
        cfg.alpha = std::stod(alpha, &used);
        if (used != alpha.size()) throw std::invalid_argument(alpha);
      } catch (const std::logic_error&) {
        throw config_error("--alpha must be 'auto' or a positive number, got '" + alpha + "'");
      }
    }
    if (distance == "color") {
      cfg.distance = DistanceMode::kColor;
    } else if (distance == "geometry") {
      cfg.distance = DistanceMode::kGeometry;
    } else {
      throw config_error("--distance must be color or geometry");
    }
    cfg.kd_depth = kd_depth;
    cfg.threads = threads;
    cfg.seed = seed;
    cfg.color_matrix = color_matrix;
    cfg.force = force;
    ColorMatrix::by_name(color_matrix);
    cfg.validate();
    return cfg;
  }
};

inline void add_shared_flags(CLI::App* cmd, SharedFlags& f) {
  cmd->add_option("--block-size", f.block_size, "voxel block edge: 2 (9-bit branch) or 4 (8-bit branch)");
  cmd->add_option("--bins", f.bins, "frequency bins per channel K (default 32 for 2, 64 for 4)");
  cmd->add_option("--alpha", f.alpha, "edge weight scale, or 'auto' for 1/mean block distance");
  cmd->add_option("--distance", f.distance, "edge distance: color or geometry");
  cmd->add_option("--kd-depth", f.kd_depth, "k-d tree depth for patch partitioning");
  cmd->add_option("--threads", f.threads, "worker threads for per-block work");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--color-matrix", f.color_matrix, "RGB<->YUV preset: bt709 or bt601");
  cmd->add_flag("--force", f.force, "allow a bin count that does not match the block size");
}

inline PlyReadOptions read_options(const std::string& matrix) {
  PlyReadOptions o;
  o.color_matrix = ColorMatrix::by_name(matrix);
  return o;
}

inline ColorSpace parse_color_space(const std::string& s) {
  if (s == "yuv") return ColorSpace::kYuv;
  if (s == "rgb") return ColorSpace::kRgb;
  throw config_error("--color-space must be yuv or rgb");
}

inline PlyFormat parse_format(const std::string& s) {
  if (s == "binary") return PlyFormat::kBinaryLittleEndian;
  if (s == "ascii") return PlyFormat::kAscii;
  throw config_error("--format must be binary or ascii");
}

inline void write_scale_map(const ScaleMap& map, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open '" + path.string() + "' for writing");
  for (std::size_t c = 0; c < map.child_coords().size(); ++c) {
    const Coord& k = map.child_coords()[c];
    const Coord& p = map.parent_coords()[map.parent_index()[c]];
    os << k[0] << ' ' << k[1] << ' ' << k[2] << " -> " << p[0] << ' ' << p[1] << ' ' << p[2]
       << '\n';
  }
  if (!os.flush()) throw io_error("write to '" + path.string() + "' failed");
}

}  // namespace detail

/// Entry point of the `gftl` tool. Returns the process exit code:
/// 0 success, 2 parse, 3 config, 4 numeric, 5 I/O.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph Fourier latent attributes for voxelized point clouds"};
  app.require_subcommand(1);

  detail::SharedFlags shared;
  std::string in_path, out_path, ref_path, map_path, parent_path;
  std::string color_space = "yuv", format = "binary";
  double peak = 255.0;
  int instances = 100;

  auto* encode = app.add_subcommand("encode", "PLY -> per-block GFT -> binned latents (GFTL)");
  encode->add_option("input", in_path, "input PLY")->required();
  encode->add_option("output", out_path, "output GFTL file")->required();
  detail::add_shared_flags(encode, shared);

  auto* decode = app.add_subcommand(
      "decode",
      "GFTL + reference PLY -> PLY (diagnostic: bins shared by several frequencies are split "
      "equally, which is lossy)");
  decode->add_option("input", in_path, "input GFTL file")->required();
  decode->add_option("reference", ref_path, "reference PLY providing block geometry and graphs")->required();
  decode->add_option("output", out_path, "output PLY")->required();
  decode->add_option("--color-space", color_space, "output colors: yuv or rgb");
  decode->add_option("--format", format, "output PLY encoding: binary or ascii");
  detail::add_shared_flags(decode, shared);

  auto* downscale = app.add_subcommand("downscale", "n-bit PLY -> (n-1)-bit geometry PLY + scale map");
  downscale->add_option("input", in_path, "input PLY")->required();
  downscale->add_option("output", out_path, "output PLY")->required();
  downscale->add_option("--map", map_path, "scale-map sidecar (default: <output>.map)");
  downscale->add_option("--format", format, "output PLY encoding: binary or ascii");
  downscale->add_option("--color-matrix", shared.color_matrix, "RGB<->YUV preset");

  auto* unpool_cmd = app.add_subcommand("unpool", "copy (n-1)-bit parent attributes onto n-bit children");
  unpool_cmd->add_option("children", in_path, "n-bit child PLY (geometry)")->required();
  unpool_cmd->add_option("parents", parent_path, "(n-1)-bit parent PLY with attributes")->required();
  unpool_cmd->add_option("output", out_path, "output PLY")->required();
  unpool_cmd->add_option("--color-space", color_space, "output colors: yuv or rgb");
  unpool_cmd->add_option("--format", format, "output PLY encoding: binary or ascii");
  unpool_cmd->add_option("--color-matrix", shared.color_matrix, "RGB<->YUV preset");

  auto* psnr_cmd = app.add_subcommand("psnr", "per-channel PSNR between two attributed PLYs");
  psnr_cmd->add_option("reference", ref_path, "reference PLY")->required();
  psnr_cmd->add_option("test", in_path, "test PLY")->required();
  psnr_cmd->add_option("--peak", peak, "peak signal value");
  psnr_cmd->add_option("--color-matrix", shared.color_matrix, "RGB<->YUV preset");

  auto* bdrate = app.add_subcommand("bdrate", "Bjontegaard delta rate of two RD curve CSVs");
  bdrate->add_option("anchor", ref_path, "anchor CSV (bpp,psnr)")->required();
  bdrate->add_option("test", in_path, "test CSV (bpp,psnr)")->required();

  auto* selfcheck = app.add_subcommand("selfcheck", "run the gradient and spectrum invariant suites");
  selfcheck->add_option("--seed", shared.seed, "random seed");
  selfcheck->add_option("--instances", instances, "random instances per suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kConfig);
  }

  try {
    if (encode->parsed()) {
      const PipelineConfig cfg = shared.to_config();
      const PointCloud pc = read_ply(in_path, detail::read_options(cfg.color_matrix));
      if (pc.empty()) throw parse_error("empty point cloud");
      const EncodeResult r = encode_cloud(pc, cfg);
      serialize_latents(r.file.cloud, r.file.latents, r.file.block_size, r.stats.bins, out_path);
      const auto& s = r.stats;
      out << std::setprecision(10) << "points=" << s.points << "\nbit_depth=" << s.bit_depth
          << "\npatches=" << s.patches << "\nlargest_patch=" << s.largest_patch
          << "\nsmallest_patch=" << s.smallest_patch << "\nblocks=" << s.blocks
          << "\nmean_block_size=" << s.mean_block_size << "\nmax_block_size=" << s.max_block_size
          << "\nlatent_points=" << s.latent_points << "\nbins=" << s.bins
          << "\nlatent_width=" << s.latent_width << "\nf_max=" << s.f_max
          << "\nquantizer_mse=" << s.quantizer_mse
          << "\nquantizer_iterations=" << s.quantizer_iterations << "\n";
      return 0;
    }
    if (decode->parsed()) {
      const PipelineConfig cfg = shared.to_config();
      const LatentFile file = deserialize_latents(in_path);
      const PointCloud ref = read_ply(ref_path, detail::read_options(cfg.color_matrix));
      const PointCloud rec = decode_latents(file, ref, cfg);
      PlyWriteOptions w;
      w.format = detail::parse_format(format);
      w.color_matrix = ColorMatrix::by_name(cfg.color_matrix);
      write_ply(rec, out_path, detail::parse_color_space(color_space), w);
      out << "points=" << rec.size() << "\nlatent_points=" << file.latents.size() << "\n";
      return 0;
    }
    if (downscale->parsed()) {
      const PointCloud pc = read_ply(in_path, detail::read_options(shared.color_matrix));
      const Downscaled d = downscale_coords(pc);
      PlyWriteOptions w;
      w.format = detail::parse_format(format);
      write_ply(d.cloud, out_path, ColorSpace::kYuv, w);
      detail::write_scale_map(d.map, map_path.empty() ? out_path + ".map" : map_path);
      out << "points=" << pc.size() << "\nbit_depth=" << pc.bit_depth()
          << "\ndownscaled_points=" << d.cloud.size() << "\ndownscaled_bit_depth="
          << d.cloud.bit_depth() << "\n";
      return 0;
    }
    if (unpool_cmd->parsed()) {
      const auto opts = detail::read_options(shared.color_matrix);
      const PointCloud children = read_ply(in_path, opts);
      PointCloud parents = read_ply(parent_path, opts);
      if (!parents.has_attributes()) throw config_error("parent PLY carries no attributes");
      if (children.bit_depth() < 2) throw config_error("child cloud must be at least 2-bit");
      const Downscaled d = downscale_coords(children);
      Eigen::MatrixXd features(static_cast<Eigen::Index>(parents.size()), 3);
      for (std::size_t i = 0; i < parents.size(); ++i) {
        for (int c = 0; c < 3; ++c) features(static_cast<Eigen::Index>(i), c) = parents.attr(i)[c];
      }
      const Eigen::MatrixXd rows = gftl::unpool(children, parents.coords(), features, d.map);
      std::vector<Yuv> attrs(children.size());
      for (std::size_t i = 0; i < attrs.size(); ++i) {
        for (int c = 0; c < 3; ++c) attrs[i][c] = rows(static_cast<Eigen::Index>(i), c);
      }
      PlyWriteOptions w;
      w.format = detail::parse_format(format);
      w.color_matrix = ColorMatrix::by_name(shared.color_matrix);
      write_ply(children.with_attributes(std::move(attrs)), out_path,
                detail::parse_color_space(color_space), w);
      out << "children=" << children.size() << "\nparents=" << parents.size() << "\n";
      return 0;
    }
    if (psnr_cmd->parsed()) {
      const auto opts = detail::read_options(shared.color_matrix);
      const auto p = psnr_yuv(read_ply(ref_path, opts), read_ply(in_path, opts), peak);
      const bool any_lossless = is_lossless(p[0]) || is_lossless(p[1]) || is_lossless(p[2]);
      out << "psnr_y=" << format_psnr(p[0]) << "\npsnr_u=" << format_psnr(p[1])
          << "\npsnr_v=" << format_psnr(p[2]) << "\npsnr_yuv_611="
          << (any_lossless && p[0] == p[1] && p[1] == p[2]
                  ? std::string("inf")
                  : any_lossless ? std::string("n/a")
                                 : format_psnr(joint_weighting(p[0], p[1], p[2])))
          << "\n";
      return 0;
    }
    if (bdrate->parsed()) {
      const double r = bd_rate(read_rd_csv(ref_path), read_rd_csv(in_path));
      out << std::fixed << std::setprecision(6) << "bd_rate_percent=" << r << "\n";
      return 0;
    }
    if (selfcheck->parsed()) {
      bool ok = true;
      for (const auto& c : diagnostics::run_all(shared.seed, instances)) {
        ok = ok && c.passed;
        out << c.name << "=" << (c.passed ? "pass" : "FAIL") << " worst=" << std::scientific
            << std::setprecision(3) << c.worst << " limit=" << c.limit << " instances="
            << std::defaultfloat << c.instances << "\n";
      }
      return ok ? 0 : static_cast<int>(ErrorKind::kNumeric);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kNumeric);
  }
  return static_cast<int>(ErrorKind::kConfig);
}

}  // namespace gftl::cli

#endif  // GFTLATENT_CLI_HPP
