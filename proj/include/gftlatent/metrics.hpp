// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_METRICS_HPP
#define GFTLATENT_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gftlatent/error.hpp"
#include "gftlatent/point_cloud.hpp"

namespace gftl {

// ============================================================================
// PSNR
// ============================================================================

/// PSNR of a lossless match. Printed as "inf".
inline constexpr double kLosslessPsnr = std::numeric_limits<double>::infinity();

inline bool is_lossless(double psnr_db) noexcept { return std::isinf(psnr_db) && psnr_db > 0; }

inline std::string format_psnr(double psnr_db) {
  if (is_lossless(psnr_db)) return "inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << psnr_db;
  return os.str();
}

/// 10 log10(peak^2 / MSE), or kLosslessPsnr when the signals are identical.
inline double psnr(std::span<const double> reference, std::span<const double> test,
                   double peak = 255.0) {
  if (reference.size() != test.size()) throw config_error("psnr: signal lengths differ");
  if (reference.empty()) throw config_error("psnr: empty signal");
  double sse = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double e = reference[i] - test[i];
    sse += e * e;
  }
  if (sse == 0.0) return kLosslessPsnr;
  const double mse = sse / static_cast<double>(reference.size());
  return 10.0 * std::log10(peak * peak / mse);
}

/// Per-channel PSNR between two attributed clouds with identical geometry.
/// Points are matched by coordinate.
inline std::array<double, 3> psnr_yuv(const PointCloud& reference, const PointCloud& test,
                                      double peak = 255.0) {
  if (!reference.has_attributes() || !test.has_attributes()) {
    throw config_error("psnr needs attributed clouds");
  }
  if (reference.size() != test.size()) {
    throw config_error("psnr: clouds have " + std::to_string(reference.size()) + " and " +
                       std::to_string(test.size()) + " points");
  }
  std::unordered_map<std::uint64_t, std::size_t> slot;
  slot.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) slot.emplace(coord_key(test.coord(i)), i);

  std::array<std::vector<double>, 3> ref, tst;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    auto it = slot.find(coord_key(reference.coord(i)));
    if (it == slot.end()) {
      throw config_error("psnr: coordinate " + to_string(reference.coord(i)) +
                         " missing from test cloud");
    }
    for (int c = 0; c < 3; ++c) {
      ref[c].push_back(reference.attr(i)[c]);
      tst[c].push_back(test.attr(it->second)[c]);
    }
  }
  return {psnr(ref[0], tst[0], peak), psnr(ref[1], tst[1], peak), psnr(ref[2], tst[2], peak)};
}

// ============================================================================
// Rate
// ============================================================================

inline double bpp(std::uint64_t total_bits, std::uint64_t point_count) {
  if (point_count == 0) throw config_error("bpp: zero points");
  return static_cast<double>(total_bits) / static_cast<double>(point_count);
}

// ============================================================================
// Bjontegaard delta rate
// ============================================================================

struct RDPoint {
  double bpp = 0.0;
  double psnr = 0.0;
};

/// Rate-distortion samples sorted by strictly increasing rate.
class RDCurve {
 public:
  static constexpr std::size_t kMinPoints = 4;

  explicit RDCurve(std::vector<RDPoint> points) : points_(std::move(points)) {
    std::sort(points_.begin(), points_.end(),
              [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
    if (points_.size() < kMinPoints) {
      throw config_error("RD curve needs at least 4 points, got " + std::to_string(points_.size()));
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!(points_[i].bpp > 0.0) || !std::isfinite(points_[i].bpp)) {
        throw config_error("RD curve rate must be positive and finite");
      }
      if (is_lossless(points_[i].psnr)) {
        throw config_error("RD curve contains a lossless (inf dB) point; it cannot be fitted");
      }
      if (!std::isfinite(points_[i].psnr)) throw config_error("RD curve PSNR must be finite");
      if (i > 0 && points_[i].bpp <= points_[i - 1].bpp) {
        throw config_error("RD curve rates must be strictly increasing");
      }
    }
  }

  const std::vector<RDPoint>& points() const noexcept { return points_; }

 private:
  std::vector<RDPoint> points_;
};

namespace detail {

// Least-squares cubic log10(rate) = c0 + c1 p + c2 p^2 + c3 p^3.
inline Eigen::Vector4d fit_log_rate_cubic(const RDCurve& curve) {
  const auto& pts = curve.points();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(pts.size()), 4);
  Eigen::VectorXd b(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    double pw = 1.0;
    for (int k = 0; k < 4; ++k, pw *= pts[i].psnr) a(r, k) = pw;
    b[r] = std::log10(pts[i].bpp);
  }
  return a.colPivHouseholderQr().solve(b);
}

inline double integrate_cubic(const Eigen::Vector4d& c, double lo, double hi) {
  auto antiderivative = [&](double x) {
    return c[0] * x + c[1] * x * x / 2.0 + c[2] * x * x * x / 3.0 + c[3] * x * x * x * x / 4.0;
  };
  return antiderivative(hi) - antiderivative(lo);
}

}  // namespace detail

/// Average rate difference (percent) of `test` against `anchor` over their
/// common PSNR interval. Negative values mean the test curve needs less rate.
inline double bd_rate(const RDCurve& anchor, const RDCurve& test) {
  auto range = [](const RDCurve& c) {
    double lo = c.points().front().psnr, hi = lo;
    for (const auto& p : c.points()) {
      lo = std::min(lo, p.psnr);
      hi = std::max(hi, p.psnr);
    }
    return std::pair{lo, hi};
  };
  const auto [alo, ahi] = range(anchor);
  const auto [tlo, thi] = range(test);
  const double lo = std::max(alo, tlo);
  const double hi = std::min(ahi, thi);
  if (!(hi > lo)) throw config_error("bd_rate: the curves share no PSNR interval");

  // PSNR is centred before fitting to keep the Vandermonde system well scaled.
  const double centre = (lo + hi) / 2.0;
  auto shifted = [&](const RDCurve& c) {
    std::vector<RDPoint> pts = c.points();
    for (auto& p : pts) p.psnr -= centre;
    return RDCurve(std::move(pts));
  };
  const Eigen::Vector4d ca = detail::fit_log_rate_cubic(shifted(anchor));
  const Eigen::Vector4d ct = detail::fit_log_rate_cubic(shifted(test));
  const double avg = (detail::integrate_cubic(ct, lo - centre, hi - centre) -
                      detail::integrate_cubic(ca, lo - centre, hi - centre)) /
                     (hi - lo);
  return (std::pow(10.0, avg) - 1.0) * 100.0;
}

// ----------------------------------------------------------------------------
// RD curve CSV: header "bpp,psnr", one point per line.
// ----------------------------------------------------------------------------

inline RDCurve read_rd_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw parse_error("RD CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "bpp,psnr") throw parse_error("RD CSV header must be 'bpp,psnr', got '" + line + "'");
  std::vector<RDPoint> pts;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw parse_error("RD CSV line " + std::to_string(line_no) + " has no comma");
    try {
      std::size_t used = 0;
      RDPoint p;
      const std::string rate = line.substr(0, comma);
      const std::string quality = line.substr(comma + 1);
      p.bpp = std::stod(rate, &used);
      if (used != rate.size()) throw std::invalid_argument("rate");
      if (quality == "inf") {
        p.psnr = kLosslessPsnr;
      } else {
        p.psnr = std::stod(quality, &used);
        if (used != quality.size()) throw std::invalid_argument("psnr");
      }
      pts.push_back(p);
    } catch (const std::logic_error&) {
      throw parse_error("RD CSV line " + std::to_string(line_no) + " is not numeric: " + line);
    }
  }
  return RDCurve(std::move(pts));
}

inline RDCurve read_rd_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open '" + path.string() + "' for reading");
  return read_rd_csv(is);
}

inline void write_rd_csv(const RDCurve& curve, std::ostream& os) {
  os << "bpp,psnr\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : curve.points()) os << p.bpp << ',' << p.psnr << '\n';
}

}  // namespace gftl

#endif  // GFTLATENT_METRICS_HPP
