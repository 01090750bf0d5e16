// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "bd_oracle.hpp"
#include "gftlatent/latent.hpp"
#include "gftlatent/metrics.hpp"

namespace gftl {
namespace {

std::vector<RDPoint> to_points(const std::vector<std::pair<double, double>>& v) {
  std::vector<RDPoint> out;
  for (const auto& [r, q] : v) out.push_back({r, q});
  return out;
}

const std::vector<std::pair<double, double>> kAnchor{{0.10, 30.1}, {0.25, 33.4}, {0.52, 36.2}, {1.05, 39.0}};
const std::vector<std::pair<double, double>> kTest{{0.08, 30.6}, {0.21, 33.9}, {0.47, 36.9}, {0.90, 39.4}};

TEST(Psnr, IdenticalIsLossless) {
  const std::vector<double> a{1, 2, 3};
  const double p = psnr(a, a);
  EXPECT_TRUE(is_lossless(p));
  EXPECT_EQ(format_psnr(p), "inf");
}

TEST(Psnr, UnitMse) {
  const std::vector<double> a{10, 20, 30, 40}, b{11, 19, 31, 39};
  EXPECT_NEAR(psnr(a, b), 48.1308036086791, 1e-12);
  EXPECT_EQ(format_psnr(psnr(a, b)), "48.1308");
}

TEST(Psnr, FullScaleOffsetIsZeroDb) {
  const std::vector<double> a{0, 0, 0}, b{255, 255, 255};
  EXPECT_NEAR(psnr(a, b), 0.0, 1e-12);
  EXPECT_NEAR(psnr(a, std::vector<double>{1, 1, 1}, 1.0), 0.0, 1e-12);
}

TEST(Psnr, Errors) {
  EXPECT_THROW(psnr(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(psnr(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(Psnr, CloudsMatchedByCoordinate) {
  const PointCloud ref({{0, 0, 0}, {1, 0, 0}}, {{10, 0, 0}, {20, 0, 0}}, 2);
  const PointCloud reordered({{1, 0, 0}, {0, 0, 0}}, {{20, 0, 0}, {10, 0, 0}}, 2);
  const auto p = psnr_yuv(ref, reordered);
  for (double v : p) EXPECT_TRUE(is_lossless(v));
  const PointCloud off({{0, 0, 0}, {1, 0, 0}}, {{11, 0, 0}, {19, 0, 0}}, 2);
  EXPECT_NEAR(psnr_yuv(ref, off)[0], 48.1308036086791, 1e-12);
  EXPECT_THROW(psnr_yuv(ref, PointCloud({{0, 0, 0}, {2, 0, 0}}, {{10, 0, 0}, {20, 0, 0}}, 2)), Error);
  EXPECT_THROW(psnr_yuv(ref, PointCloud({{0, 0, 0}}, {{10, 0, 0}}, 2)), Error);
}

TEST(Bpp, DocumentedValues) {
  EXPECT_EQ(bpp(1000, 1000), 1.0);
  EXPECT_EQ(bpp(0, 5), 0.0);
  const std::uint64_t bytes = kGftlHeaderBytes + gftl_record_bytes(32);
  EXPECT_EQ(bpp(bytes * 8, 1), 428.0 * 8.0);
  EXPECT_THROW(bpp(10, 0), Error);
}

TEST(BdRate, IdenticalCurvesAreZero) {
  const RDCurve a(to_points(kAnchor));
  EXPECT_NEAR(bd_rate(a, a), 0.0, 1e-9);
}

TEST(BdRate, HalvedRateIsMinusFifty) {
  auto half = kAnchor;
  for (auto& p : half) p.first /= 2.0;
  EXPECT_NEAR(bd_rate(RDCurve(to_points(kAnchor)), RDCurve(to_points(half))), -50.0, 1e-6);
  auto doubled = kAnchor;
  for (auto& p : doubled) p.first *= 2.0;
  EXPECT_NEAR(bd_rate(RDCurve(to_points(kAnchor)), RDCurve(to_points(doubled))), 100.0, 1e-6);
}

TEST(BdRate, AgreesWithIndependentImplementation) {
  const double ours = bd_rate(RDCurve(to_points(kAnchor)), RDCurve(to_points(kTest)));
  const double oracle = testing::bd_rate_oracle(kAnchor, kTest);
  EXPECT_LE(std::abs(ours - oracle), 1e-4 * std::abs(oracle)) << ours << " vs " << oracle;
  EXPECT_LT(ours, 0.0);
  const std::vector<std::pair<double, double>> six_a{{0.05, 28.0}, {0.1, 30.5}, {0.2, 33.0},
                                                     {0.4, 35.2}, {0.8, 37.1}, {1.6, 38.6}};
  const std::vector<std::pair<double, double>> six_t{{0.06, 28.9}, {0.12, 31.0}, {0.24, 33.1},
                                                     {0.48, 35.0}, {0.96, 36.7}, {1.9, 38.0}};
  const double o2 = testing::bd_rate_oracle(six_a, six_t);
  EXPECT_LE(std::abs(bd_rate(RDCurve(to_points(six_a)), RDCurve(to_points(six_t))) - o2),
            1e-4 * std::abs(o2));
}

TEST(BdRate, CurveValidation) {
  EXPECT_THROW(RDCurve(to_points({{0.1, 30}, {0.2, 31}, {0.3, 32}})), Error);
  EXPECT_THROW(RDCurve(to_points({{0.1, 30}, {0.1, 31}, {0.3, 32}, {0.4, 33}})), Error);
  EXPECT_THROW(RDCurve(to_points({{0.0, 30}, {0.1, 31}, {0.3, 32}, {0.4, 33}})), Error);
  EXPECT_THROW(RDCurve(to_points({{0.1, 30}, {0.2, 31}, {0.3, 32}, {0.4, kLosslessPsnr}})), Error);
  const RDCurve low(to_points({{0.1, 20}, {0.2, 21}, {0.3, 22}, {0.4, 23}}));
  const RDCurve high(to_points({{0.1, 30}, {0.2, 31}, {0.3, 32}, {0.4, 33}}));
  EXPECT_THROW(bd_rate(low, high), Error);
}

TEST(RdCsv, RoundTripAndErrors) {
  const RDCurve a(to_points(kAnchor));
  std::stringstream ss;
  write_rd_csv(a, ss);
  EXPECT_EQ(ss.str().substr(0, 9), "bpp,psnr\n");
  const RDCurve b = read_rd_csv(ss);
  ASSERT_EQ(b.points().size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(b.points()[i].bpp, a.points()[i].bpp);
    EXPECT_EQ(b.points()[i].psnr, a.points()[i].psnr);
  }
  auto kind_of = [](const std::string& text) {
    std::istringstream is(text);
    try {
      read_rd_csv(is);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kNumeric;
  };
  EXPECT_EQ(kind_of("rate,psnr\n"), ErrorKind::kParse);
  EXPECT_EQ(kind_of("bpp,psnr\n0.1;30\n"), ErrorKind::kParse);
  EXPECT_EQ(kind_of("bpp,psnr\n0.1,abc\n"), ErrorKind::kParse);
  EXPECT_EQ(kind_of("bpp,psnr\n0.1,30\n0.2,31\n0.3,32\n0.4,inf\n"), ErrorKind::kConfig);
  EXPECT_EQ(kind_of("bpp,psnr\n0.1,30\n"), ErrorKind::kConfig);
}

}  // namespace
}  // namespace gftl
