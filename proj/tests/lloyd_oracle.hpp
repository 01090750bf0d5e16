// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#ifndef GFTLATENT_TESTS_LLOYD_ORACLE_HPP
#define GFTLATENT_TESTS_LLOYD_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace gftl::testing {

/// One contiguous grouping of sorted samples with its mean-squared error.
struct Partition {
  std::vector<std::size_t> cuts;  // group g = [cuts[g], cuts[g + 1])
  std::vector<double> means;
  double mse = 0.0;
};

/// Every split of `sorted` into 1..k non-empty contiguous groups.
inline std::vector<Partition> all_partitions(const std::vector<double>& sorted, int k) {
  std::vector<Partition> out;
  const std::size_t n = sorted.size();
  std::vector<std::size_t> cuts{0};
  std::function<void(int)> rec = [&](int left) {
    if (cuts.back() == n) {
      Partition p;
      p.cuts = cuts;
      double sse = 0.0;
      for (std::size_t g = 0; g + 1 < cuts.size(); ++g) {
        double s = 0.0;
        for (std::size_t i = cuts[g]; i < cuts[g + 1]; ++i) s += sorted[i];
        const double m = s / double(cuts[g + 1] - cuts[g]);
        p.means.push_back(m);
        for (std::size_t i = cuts[g]; i < cuts[g + 1]; ++i) sse += (sorted[i] - m) * (sorted[i] - m);
      }
      p.mse = sse / double(n);
      out.push_back(std::move(p));
      return;
    }
    if (left == 0) return;
    for (std::size_t next = cuts.back() + 1; next <= n; ++next) {
      cuts.push_back(next);
      rec(left - 1);
      cuts.pop_back();
    }
  };
  rec(k);
  return out;
}

inline double optimal_mse(const std::vector<double>& sorted, int k) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : all_partitions(sorted, k)) best = std::min(best, p.mse);
  return best;
}

/// MSE of assigning each sample to its nearest centroid (ties low),
/// computed by direct search.
inline double assignment_mse(const std::vector<double>& samples, const std::vector<double>& centroids) {
  double sse = 0.0;
  for (double s : samples) {
    double best = std::numeric_limits<double>::infinity();
    for (double c : centroids) best = std::min(best, (s - c) * (s - c));
    sse += best;
  }
  return sse / double(samples.size());
}

}  // namespace gftl::testing

#endif  // GFTLATENT_TESTS_LLOYD_ORACLE_HPP
