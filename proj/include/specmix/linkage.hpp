#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "specmix/errors.hpp"
#include "specmix/similarity.hpp"

namespace specmix {

// Agglomerative complete-linkage clustering cut at exactly `g` clusters.
// Clusters are identified by their smallest member index; merge ties are
// broken toward the lexicographically smallest (i, j) pair. The dissimilarity
// matrix is consumed in place. Per-row nearest-neighbour caches keep the
// usual case near O(N^2); caches only need a rescan when their target merged,
// because complete-linkage distances never shrink.
inline std::vector<int> complete_linkage_cut(CondensedMatrix& d, int g) {
  const std::int64_t n = d.n;
  require(g >= 1, "linkage: G must be >= 1");
  require(static_cast<std::int64_t>(g) <= n, "linkage: G exceeds point count");

  std::vector<char> active(static_cast<std::size_t>(n), 1);
  std::vector<std::vector<std::int64_t>> members(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) members[static_cast<std::size_t>(i)] = {i};

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(static_cast<std::size_t>(n), kInf);
  std::vector<std::int64_t> arg(static_cast<std::size_t>(n), -1);

  auto rescan = [&](std::int64_t i) {
    best[static_cast<std::size_t>(i)] = kInf;
    arg[static_cast<std::size_t>(i)] = -1;
    for (std::int64_t j = i + 1; j < n; ++j) {
      if (!active[static_cast<std::size_t>(j)]) continue;
      const double v = d(i, j);
      if (v < best[static_cast<std::size_t>(i)]) {
        best[static_cast<std::size_t>(i)] = v;
        arg[static_cast<std::size_t>(i)] = j;
      }
    }
  };
  for (std::int64_t i = 0; i < n; ++i) rescan(i);

  std::int64_t clusters = n;
  while (clusters > g) {
    std::int64_t bi = -1;
    double bv = kInf;
    for (std::int64_t i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      if (arg[static_cast<std::size_t>(i)] >= 0 && best[static_cast<std::size_t>(i)] < bv) {
        bv = best[static_cast<std::size_t>(i)];
        bi = i;
      }
    }
    internal_check(bi >= 0, "linkage: no mergeable pair");
    const std::int64_t i = bi;
    const std::int64_t j = arg[static_cast<std::size_t>(i)];

    // complete linkage update against the surviving representative i
    for (std::int64_t k = 0; k < n; ++k) {
      if (!active[static_cast<std::size_t>(k)] || k == i || k == j) continue;
      const double v = std::max(d(i, k), d(j, k));
      d.at(i, k) = v;
    }
    active[static_cast<std::size_t>(j)] = 0;
    auto& mi = members[static_cast<std::size_t>(i)];
    auto& mj = members[static_cast<std::size_t>(j)];
    mi.insert(mi.end(), mj.begin(), mj.end());
    mj.clear();
    --clusters;

    rescan(i);
    for (std::int64_t k = 0; k < i; ++k) {
      if (!active[static_cast<std::size_t>(k)]) continue;
      const std::int64_t a = arg[static_cast<std::size_t>(k)];
      if (a == i || a == j) rescan(k);
    }
    for (std::int64_t k = i + 1; k < j; ++k) {
      if (!active[static_cast<std::size_t>(k)]) continue;
      if (arg[static_cast<std::size_t>(k)] == j) rescan(k);
    }
  }

  // label clusters 1..g in order of their smallest member
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  int next = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (!active[static_cast<std::size_t>(i)]) continue;
    ++next;
    for (std::int64_t m : members[static_cast<std::size_t>(i)])
      labels[static_cast<std::size_t>(m)] = next;
  }
  internal_check(next == g, "linkage: cluster count mismatch");
  return labels;
}

// Convenience overload for dense symmetric dissimilarity matrices.
inline std::vector<int> complete_linkage_cut(const Eigen::MatrixXd& d, int g) {
  require(d.rows() == d.cols(), "linkage: matrix must be square");
  const std::int64_t n = d.rows();
  CondensedMatrix cm(n);
  for (std::int64_t i = 0; i < n; ++i) {
    require(d(i, i) == 0.0, "linkage: diagonal must be zero");
    for (std::int64_t j = i; j < n; ++j) {
      require(d(i, j) == d(j, i), "linkage: matrix must be symmetric");
      require(std::isfinite(d(i, j)) && d(i, j) >= -1e-9 && d(i, j) <= 1.0 + 1e-9,
              "linkage: dissimilarities must lie in [0, 1]");
      cm.at(i, j) = d(i, j);
    }
  }
  return complete_linkage_cut(cm, g);
}

}  // namespace specmix
