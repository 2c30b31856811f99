#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "specmix/errors.hpp"
#include "specmix/rng.hpp"

namespace specmix {

struct KmeansResult {
  std::vector<int> labels;  // 1..k
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. Deterministic given the seed:
// ties in assignment go to the smaller centroid index, empty clusters are
// re-seeded at the point farthest from its own centroid.
inline KmeansResult kmeans(const Eigen::Ref<const Eigen::MatrixXd>& X, int k,
                           std::uint64_t seed, int max_iterations = 100,
                           double move_tol = 1e-8) {
  const Eigen::Index n = X.rows();
  require(k >= 1, "kmeans: k must be >= 1");
  require(static_cast<Eigen::Index>(k) <= n, "kmeans: k exceeds point count");

  Rng rng(seed);
  Eigen::MatrixXd centroids(k, X.cols());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);

  // k-means++: first centre uniform, the rest D^2-weighted.
  Eigen::VectorXd min_sq =
      Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  {
    const Eigen::Index first = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    centroids.row(0) = X.row(first);
    chosen[static_cast<std::size_t>(first)] = 1;
  }
  for (int c = 1; c < k; ++c) {
    min_sq = min_sq.cwiseMin(
        (X.rowwise() - centroids.row(c - 1)).rowwise().squaredNorm());
    const double total = min_sq.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += min_sq[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;
    } else {
      // all remaining points coincide with a centre; take the first unused
      for (Eigen::Index i = 0; i < n; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      if (pick < 0) pick = 0;
    }
    centroids.row(c) = X.row(pick);
    chosen[static_cast<std::size_t>(pick)] = 1;
  }

  KmeansResult result;
  result.labels.assign(static_cast<std::size_t>(n), 1);
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);

  for (int iter = 0; iter < max_iterations; ++iter) {
    result.iterations = iter + 1;
    // assign
    Eigen::MatrixXd dist(n, k);
    for (int c = 0; c < k; ++c)
      dist.col(c) = (X.rowwise() - centroids.row(c)).rowwise().squaredNorm();
    std::fill(counts.begin(), counts.end(), 0);
    result.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (dist(i, c) < dist(i, best)) best = c;
      result.labels[static_cast<std::size_t>(i)] = best + 1;
      counts[static_cast<std::size_t>(best)]++;
      result.inertia += dist(i, best);
    }
    // repair empty clusters: move them onto the farthest point
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int l = result.labels[static_cast<std::size_t>(i)] - 1;
        if (counts[static_cast<std::size_t>(l)] <= 1) continue;
        if (dist(i, l) > far_d) {
          far_d = dist(i, l);
          far = i;
        }
      }
      const int old = result.labels[static_cast<std::size_t>(far)] - 1;
      counts[static_cast<std::size_t>(old)]--;
      counts[static_cast<std::size_t>(c)]++;
      result.labels[static_cast<std::size_t>(far)] = c + 1;
      centroids.row(c) = X.row(far);
    }
    // update
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, X.cols());
    for (Eigen::Index i = 0; i < n; ++i)
      next.row(result.labels[static_cast<std::size_t>(i)] - 1) += X.row(i);
    double max_move = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0)
        next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
      else
        next.row(c) = centroids.row(c);
      max_move = std::max(max_move, (next.row(c) - centroids.row(c)).norm());
    }
    centroids = next;
    if (max_move < move_tol) break;
  }

  result.centroids = centroids;
  return result;
}

}  // namespace specmix
