#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "specmix/kmeans.hpp"
#include "specmix/rng.hpp"

using namespace specmix;

namespace {

// Best two-cluster split of 1-D data by within-cluster sum of squares,
// scanning all sorted split points.
std::vector<int> best_two_split(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return x[a] < x[b]; });
  double best = std::numeric_limits<double>::infinity();
  int best_cut = 1;
  for (int cut = 1; cut < n; ++cut) {
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < cut; ++i) m1 += x[order[i]];
    for (int i = cut; i < n; ++i) m2 += x[order[i]];
    m1 /= cut;
    m2 /= (n - cut);
    double ss = 0.0;
    for (int i = 0; i < cut; ++i) ss += (x[order[i]] - m1) * (x[order[i]] - m1);
    for (int i = cut; i < n; ++i) ss += (x[order[i]] - m2) * (x[order[i]] - m2);
    if (ss < best) {
      best = ss;
      best_cut = cut;
    }
  }
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) labels[order[i]] = i < best_cut ? 1 : 2;
  return labels;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<int, int> fwd, bwd;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (fwd.count(a[i]) && fwd[a[i]] != b[i]) return false;
    if (bwd.count(b[i]) && bwd[b[i]] != a[i]) return false;
    fwd[a[i]] = b[i];
    bwd[b[i]] = a[i];
  }
  return true;
}

}  // namespace

TEST_CASE("two separated clouds split at the gap") {
  Rng rng(31);
  Eigen::MatrixXd X(40, 1);
  for (int i = 0; i < 20; ++i) X(i, 0) = rng.normal(0.0, 0.3);
  for (int i = 20; i < 40; ++i) X(i, 0) = rng.normal(10.0, 0.3);
  const KmeansResult km = kmeans(X, 2, 77);
  REQUIRE(same_partition(km.labels, best_two_split(X.col(0))));
}

TEST_CASE("k equal to n gives singleton clusters with zero cost") {
  Eigen::MatrixXd X(5, 2);
  X << 0, 0, 1, 0, 2, 0, 3, 0, 4, 0;
  const KmeansResult km = kmeans(X, 5, 3);
  std::vector<int> sorted = km.labels;
  std::sort(sorted.begin(), sorted.end());
  REQUIRE(sorted == std::vector<int>{1, 2, 3, 4, 5});
  REQUIRE(km.inertia == 0.0);
}

TEST_CASE("identical seeds give identical labels") {
  Rng rng(32);
  Eigen::MatrixXd X(60, 3);
  for (int i = 0; i < X.size(); ++i) X(i / 3, i % 3) = rng.normal();
  const KmeansResult a = kmeans(X, 4, 123);
  const KmeansResult b = kmeans(X, 4, 123);
  REQUIRE(a.labels == b.labels);
  REQUIRE(a.centroids == b.centroids);
}

TEST_CASE("k larger than n is rejected") {
  Eigen::MatrixXd X(3, 2);
  X.setZero();
  REQUIRE_THROWS_AS(kmeans(X, 4, 0), ValidationError);
}

TEST_CASE("labels are 1-based and every cluster non-empty for distinct data") {
  Rng rng(33);
  Eigen::MatrixXd X(50, 2);
  for (int i = 0; i < X.size(); ++i) X(i / 2, i % 2) = rng.normal();
  const KmeansResult km = kmeans(X, 6, 5);
  std::vector<int> count(7, 0);
  for (int l : km.labels) {
    REQUIRE(l >= 1);
    REQUIRE(l <= 6);
    count[static_cast<std::size_t>(l)]++;
  }
  for (int g = 1; g <= 6; ++g) REQUIRE(count[static_cast<std::size_t>(g)] > 0);
}
