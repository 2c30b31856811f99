#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "specmix/errors.hpp"
#include "specmix/rng.hpp"

namespace specmix {

struct SubsetPlan {
  int p = 0;
  int m = 0;
  int d = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> subsets;  // m sorted lists of d distinct indices
  bool full_coverage = true;              // every variable in at least one subset
};

// M random variable subsets of size d, without replacement within a subset.
inline SubsetPlan sample_subsets(int p, int m, int d, std::uint64_t seed) {
  require(p >= 2, "subsets: p must be >= 2");
  require(m >= 1, "subsets: M must be >= 1");
  require(d >= 1 && d < p, "subsets: need 1 <= d < p");
  SubsetPlan plan{p, m, d, seed, {}, true};
  Rng rng(seed);
  std::vector<int> pool(static_cast<std::size_t>(p));
  std::vector<char> covered(static_cast<std::size_t>(p), 0);
  plan.subsets.reserve(static_cast<std::size_t>(m));
  for (int s = 0; s < m; ++s) {
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<int> subset(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      const std::size_t j = i + rng.index(static_cast<std::size_t>(p - i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      subset[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(i)];
      covered[static_cast<std::size_t>(subset[static_cast<std::size_t>(i)])] = 1;
    }
    std::sort(subset.begin(), subset.end());
    plan.subsets.push_back(std::move(subset));
  }
  plan.full_coverage =
      std::all_of(covered.begin(), covered.end(), [](char c) { return c != 0; });
  return plan;
}

}  // namespace specmix
