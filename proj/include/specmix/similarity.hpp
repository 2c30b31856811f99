#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "specmix/errors.hpp"

namespace specmix {

// Symmetric N x N matrix stored as the upper triangle including the diagonal.
struct CondensedMatrix {
  std::int64_t n = 0;
  std::vector<double> values;

  explicit CondensedMatrix(std::int64_t n_ = 0)
      : n(n_), values(static_cast<std::size_t>(n_) * (n_ + 1) / 2, 0.0) {}

  std::size_t index(std::int64_t i, std::int64_t j) const {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i) * (2 * n - i - 1) / 2 +
           static_cast<std::size_t>(j);
  }
  double operator()(std::int64_t i, std::int64_t j) const {
    return values[index(i, j)];
  }
  double& at(std::int64_t i, std::int64_t j) { return values[index(i, j)]; }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd out(n, n);
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = i; j < n; ++j) out(i, j) = out(j, i) = (*this)(i, j);
    return out;
  }
};

// Running sum of per-subset similarity matrices S^m with
// S^m_ij = z_i . z_j for i != j and 1 on the diagonal. Only the running
// accumulator is ever held, never the individual matrices. Optional
// single-precision storage halves the memory at large N.
class SimilarityAccumulator {
 public:
  explicit SimilarityAccumulator(std::int64_t n, bool single_precision = false)
      : n_(n), single_(single_precision) {
    require(n >= 1, "similarity: need at least one pixel");
    const std::size_t len = static_cast<std::size_t>(n) * (n + 1) / 2;
    if (single_)
      sum32_.assign(len, 0.0f);
    else
      sum64_.assign(len, 0.0);
  }

  std::int64_t n() const { return n_; }
  int count() const { return count_; }

  void add(const Eigen::Ref<const Eigen::MatrixXd>& posteriors) {
    require(posteriors.rows() == n_, "similarity: posterior row count mismatch");
    // row blocks keep the dense product buffer small
    constexpr Eigen::Index kBlock = 256;
    for (Eigen::Index i0 = 0; i0 < n_; i0 += kBlock) {
      const Eigen::Index len = std::min<Eigen::Index>(kBlock, n_ - i0);
      const Eigen::MatrixXd prod =
          posteriors.middleRows(i0, len) * posteriors.transpose();
      for (Eigen::Index r = 0; r < len; ++r) {
        const std::int64_t i = i0 + r;
        const std::size_t base = row_base(i);
        if (single_) {
          for (std::int64_t j = i + 1; j < n_; ++j)
            sum32_[base + static_cast<std::size_t>(j)] +=
                static_cast<float>(prod(r, j));
        } else {
          for (std::int64_t j = i + 1; j < n_; ++j)
            sum64_[base + static_cast<std::size_t>(j)] += prod(r, j);
        }
      }
    }
    ++count_;
  }

  // Averaged similarity; diagonal exactly 1.
  CondensedMatrix average() const {
    require(count_ > 0, "similarity: nothing accumulated");
    CondensedMatrix out(n_);
    fill_average(out);
    return out;
  }

  // D = 1 - S. Diagonal exactly 0.
  CondensedMatrix dissimilarity() const {
    CondensedMatrix out = average();
    for (double& v : out.values) v = 1.0 - v;
    return out;
  }

 private:
  std::size_t row_base(std::int64_t i) const {
    return static_cast<std::size_t>(i) * (2 * n_ - i - 1) / 2;
  }

  void fill_average(CondensedMatrix& out) const {
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::int64_t i = 0; i < n_; ++i) {
      const std::size_t base = row_base(i);
      out.values[base + static_cast<std::size_t>(i)] = 1.0;
      for (std::int64_t j = i + 1; j < n_; ++j) {
        const std::size_t k = base + static_cast<std::size_t>(j);
        out.values[k] = (single_ ? static_cast<double>(sum32_[k]) : sum64_[k]) * inv;
      }
    }
  }

  std::int64_t n_;
  bool single_;
  int count_ = 0;
  std::vector<double> sum64_;
  std::vector<float> sum32_;
};

}  // namespace specmix
