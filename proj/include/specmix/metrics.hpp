#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "specmix/errors.hpp"

namespace specmix {

namespace detail {

inline std::vector<int> compact_labels(const std::vector<int>& labels, int& k) {
  std::map<int, int> remap;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = remap.emplace(labels[i], static_cast<int>(remap.size()));
    (void)fresh;
    out[i] = it->second;
  }
  k = static_cast<int>(remap.size());
  return out;
}

inline long long comb2(long long n) { return n * (n - 1) / 2; }

}  // namespace detail

// Contingency table between two labelings (rows: a, cols: b), with labels
// compacted to dense indices in first-appearance order.
inline Eigen::MatrixXi contingency_table(const std::vector<int>& a,
                                         const std::vector<int>& b) {
  require(a.size() == b.size(), "contingency: length mismatch");
  int ka = 0, kb = 0;
  const std::vector<int> ca = detail::compact_labels(a, ka);
  const std::vector<int> cb = detail::compact_labels(b, kb);
  Eigen::MatrixXi table = Eigen::MatrixXi::Zero(ka, kb);
  for (std::size_t i = 0; i < ca.size(); ++i) table(ca[i], cb[i])++;
  return table;
}

// Hubert-Arabie adjusted Rand index from the contingency table. When the
// correction denominator vanishes the value is 1 for partitions that agree
// up to relabelling and 0 otherwise.
inline double adjusted_rand_index(const std::vector<int>& a,
                                  const std::vector<int>& b) {
  require(a.size() == b.size(), "ari: length mismatch");
  require(a.size() >= 2, "ari: need at least two points");
  const Eigen::MatrixXi table = contingency_table(a, b);
  const long long n = static_cast<long long>(a.size());

  long long sum_cells = 0;
  for (Eigen::Index i = 0; i < table.rows(); ++i)
    for (Eigen::Index j = 0; j < table.cols(); ++j)
      sum_cells += detail::comb2(table(i, j));
  long long sum_rows = 0, sum_cols = 0;
  for (Eigen::Index i = 0; i < table.rows(); ++i)
    sum_rows += detail::comb2(table.row(i).sum());
  for (Eigen::Index j = 0; j < table.cols(); ++j)
    sum_cols += detail::comb2(table.col(j).sum());

  const long double expected = static_cast<long double>(sum_rows) *
                               static_cast<long double>(sum_cols) /
                               static_cast<long double>(detail::comb2(n));
  const long double maximum = 0.5L * (sum_rows + sum_cols);
  const long double denom = maximum - expected;
  if (denom == 0.0L) {
    // identical up to relabelling iff no row or column splits its mass
    bool agree = true;
    for (Eigen::Index i = 0; i < table.rows() && agree; ++i)
      agree = (table.row(i).array() > 0).count() <= 1;
    for (Eigen::Index j = 0; j < table.cols() && agree; ++j)
      agree = (table.col(j).array() > 0).count() <= 1;
    return agree ? 1.0 : 0.0;
  }
  return static_cast<double>((sum_cells - expected) / denom);
}

// Cumulative percentage of variance carried by the leading principal
// components of the sample covariance (or correlation) matrix.
inline std::vector<double> pca_variance_explained(
    const Eigen::Ref<const Eigen::MatrixXd>& X, int q_max,
    bool use_correlation = false) {
  const Eigen::Index n = X.rows();
  const int p = static_cast<int>(X.cols());
  require(n > 1, "pca: need more than one row");
  require(q_max >= 1 && q_max < p, "pca: need 1 <= q_max < p");

  const Eigen::RowVectorXd mean = X.colwise().mean();
  Eigen::MatrixXd xc = X.rowwise() - mean;
  Eigen::MatrixXd cov = (xc.transpose() * xc) / static_cast<double>(n - 1);
  const double total_raw = cov.trace();
  require(total_raw > 0.0, "pca: degenerate covariance (constant data)");
  if (use_correlation) {
    Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    require(sd.minCoeff() > 0.0, "pca: zero-variance column");
    cov = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  internal_check(es.info() == Eigen::Success, "pca: eigensolver failed");
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);  // ascending
  const double total = ev.sum();
  std::vector<double> out(static_cast<std::size_t>(q_max));
  double acc = 0.0;
  for (int k = 0; k < q_max; ++k) {
    acc += ev[p - 1 - k];
    out[static_cast<std::size_t>(k)] = 100.0 * acc / total;
  }
  return out;
}

}  // namespace specmix
