#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <vector>

#include "specmix/consensus.hpp"
#include "specmix/density.hpp"
#include "specmix/errors.hpp"
#include "specmix/image.hpp"

namespace specmix {

struct AlignResult {
  std::vector<int> perm;  // component index (0-based) -> reference label (1..G)
  bool all_classes_observed = true;
  bool used_all_pixels = false;  // no constrained pixels; fell back to all rows
};

namespace detail {

// Exact maximum-agreement assignment over all permutations by subset DP,
// reconstructed as the lexicographically smallest optimal permutation.
inline std::vector<int> best_assignment(const Eigen::MatrixXi& agreement) {
  const int g = static_cast<int>(agreement.rows());
  internal_check(g == agreement.cols(), "assignment: matrix must be square");
  internal_check(g <= 20, "assignment: dimension too large");
  const std::size_t full = std::size_t{1} << g;
  // suffix[s] = best total assigning components popcount(s)..g-1 to targets
  // outside s
  std::vector<long long> suffix(full, -1);
  suffix[full - 1] = 0;
  for (std::size_t s = full - 1; s-- > 0;) {
    const int row = __builtin_popcountll(s);
    long long best = -1;
    for (int t = 0; t < g; ++t) {
      if (s & (std::size_t{1} << t)) continue;
      const std::size_t ns = s | (std::size_t{1} << t);
      if (suffix[ns] < 0) continue;
      best = std::max(best, agreement(row, t) + suffix[ns]);
    }
    suffix[s] = best;
  }
  std::vector<int> perm(static_cast<std::size_t>(g), 0);
  std::size_t s = 0;
  for (int row = 0; row < g; ++row) {
    for (int t = 0; t < g; ++t) {  // smallest feasible target first
      if (s & (std::size_t{1} << t)) continue;
      const std::size_t ns = s | (std::size_t{1} << t);
      if (suffix[ns] >= 0 && agreement(row, t) + suffix[ns] == suffix[s]) {
        perm[static_cast<std::size_t>(row)] = t + 1;
        s = ns;
        break;
      }
    }
  }
  return perm;
}

inline int map_row(const Eigen::RowVectorXd& row) {
  Eigen::Index arg = 0;
  row.maxCoeff(&arg);
  // ties toward the smaller index
  for (Eigen::Index g = 0; g < arg; ++g)
    if (row[g] == row[arg]) return static_cast<int>(g);
  return static_cast<int>(arg);
}

}  // namespace detail

// Permutation of one subset fit's components that maximizes agreement with
// the reference labels over the constrained training pixels.
inline AlignResult align_labels(const SubsetFit& fit,
                                const std::vector<int>& reference_labels,
                                const ConstraintSet& cons) {
  const int g = static_cast<int>(fit.posteriors.cols());
  require(g >= 1, "align: subset fit carries no posteriors");
  require(fit.posteriors.rows() ==
              static_cast<Eigen::Index>(reference_labels.size()),
          "align: reference label count mismatch");
  AlignResult result;
  std::vector<std::int64_t> rows;
  if (!cons.empty()) {
    for (const auto& b : cons.blocks)
      rows.insert(rows.end(), b.indices.begin(), b.indices.end());
  } else {
    result.used_all_pixels = true;
    rows.resize(reference_labels.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      rows[i] = static_cast<std::int64_t>(i);
  }
  Eigen::MatrixXi agreement = Eigen::MatrixXi::Zero(g, g);
  std::vector<char> seen(static_cast<std::size_t>(g), 0);
  for (std::int64_t r : rows) {
    const int ref = reference_labels[static_cast<std::size_t>(r)];
    require(ref >= 1 && ref <= g, "align: reference label out of range");
    seen[static_cast<std::size_t>(ref - 1)] = 1;
    const int comp = detail::map_row(fit.posteriors.row(r));
    agreement(comp, ref - 1)++;
  }
  result.all_classes_observed =
      std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  result.perm = detail::best_assignment(agreement);
  return result;
}

struct ClassificationResult {
  std::vector<int> labels;          // consensus label per pixel, 1..G
  std::vector<double> uncertainty;  // 1 - mode frequency / M
  Eigen::MatrixXi votes;            // N x M aligned per-subset labels
  bool alignment_used_all_pixels = false;
  bool alignment_complete = true;  // every reference class seen while aligning
};

// Supervised labelling of new pixels with a fitted ensemble: per subset,
// score the subset's variables, take the aligned MAP label, then vote.
// Mode ties go to the smaller label; uncertainty is 1 - #(mode)/M.
inline ClassificationResult classify_pixels(const PixelTable& new_table,
                                            const EnsembleResult& ensemble) {
  require(!ensemble.fits.empty(), "classify: empty ensemble");
  require(new_table.p() == ensemble.p,
          "classify: new table has " + std::to_string(new_table.p()) +
              " variables, ensemble expects " + std::to_string(ensemble.p));
  const Eigen::Index n = new_table.n();
  const int g = ensemble.g;
  const int m = static_cast<int>(ensemble.fits.size());

  Eigen::MatrixXd data = new_table.data;
  if (ensemble.standardized()) {
    require(ensemble.shift.size() == static_cast<std::size_t>(ensemble.p),
            "classify: bad standardization vectors");
    for (int c = 0; c < ensemble.p; ++c)
      data.col(c) = (data.col(c).array() - ensemble.shift[static_cast<std::size_t>(c)]) /
                    ensemble.scale[static_cast<std::size_t>(c)];
  }

  ClassificationResult result;
  result.votes.resize(n, m);
  for (int s = 0; s < m; ++s) {
    const SubsetFit& fit = ensemble.fits[static_cast<std::size_t>(s)];
    const AlignResult align =
        align_labels(fit, ensemble.training_labels, ensemble.constraints);
    result.alignment_used_all_pixels |= align.used_all_pixels;
    result.alignment_complete &= align.all_classes_observed;
    Eigen::MatrixXd sub(n, fit.variables.size());
    for (std::size_t c = 0; c < fit.variables.size(); ++c)
      sub.col(static_cast<Eigen::Index>(c)) = data.col(fit.variables[c]);
    const Eigen::MatrixXd logp = weighted_log_density_matrix(sub, fit.model);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int comp = detail::map_row(logp.row(i));
      result.votes(i, s) = align.perm[static_cast<std::size_t>(comp)];
    }
  }

  result.labels.resize(static_cast<std::size_t>(n));
  result.uncertainty.resize(static_cast<std::size_t>(n));
  std::vector<int> tally(static_cast<std::size_t>(g) + 1, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(tally.begin(), tally.end(), 0);
    for (int s = 0; s < m; ++s) tally[static_cast<std::size_t>(result.votes(i, s))]++;
    int mode = 1;
    for (int l = 2; l <= g; ++l)
      if (tally[static_cast<std::size_t>(l)] > tally[static_cast<std::size_t>(mode)])
        mode = l;
    result.labels[static_cast<std::size_t>(i)] = mode;
    result.uncertainty[static_cast<std::size_t>(i)] =
        1.0 - static_cast<double>(tally[static_cast<std::size_t>(mode)]) /
                  static_cast<double>(m);
  }
  return result;
}

}  // namespace specmix
