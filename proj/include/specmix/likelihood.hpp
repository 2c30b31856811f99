#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "specmix/constraints.hpp"
#include "specmix/density.hpp"
#include "specmix/model.hpp"

namespace specmix {

inline double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf
  return m + std::log((v.array() - m).exp().sum());
}

// LSE over all entries except `skip`.
inline double log_sum_exp_excluding(const Eigen::Ref<const Eigen::RowVectorXd>& v,
                                    Eigen::Index skip) {
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (i != skip && v[i] > m) m = v[i];
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (i != skip) s += std::exp(v[i] - m);
  return m + std::log(s);
}

// Per-pixel and per-block weighted log masses under the current model.
// pixel(n, g) = log tau_g + log N(x_n; g); block rows sum their members.
struct BlockMasses {
  Eigen::MatrixXd pixel;  // N x G
  Eigen::MatrixXd block;  // B x G
  std::vector<char> in_block;  // per pixel

  static BlockMasses from_pixel(Eigen::MatrixXd pixel_masses,
                                const ConstraintSet& cons) {
    BlockMasses bm;
    bm.pixel = std::move(pixel_masses);
    bm.in_block.assign(static_cast<std::size_t>(bm.pixel.rows()), 0);
    bm.block.setZero(static_cast<Eigen::Index>(cons.n_blocks()), bm.pixel.cols());
    for (std::size_t b = 0; b < cons.n_blocks(); ++b) {
      for (std::int64_t idx : cons.blocks[b].indices) {
        bm.block.row(static_cast<Eigen::Index>(b)) += bm.pixel.row(idx);
        bm.in_block[static_cast<std::size_t>(idx)] = 1;
      }
    }
    return bm;
  }
};

inline BlockMasses block_log_masses(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                    const MixtureModel& model,
                                    const ConstraintSet& cons) {
  cons.validate(X.rows());
  return BlockMasses::from_pixel(weighted_log_density_matrix(X, model), cons);
}

// Unit log mass of block b: LSE over g of its own mass joined with, for each
// negatively related partner, the partner's mass over the other components.
// The f = g terms are excluded from the partner sums by construction, so
// forbidden same-component configurations carry exactly zero mass.
inline Eigen::RowVectorXd block_unit_log_weights(const BlockMasses& masses,
                                                 const ConstraintSet& cons,
                                                 std::size_t b) {
  const Eigen::Index G = masses.pixel.cols();
  Eigen::RowVectorXd w = masses.block.row(static_cast<Eigen::Index>(b));
  for (int partner : cons.negative_partners(b)) {
    if (G < 2)
      throw InfeasibleConstraintsError(
          "negative constraints require at least two components");
    const Eigen::RowVectorXd pm = masses.block.row(partner);
    for (Eigen::Index g = 0; g < G; ++g) w[g] += log_sum_exp_excluding(pm, g);
  }
  return w;
}

// Observed-data log-likelihood with constrained blocks as units:
// unconstrained pixels contribute the usual mixture mass, every positive
// block contributes the log of its own admissible-configuration mass.
inline double constrained_log_likelihood_from_masses(const BlockMasses& masses,
                                                     const ConstraintSet& cons) {
  double total = 0.0;
  for (Eigen::Index n = 0; n < masses.pixel.rows(); ++n)
    if (!masses.in_block[static_cast<std::size_t>(n)])
      total += log_sum_exp(masses.pixel.row(n));
  for (std::size_t b = 0; b < cons.n_blocks(); ++b)
    total += log_sum_exp(block_unit_log_weights(masses, cons, b));
  return total;
}

inline double constrained_log_likelihood(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                         const MixtureModel& model,
                                         const ConstraintSet& cons) {
  return constrained_log_likelihood_from_masses(block_log_masses(X, model, cons),
                                                cons);
}

// Joint configuration probabilities for one negatively related block pair,
// as enumerated by the E-step factorization. Entries (g, g) are exactly zero.
inline Eigen::MatrixXd negative_pair_joint(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                           const MixtureModel& model,
                                           const ConstraintSet& cons,
                                           std::size_t block_a, std::size_t block_b) {
  const BlockMasses masses = block_log_masses(X, model, cons);
  const Eigen::Index G = masses.pixel.cols();
  if (G < 2)
    throw InfeasibleConstraintsError(
        "negative constraints require at least two components");
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(G, G);
  double max_log = -std::numeric_limits<double>::infinity();
  for (Eigen::Index g = 0; g < G; ++g)
    for (Eigen::Index f = 0; f < G; ++f)
      if (f != g)
        max_log = std::max(max_log, masses.block(static_cast<Eigen::Index>(block_a), g) +
                                        masses.block(static_cast<Eigen::Index>(block_b), f));
  double norm = 0.0;
  for (Eigen::Index g = 0; g < G; ++g)
    for (Eigen::Index f = 0; f < G; ++f)
      if (f != g) {
        joint(g, f) = std::exp(masses.block(static_cast<Eigen::Index>(block_a), g) +
                               masses.block(static_cast<Eigen::Index>(block_b), f) -
                               max_log);
        norm += joint(g, f);
      }
  joint /= norm;
  return joint;
}

}  // namespace specmix
