#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "specmix/constraints.hpp"
#include "specmix/density.hpp"
#include "specmix/errors.hpp"
#include "specmix/init.hpp"
#include "specmix/kmeans.hpp"
#include "specmix/likelihood.hpp"
#include "specmix/model.hpp"

namespace specmix {

struct FitOptions {
  int max_iterations = 1000;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  double psi_floor = kDefaultPsiFloor;

  void validate() const {
    require(max_iterations >= 1, "fit options: max_iterations must be >= 1");
    require(rel_tol > 0.0, "fit options: rel_tol must be positive");
    require(psi_floor >= 1e-12, "fit options: psi floor must be >= 1e-12");
  }
};

struct FitResult {
  MixtureModel model;
  Eigen::MatrixXd posteriors;        // N x G; block members share rows bit-exactly
  std::vector<double> loglik_trace;  // initial value, then one per iteration
  bool converged = false;
  int iterations = 0;
};

namespace detail {

inline Eigen::RowVectorXd softmax_row(const Eigen::RowVectorXd& logw) {
  Eigen::RowVectorXd row = (logw.array() - log_sum_exp(logw)).exp();
  row /= row.sum();
  return row;
}

// Full posterior matrix from cached log masses: softmax rows for
// unconstrained pixels, one shared row per positive block.
inline Eigen::MatrixXd posteriors_from_masses(const BlockMasses& masses,
                                              const ConstraintSet& cons) {
  Eigen::MatrixXd z(masses.pixel.rows(), masses.pixel.cols());
  for (Eigen::Index n = 0; n < masses.pixel.rows(); ++n)
    if (!masses.in_block[static_cast<std::size_t>(n)])
      z.row(n) = softmax_row(masses.pixel.row(n));
  for (std::size_t b = 0; b < cons.n_blocks(); ++b) {
    const Eigen::RowVectorXd row =
        softmax_row(block_unit_log_weights(masses, cons, b));
    for (std::int64_t idx : cons.blocks[b].indices) z.row(idx) = row;
  }
  return z;
}

}  // namespace detail

// Posterior rows treating every pixel as unconstrained (Bayes rule over the
// weighted component densities, evaluated in log space).
inline Eigen::MatrixXd estep_unconstrained(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                           const MixtureModel& model) {
  const Eigen::MatrixXd logp = weighted_log_density_matrix(X, model);
  Eigen::MatrixXd z(logp.rows(), logp.cols());
  for (Eigen::Index n = 0; n < logp.rows(); ++n)
    z.row(n) = detail::softmax_row(logp.row(n));
  return z;
}

// One shared posterior row per positive block, honouring negative relations.
inline Eigen::MatrixXd estep_blocks(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                    const MixtureModel& model,
                                    const ConstraintSet& cons) {
  const BlockMasses masses = block_log_masses(X, model, cons);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(cons.n_blocks()), model.g());
  for (std::size_t b = 0; b < cons.n_blocks(); ++b)
    z.row(static_cast<Eigen::Index>(b)) =
        detail::softmax_row(block_unit_log_weights(masses, cons, b));
  return z;
}

struct Cycle1Update {
  Eigen::VectorXd tau;  // G
  Eigen::MatrixXd mu;   // G x p
};

// First conditional maximization: mixing weights and means from the current
// posteriors, every pixel contributing its (possibly shared) row.
inline Cycle1Update cm_cycle1(const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const Eigen::Ref<const Eigen::MatrixXd>& posteriors) {
  require(posteriors.rows() == X.rows(), "cycle 1: dimension mismatch");
  const Eigen::Index G = posteriors.cols();
  const double n = static_cast<double>(X.rows());
  Cycle1Update up;
  up.tau.resize(G);
  up.mu.resize(G, X.cols());
  const Eigen::VectorXd ng = posteriors.colwise().sum();
  const double collapse = 10.0 * std::numeric_limits<double>::epsilon() * n;
  for (Eigen::Index g = 0; g < G; ++g) {
    if (ng[g] < collapse)
      throw ComponentCollapseError("component " + std::to_string(g + 1) +
                                   " collapsed (effective count " +
                                   std::to_string(ng[g]) + ")");
    up.tau[g] = ng[g] / n;
    up.mu.row(g) = (posteriors.col(g).transpose() * X) / ng[g];
  }
  return up;
}

struct FactorStats {
  Eigen::MatrixXd beta;  // q x p
  Eigen::MatrixXd s;     // p x p weighted scatter
  Eigen::MatrixXd phi;   // q x q
  double n_g = 0.0;
};

// Second-cycle E-step: latent factor moments via Gaussian conditioning.
// beta = lambda' sigma^-1 reduces to (I + lambda' psi^-1 lambda)^-1 lambda' psi^-1.
inline std::vector<FactorStats> estep_factors(
    const Eigen::Ref<const Eigen::MatrixXd>& X, const MixtureModel& model,
    const Eigen::Ref<const Eigen::MatrixXd>& posteriors) {
  require(posteriors.rows() == X.rows() && posteriors.cols() == model.g(),
          "factor E-step: dimension mismatch");
  std::vector<FactorStats> stats(static_cast<std::size_t>(model.g()));
  const int q = model.q();
  for (int g = 0; g < model.g(); ++g) {
    const FactorComponent& comp = model.components[static_cast<std::size_t>(g)];
    FactorStats& st = stats[static_cast<std::size_t>(g)];
    st.n_g = posteriors.col(g).sum();
    internal_check(st.n_g > 0.0, "factor E-step: empty component");

    const Eigen::MatrixXd u = comp.psi.array().inverse().matrix().asDiagonal() *
                              comp.lambda;  // p x q
    Eigen::MatrixXd core = Eigen::MatrixXd::Identity(q, q);
    core.noalias() += comp.lambda.transpose() * u;
    Eigen::LLT<Eigen::MatrixXd> llt(core);
    internal_check(llt.info() == Eigen::Success,
                   "factor E-step: Woodbury core not SPD");
    st.beta = llt.solve(u.transpose());  // q x p

    const Eigen::MatrixXd xc = X.rowwise() - comp.mu.transpose();
    st.s.noalias() = xc.transpose() *
                     posteriors.col(g).asDiagonal() * xc;
    st.s /= st.n_g;

    st.phi = Eigen::MatrixXd::Identity(q, q);
    st.phi.noalias() -= st.beta * comp.lambda;
    st.phi.noalias() += st.beta * st.s * st.beta.transpose();
  }
  return stats;
}

struct Cycle2Update {
  Eigen::MatrixXd lambda;  // p x q
  Eigen::VectorXd psi;     // p
};

// Second conditional maximization: loadings and floored specific variances.
inline std::vector<Cycle2Update> cm_cycle2(const std::vector<FactorStats>& stats,
                                           double psi_floor = kDefaultPsiFloor) {
  std::vector<Cycle2Update> out(stats.size());
  for (std::size_t g = 0; g < stats.size(); ++g) {
    const FactorStats& st = stats[g];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(st.phi);
    if (!lu.isInvertible())
      throw SingularMatrixError("cycle 2: phi singular for component " +
                                std::to_string(g + 1));
    out[g].lambda = st.s * st.beta.transpose() * lu.inverse();
    out[g].psi = (st.s.diagonal() -
                  (out[g].lambda * st.beta * st.s).diagonal())
                     .cwiseMax(psi_floor);
  }
  return out;
}

// Constrained fit by the two-cycle alternating ECM:
//   E-step -> (tau, mu) update -> E-step with the new tau, mu ->
//   factor moments -> (lambda, psi) update,
// converging on the relative change of the constrained log-likelihood.
inline FitResult fit_constrained_pgmm(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      const ConstraintSet& cons, int G, int q,
                                      const FitOptions& opts) {
  opts.validate();
  cons.validate(X.rows());
  require(G >= 1, "fit: G must be >= 1");
  require(q >= 1 && q < X.cols(), "fit: need 1 <= q < p");
  require(static_cast<Eigen::Index>(G) <= X.rows(), "fit: G exceeds pixel count");
  if (cons.has_negative())
    require(G >= 2, "fit: negative constraints require G >= 2");

  const KmeansResult km = kmeans(X, G, opts.seed);
  MixtureModel model = init_params(X, km.labels, G, q, opts.psi_floor);

  FitResult result;
  BlockMasses masses = block_log_masses(X, model, cons);
  double ll = constrained_log_likelihood_from_masses(masses, cons);
  result.loglik_trace.push_back(ll);

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // cycle 1
    Eigen::MatrixXd z = detail::posteriors_from_masses(masses, cons);
    const Cycle1Update c1 = cm_cycle1(X, z);
    for (int g = 0; g < G; ++g) {
      model.components[static_cast<std::size_t>(g)].tau = c1.tau[g];
      model.components[static_cast<std::size_t>(g)].mu = c1.mu.row(g).transpose();
    }
    // cycle 2, E-step refreshed with the new tau and mu
    masses = BlockMasses::from_pixel(weighted_log_density_matrix(X, model), cons);
    z = detail::posteriors_from_masses(masses, cons);
    const std::vector<FactorStats> stats = estep_factors(X, model, z);
    const std::vector<Cycle2Update> c2 = cm_cycle2(stats, opts.psi_floor);
    for (int g = 0; g < G; ++g) {
      model.components[static_cast<std::size_t>(g)].lambda = c2[static_cast<std::size_t>(g)].lambda;
      model.components[static_cast<std::size_t>(g)].psi = c2[static_cast<std::size_t>(g)].psi;
    }

    masses = BlockMasses::from_pixel(weighted_log_density_matrix(X, model), cons);
    const double ll_next = constrained_log_likelihood_from_masses(masses, cons);
    result.loglik_trace.push_back(ll_next);
    result.iterations = iter + 1;
    const double denom = std::abs(ll) > 0.0 ? std::abs(ll) : 1.0;
    const bool done = std::abs(ll_next - ll) / denom < opts.rel_tol;
    ll = ll_next;
    if (done) {
      result.converged = true;
      break;
    }
  }

  result.model = std::move(model);
  result.posteriors = detail::posteriors_from_masses(masses, cons);
  return result;
}

}  // namespace specmix
