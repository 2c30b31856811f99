#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <vector>

#include "specmix/errors.hpp"
#include "specmix/model.hpp"

namespace specmix {

// Eigendecomposition-based starting values. Per cluster: tau from the label
// share, mu the cluster mean, lambda the top-q scaled eigenvectors of the
// cluster covariance (negative eigenvalues clamped to zero), psi the floored
// residual diagonal.
inline MixtureModel init_params(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const std::vector<int>& labels, int G, int q,
                                double psi_floor = kDefaultPsiFloor) {
  const Eigen::Index n = X.rows();
  const int p = static_cast<int>(X.cols());
  require(labels.size() == static_cast<std::size_t>(n), "init: label count mismatch");
  require(q >= 1 && q < p, "init: need 1 <= q < p");
  require(psi_floor > 0.0, "init: psi floor must be positive");
  require(G >= 1, "init: G must be >= 1");
  for (int l : labels)
    require(l >= 1 && l <= G, "init: labels must lie in 1..G");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(G), 0);
  for (int l : labels) counts[static_cast<std::size_t>(l - 1)]++;
  for (int g = 0; g < G; ++g)
    if (counts[static_cast<std::size_t>(g)] == 0)
      throw ValidationError("init: cluster " + std::to_string(g + 1) + " is empty");

  MixtureModel model;
  model.components.resize(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g) {
    FactorComponent& comp = model.components[static_cast<std::size_t>(g)];
    const double ng = static_cast<double>(counts[static_cast<std::size_t>(g)]);
    comp.tau = ng / static_cast<double>(n);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i)
      if (labels[static_cast<std::size_t>(i)] == g + 1) mean += X.row(i).transpose();
    mean /= ng;
    comp.mu = mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)] != g + 1) continue;
      const Eigen::VectorXd d = X.row(i).transpose() - mean;
      cov.noalias() += d * d.transpose();
    }
    cov /= ng;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    internal_check(es.info() == Eigen::Success, "init: eigensolver failed");
    comp.lambda.resize(p, q);
    for (int k = 0; k < q; ++k) {
      // Eigen sorts ascending; take from the top.
      const Eigen::Index src = p - 1 - k;
      const double ev = std::max(es.eigenvalues()[src], 0.0);
      Eigen::VectorXd v = es.eigenvectors().col(src);
      // fix the sign so identical inputs give identical loadings
      Eigen::Index arg = 0;
      v.array().abs().maxCoeff(&arg);
      if (v[arg] < 0.0) v = -v;
      comp.lambda.col(k) = v * std::sqrt(ev);
    }
    comp.psi = (cov.diagonal() - comp.lambda.rowwise().squaredNorm())
                   .cwiseMax(psi_floor);
  }
  return model;
}

}  // namespace specmix
