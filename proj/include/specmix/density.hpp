#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>

#include "specmix/errors.hpp"
#include "specmix/model.hpp"

namespace specmix {

namespace detail {
inline constexpr double kLogTwoPi = 1.8378770664093454836;
// Absolute safety floor, far below any configurable psi floor.
inline constexpr double kPsiHardFloor = 1e-12;
}  // namespace detail

// Gaussian log-density evaluator for one factor-analyzer component. The
// covariance inverse and determinant go through the q x q Woodbury core
//   sigma^-1 = psi^-1 - psi^-1 L (I + L' psi^-1 L)^-1 L' psi^-1
//   log|sigma| = log|I + L' psi^-1 L| + sum_j log psi_j
// so no p x p matrix is ever formed.
class ComponentDensity {
 public:
  explicit ComponentDensity(const FactorComponent& comp) : mu_(comp.mu) {
    if (!(comp.psi.allFinite()) || comp.psi.minCoeff() < detail::kPsiHardFloor)
      throw NumericalError("component density: psi entry below floor");
    if (!comp.mu.allFinite() || !comp.lambda.allFinite())
      throw NumericalError("component density: non-finite parameters");
    psi_inv_ = comp.psi.array().inverse();
    u_ = psi_inv_.matrix().asDiagonal() * comp.lambda;  // p x q
    const Eigen::Index q = comp.lambda.cols();
    Eigen::MatrixXd core = Eigen::MatrixXd::Identity(q, q);
    core.noalias() += comp.lambda.transpose() * u_;
    llt_.compute(core);
    if (llt_.info() != Eigen::Success)
      throw SingularMatrixError("component density: Woodbury core not SPD");
    double log_det_core = 0.0;
    for (Eigen::Index i = 0; i < q; ++i)
      log_det_core += 2.0 * std::log(llt_.matrixLLT()(i, i));
    log_det_sigma_ = log_det_core + comp.psi.array().log().sum();
    norm_ = -0.5 * (static_cast<double>(comp.mu.size()) * detail::kLogTwoPi +
                    log_det_sigma_);
  }

  double log_det_sigma() const { return log_det_sigma_; }

  double operator()(const Eigen::VectorXd& x) const {
    if (!x.allFinite()) throw NumericalError("log density: non-finite input");
    require(x.size() == mu_.size(), "log density: dimension mismatch");
    const Eigen::VectorXd d = x - mu_;
    const double full = (d.array().square() * psi_inv_).sum();
    const Eigen::VectorXd w = u_.transpose() * d;  // q
    const Eigen::VectorXd y = llt_.matrixL().solve(w);
    return norm_ - 0.5 * (full - y.squaredNorm());
  }

  // One value per row of X.
  Eigen::VectorXd rows(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    require(X.cols() == mu_.size(), "log density: dimension mismatch");
    const Eigen::MatrixXd xc = X.rowwise() - mu_.transpose();
    Eigen::VectorXd quad = xc.array().square().matrix() * psi_inv_.matrix();
    Eigen::MatrixXd w = xc * u_;  // N x q
    const Eigen::MatrixXd y = llt_.matrixL().solve(w.transpose());  // q x N
    quad -= y.colwise().squaredNorm().transpose();
    return (norm_ - 0.5 * quad.array()).matrix();
  }

 private:
  Eigen::VectorXd mu_;
  Eigen::ArrayXd psi_inv_;
  Eigen::MatrixXd u_;  // psi^-1 * lambda
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_sigma_ = 0.0;
  double norm_ = 0.0;
};

inline double log_density_lowrank(const Eigen::VectorXd& x,
                                  const FactorComponent& comp) {
  return ComponentDensity(comp)(x);
}

// log tau_g + log N(x_n; component g) for every pixel and component.
inline Eigen::MatrixXd weighted_log_density_matrix(
    const Eigen::Ref<const Eigen::MatrixXd>& X, const MixtureModel& model) {
  require(model.p() == X.cols(), "density matrix: dimension mismatch");
  Eigen::MatrixXd out(X.rows(), model.g());
  for (int g = 0; g < model.g(); ++g) {
    const FactorComponent& comp = model.components[g];
    require(comp.tau > 0.0, "density matrix: tau must be positive");
    out.col(g) = ComponentDensity(comp).rows(X).array() + std::log(comp.tau);
  }
  if (!out.allFinite())
    throw NumericalError("density matrix: non-finite log density");
  return out;
}

}  // namespace specmix
