#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "specmix/errors.hpp"

namespace specmix {

// Floor applied to every specific-variance entry. Flat background pixels make
// zero-variance bands likely; the floor keeps every implied covariance
// strictly positive definite.
inline constexpr double kDefaultPsiFloor = 1e-6;

// One factor-analyzer mixture component with covariance
// lambda * lambda^T + diag(psi).
struct FactorComponent {
  double tau = 0.0;        // mixing weight
  Eigen::VectorXd mu;      // p
  Eigen::MatrixXd lambda;  // p x q loadings
  Eigen::VectorXd psi;     // p specific variances (diagonal)
};

struct MixtureModel {
  std::vector<FactorComponent> components;

  int g() const { return static_cast<int>(components.size()); }
  int p() const { return components.empty() ? 0 : static_cast<int>(components.front().mu.size()); }
  int q() const {
    return components.empty() ? 0 : static_cast<int>(components.front().lambda.cols());
  }

  void validate() const {
    require(!components.empty(), "model: no components");
    const int np = p(), nq = q();
    require(nq >= 1 && nq < np, "model: need 1 <= q < p");
    double tau_sum = 0.0;
    for (const auto& c : components) {
      require(c.mu.size() == np && c.lambda.rows() == np && c.lambda.cols() == nq &&
                  c.psi.size() == np,
              "model: component dimensions disagree");
      require(c.tau > 0.0 && c.tau <= 1.0, "model: tau out of (0, 1]");
      require(c.psi.minCoeff() > 0.0, "model: psi must be positive");
      require(c.mu.allFinite() && c.lambda.allFinite() && c.psi.allFinite(),
              "model: non-finite parameter");
      tau_sum += c.tau;
    }
    require(std::abs(tau_sum - 1.0) <= 1e-12, "model: mixing weights must sum to 1");
  }
};

inline nlohmann::json model_to_json(const MixtureModel& model) {
  nlohmann::json j;
  j["p"] = model.p();
  j["q"] = model.q();
  j["g"] = model.g();
  j["components"] = nlohmann::json::array();
  for (const auto& c : model.components) {
    nlohmann::json jc;
    jc["tau"] = c.tau;
    jc["mu"] = std::vector<double>(c.mu.data(), c.mu.data() + c.mu.size());
    std::vector<double> lam;  // row-major
    lam.reserve(static_cast<std::size_t>(c.lambda.size()));
    for (Eigen::Index r = 0; r < c.lambda.rows(); ++r)
      for (Eigen::Index q = 0; q < c.lambda.cols(); ++q) lam.push_back(c.lambda(r, q));
    jc["lambda"] = lam;
    jc["psi"] = std::vector<double>(c.psi.data(), c.psi.data() + c.psi.size());
    j["components"].push_back(std::move(jc));
  }
  return j;
}

inline MixtureModel model_from_json(const nlohmann::json& j) {
  MixtureModel model;
  const int p = j.at("p").get<int>();
  const int q = j.at("q").get<int>();
  for (const auto& jc : j.at("components")) {
    FactorComponent c;
    c.tau = jc.at("tau").get<double>();
    const auto mu = jc.at("mu").get<std::vector<double>>();
    const auto lam = jc.at("lambda").get<std::vector<double>>();
    const auto psi = jc.at("psi").get<std::vector<double>>();
    require(mu.size() == static_cast<std::size_t>(p) &&
                lam.size() == static_cast<std::size_t>(p) * q &&
                psi.size() == static_cast<std::size_t>(p),
            "model json: component size mismatch");
    c.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), p);
    c.lambda.resize(p, q);
    for (int r = 0; r < p; ++r)
      for (int k = 0; k < q; ++k) c.lambda(r, k) = lam[static_cast<std::size_t>(r) * q + k];
    c.psi = Eigen::Map<const Eigen::VectorXd>(psi.data(), p);
    model.components.push_back(std::move(c));
  }
  require(model.g() == j.at("g").get<int>(), "model json: component count mismatch");
  model.validate();
  return model;
}

}  // namespace specmix
