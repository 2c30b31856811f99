#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "specmix/aecm.hpp"
#include "specmix/constraints.hpp"
#include "specmix/errors.hpp"
#include "specmix/image.hpp"
#include "specmix/io.hpp"
#include "specmix/linkage.hpp"
#include "specmix/model.hpp"
#include "specmix/similarity.hpp"
#include "specmix/subsets.hpp"

namespace specmix {

// One constrained fit on one variable subset, kept for consensus and for
// later supervised classification.
struct SubsetFit {
  std::vector<int> variables;  // column indices into the full table
  MixtureModel model;
  Eigen::MatrixXd posteriors;  // training N x G
  bool converged = false;
  int iterations = 0;
};

struct EnsembleResult {
  std::vector<SubsetFit> fits;
  ConstraintSet constraints;        // training constraints
  std::vector<int> training_labels; // final consensus labels, 1..G
  std::int64_t n = 0;
  int p = 0;
  int g = 0;
  std::uint64_t seed = 0;
  // per-variable affine transform applied before fitting (optional
  // standardization); empty when fitting raw values
  std::vector<double> shift, scale;

  bool standardized() const { return !shift.empty(); }
};

struct ConsensusOptions {
  int m = 25;
  int d = 20;
  FitOptions fit;
  int parallelism = 0;  // 0 = hardware concurrency
  bool single_precision = false;
  bool keep_similarity = false;
};

struct ConsensusResult {
  std::vector<int> labels;           // 1..G per pixel
  std::vector<double> uncertainty;   // in [0, 1 - 1/G]
  std::optional<CondensedMatrix> similarity;
  EnsembleResult ensemble;
  SubsetPlan plan;
  int achieved_clusters = 0;
};

// Mean across subsets of one minus the pixel's maximum posterior.
inline std::vector<double> cluster_uncertainty(const std::vector<SubsetFit>& fits) {
  require(!fits.empty(), "uncertainty: empty ensemble");
  const Eigen::Index n = fits.front().posteriors.rows();
  std::vector<double> u(static_cast<std::size_t>(n), 0.0);
  for (const auto& fit : fits) {
    require(fit.posteriors.rows() == n, "uncertainty: subset size mismatch");
    for (Eigen::Index i = 0; i < n; ++i)
      u[static_cast<std::size_t>(i)] += 1.0 - fit.posteriors.row(i).maxCoeff();
  }
  const double inv = 1.0 / static_cast<double>(fits.size());
  for (double& v : u) v *= inv;
  return u;
}

// Full consensus pipeline: sample M variable subsets, fit a constrained
// mixture to each, average posterior similarities, cut the complete-linkage
// dendrogram at G. Subset fits run concurrently; the similarity reduction is
// applied in fixed subset order so results do not depend on the thread count.
inline ConsensusResult consensus_cluster(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                         const ConstraintSet& cons, int G, int q,
                                         const ConsensusOptions& opts) {
  opts.fit.validate();
  require(opts.m >= 1, "consensus: M must be >= 1");
  require(q >= 1 && q < opts.d, "consensus: need 1 <= q < d");
  ConsensusResult result;
  result.plan = sample_subsets(static_cast<int>(X.cols()), opts.m, opts.d,
                               opts.fit.seed);

  result.ensemble.fits.resize(static_cast<std::size_t>(opts.m));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const unsigned hw = std::thread::hardware_concurrency();
  const int workers =
      std::max(1, opts.parallelism > 0 ? opts.parallelism
                                       : static_cast<int>(hw ? hw : 1));
  auto work = [&]() {
    for (;;) {
      const int m = next.fetch_add(1);
      if (m >= opts.m) return;
      try {
        const auto& vars = result.plan.subsets[static_cast<std::size_t>(m)];
        Eigen::MatrixXd sub(X.rows(), vars.size());
        for (std::size_t c = 0; c < vars.size(); ++c)
          sub.col(static_cast<Eigen::Index>(c)) = X.col(vars[c]);
        FitOptions fit_opts = opts.fit;
        fit_opts.seed = mix_seed(opts.fit.seed, static_cast<std::uint64_t>(m) + 1);
        FitResult fit = fit_constrained_pgmm(sub, cons, G, q, fit_opts);
        SubsetFit& out = result.ensemble.fits[static_cast<std::size_t>(m)];
        out.variables = vars;
        out.model = std::move(fit.model);
        out.posteriors = std::move(fit.posteriors);
        out.converged = fit.converged;
        out.iterations = fit.iterations;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  {
    std::vector<std::thread> pool;
    const int spawn = std::min(workers, opts.m);
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int t = 0; t < spawn; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SimilarityAccumulator acc(X.rows(), opts.single_precision);
  for (const auto& fit : result.ensemble.fits) acc.add(fit.posteriors);

  if (opts.keep_similarity) result.similarity = acc.average();
  CondensedMatrix d = acc.dissimilarity();
  result.labels = complete_linkage_cut(d, G);
  result.uncertainty = cluster_uncertainty(result.ensemble.fits);

  std::vector<char> seen(static_cast<std::size_t>(G) + 1, 0);
  for (int l : result.labels) seen[static_cast<std::size_t>(l)] = 1;
  result.achieved_clusters = 0;
  for (int g = 1; g <= G; ++g)
    if (seen[static_cast<std::size_t>(g)]) ++result.achieved_clusters;

  result.ensemble.constraints = cons;
  result.ensemble.training_labels = result.labels;
  result.ensemble.n = X.rows();
  result.ensemble.p = static_cast<int>(X.cols());
  result.ensemble.g = G;
  result.ensemble.seed = opts.fit.seed;
  return result;
}

// --- ensemble archive -------------------------------------------------------
// One JSON manifest plus one binary file with all posterior matrices
// concatenated (N x G doubles each, row-major, in subset order).

inline void save_ensemble(const EnsembleResult& ensemble, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["n"] = ensemble.n;
  j["p"] = ensemble.p;
  j["g"] = ensemble.g;
  j["seed"] = ensemble.seed;
  j["constraints"] = constraints_to_json(ensemble.constraints);
  j["training_labels"] = ensemble.training_labels;
  if (ensemble.standardized()) {
    j["shift"] = ensemble.shift;
    j["scale"] = ensemble.scale;
  }
  j["posteriors_payload"] = "posteriors.raw";
  j["fits"] = nlohmann::json::array();
  std::vector<double> payload;
  payload.reserve(ensemble.fits.size() * static_cast<std::size_t>(ensemble.n) *
                  ensemble.g);
  for (const auto& fit : ensemble.fits) {
    nlohmann::json jf;
    jf["variables"] = fit.variables;
    jf["model"] = model_to_json(fit.model);
    jf["converged"] = fit.converged;
    jf["iterations"] = fit.iterations;
    j["fits"].push_back(std::move(jf));
    for (Eigen::Index r = 0; r < fit.posteriors.rows(); ++r)
      for (Eigen::Index c = 0; c < fit.posteriors.cols(); ++c)
        payload.push_back(fit.posteriors(r, c));
  }
  detail::write_json_file((std::filesystem::path(dir) / "ensemble.json").string(), j);
  detail::write_raw_payload(
      (std::filesystem::path(dir) / "posteriors.raw").string(), payload);
}

inline EnsembleResult load_ensemble(const std::string& dir) {
  const auto manifest = (std::filesystem::path(dir) / "ensemble.json").string();
  const nlohmann::json j = detail::parse_json_file(manifest);
  EnsembleResult ensemble;
  ensemble.n = j.at("n").get<std::int64_t>();
  ensemble.p = j.at("p").get<int>();
  ensemble.g = j.at("g").get<int>();
  ensemble.seed = j.at("seed").get<std::uint64_t>();
  ensemble.constraints = constraints_from_json(j.at("constraints"), ensemble.n);
  ensemble.training_labels = j.at("training_labels").get<std::vector<int>>();
  if (j.contains("shift")) {
    ensemble.shift = j.at("shift").get<std::vector<double>>();
    ensemble.scale = j.at("scale").get<std::vector<double>>();
  }
  const auto& jfits = j.at("fits");
  const std::size_t cell =
      static_cast<std::size_t>(ensemble.n) * static_cast<std::size_t>(ensemble.g);
  const std::vector<double> payload = detail::read_raw_payload<double>(
      detail::sibling_path(manifest, j.at("posteriors_payload").get<std::string>()),
      jfits.size() * cell);
  std::size_t offset = 0;
  for (const auto& jf : jfits) {
    SubsetFit fit;
    fit.variables = jf.at("variables").get<std::vector<int>>();
    fit.model = model_from_json(jf.at("model"));
    fit.converged = jf.at("converged").get<bool>();
    fit.iterations = jf.at("iterations").get<int>();
    fit.posteriors.resize(ensemble.n, ensemble.g);
    for (Eigen::Index r = 0; r < ensemble.n; ++r)
      for (int c = 0; c < ensemble.g; ++c)
        fit.posteriors(r, c) = payload[offset + static_cast<std::size_t>(r) * ensemble.g +
                                       static_cast<std::size_t>(c)];
    offset += cell;
    ensemble.fits.push_back(std::move(fit));
  }
  require(!ensemble.fits.empty(), "ensemble: no fits in archive");
  return ensemble;
}

}  // namespace specmix
