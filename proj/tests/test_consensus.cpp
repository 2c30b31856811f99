#include <catch2/catch_amalgamated.hpp>

#include "specmix/consensus.hpp"
#include "specmix/metrics.hpp"
#include "specmix/simgen.hpp"

using namespace specmix;

namespace {

std::vector<int> map_labels(const Eigen::MatrixXd& z) {
  std::vector<int> labels(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index arg = 0;
    z.row(i).maxCoeff(&arg);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(arg) + 1;
  }
  return labels;
}

GeneratedData small_low_scenario(std::uint64_t seed, int p = 24) {
  ScenarioSpec spec = make_scenario_spec(Scenario::Low, 0.25, seed, p);
  return gen_scenario(spec);
}

}  // namespace

TEST_CASE("uncertainty arithmetic") {
  SubsetFit certain, soft;
  certain.posteriors = Eigen::MatrixXd(2, 4);
  certain.posteriors << 1, 0, 0, 0, 0, 1, 0, 0;
  soft.posteriors = Eigen::MatrixXd::Constant(2, 4, 0.25);
  SECTION("certain everywhere gives zero") {
    const auto u = cluster_uncertainty({certain, certain});
    REQUIRE(u[0] == 0.0);
    REQUIRE(u[1] == 0.0);
  }
  SECTION("uniform posteriors over four components give 0.75") {
    const auto u = cluster_uncertainty({soft});
    REQUIRE_THAT(u[0], Catch::Matchers::WithinAbs(0.75, 1e-15));
  }
  SECTION("two subsets with max posteriors 0.9 and 0.7 average to 0.2") {
    SubsetFit a, b;
    a.posteriors = Eigen::MatrixXd(1, 2);
    a.posteriors << 0.9, 0.1;
    b.posteriors = Eigen::MatrixXd(1, 2);
    b.posteriors << 0.3, 0.7;
    const auto u = cluster_uncertainty({a, b});
    REQUIRE_THAT(u[0], Catch::Matchers::WithinAbs(0.2, 1e-15));
  }
  SECTION("empty ensemble is rejected") {
    REQUIRE_THROWS_AS(cluster_uncertainty({}), ValidationError);
  }
}

TEST_CASE("small low-overlap scenario clusters nearly perfectly") {
  const GeneratedData data = small_low_scenario(1);
  ConsensusOptions opts;
  opts.m = 5;
  opts.d = 10;
  opts.fit.seed = 1;
  const ConsensusResult result =
      consensus_cluster(data.table.data, data.constraints, 4, 1, opts);
  REQUIRE(adjusted_rand_index(result.labels, data.labels) >= 0.95);
  REQUIRE(result.achieved_clusters == 4);
  for (double u : result.uncertainty) {
    REQUIRE(u >= 0.0);
    REQUIRE(u <= 0.75 + 1e-12);
  }
}

TEST_CASE("consensus of a single full-width subset is that subset's partition") {
  const GeneratedData data = small_low_scenario(2, 12);
  ConsensusOptions opts;
  opts.m = 1;
  opts.d = 11;  // p - 1
  opts.fit.seed = 3;
  const ConsensusResult result =
      consensus_cluster(data.table.data, ConstraintSet::none(), 4, 1, opts);
  const std::vector<int> map = map_labels(result.ensemble.fits[0].posteriors);
  REQUIRE(adjusted_rand_index(result.labels, map) == 1.0);
}

TEST_CASE("duplicate pixels share their consensus label") {
  GeneratedData data = small_low_scenario(3, 12);
  Eigen::MatrixXd X(40, 12);
  X = data.table.data.topRows(40);
  X.row(39) = X.row(7);  // exact duplicate
  ConsensusOptions opts;
  opts.m = 3;
  opts.d = 6;
  opts.fit.seed = 5;
  const ConsensusResult result =
      consensus_cluster(X, ConstraintSet::none(), 2, 1, opts);
  REQUIRE(result.labels[39] == result.labels[7]);
}

TEST_CASE("positive block pixels share the final consensus label") {
  const GeneratedData data = small_low_scenario(4);
  ConsensusOptions opts;
  opts.m = 4;
  opts.d = 8;
  opts.fit.seed = 7;
  const ConsensusResult result =
      consensus_cluster(data.table.data, data.constraints, 4, 1, opts);
  for (const auto& block : data.constraints.blocks) {
    const int first = result.labels[static_cast<std::size_t>(block.indices[0])];
    for (std::int64_t idx : block.indices)
      REQUIRE(result.labels[static_cast<std::size_t>(idx)] == first);
  }
}

TEST_CASE("consensus output is independent of the parallelism level") {
  const GeneratedData data = small_low_scenario(5, 16);
  ConsensusOptions serial, parallel;
  serial.m = parallel.m = 4;
  serial.d = parallel.d = 8;
  serial.fit.seed = parallel.fit.seed = 11;
  serial.parallelism = 1;
  parallel.parallelism = 4;
  const ConsensusResult a =
      consensus_cluster(data.table.data, data.constraints, 4, 1, serial);
  const ConsensusResult b =
      consensus_cluster(data.table.data, data.constraints, 4, 1, parallel);
  REQUIRE(a.labels == b.labels);
  REQUIRE(a.uncertainty == b.uncertainty);
  for (int m = 0; m < 4; ++m)
    REQUIRE(a.ensemble.fits[static_cast<std::size_t>(m)].posteriors ==
            b.ensemble.fits[static_cast<std::size_t>(m)].posteriors);
}

TEST_CASE("similarity retention obeys the matrix invariants") {
  const GeneratedData data = small_low_scenario(6, 12);
  ConsensusOptions opts;
  opts.m = 3;
  opts.d = 6;
  opts.fit.seed = 2;
  opts.keep_similarity = true;
  const ConsensusResult result =
      consensus_cluster(data.table.data.topRows(60), ConstraintSet::none(), 2, 1,
                        opts);
  REQUIRE(result.similarity.has_value());
  const CondensedMatrix& s = *result.similarity;
  for (std::int64_t i = 0; i < s.n; ++i) {
    REQUIRE(s(i, i) == 1.0);
    for (std::int64_t j = i + 1; j < s.n; ++j) {
      REQUIRE(s(i, j) >= 0.0);
      REQUIRE(s(i, j) <= 1.0);
    }
  }
}

TEST_CASE("invalid consensus parameters are rejected") {
  const GeneratedData data = small_low_scenario(7, 12);
  ConsensusOptions opts;
  opts.m = 0;
  REQUIRE_THROWS_AS(consensus_cluster(data.table.data, ConstraintSet::none(), 4, 1, opts),
                    ValidationError);
  opts.m = 2;
  opts.d = 1;  // q must stay below d
  REQUIRE_THROWS_AS(consensus_cluster(data.table.data, ConstraintSet::none(), 4, 1, opts),
                    ValidationError);
}
