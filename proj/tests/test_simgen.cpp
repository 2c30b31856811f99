#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "specmix/simgen.hpp"

using namespace specmix;

namespace {

std::map<std::string, std::int64_t> block_sizes(const ConstraintSet& cons) {
  std::map<std::string, std::int64_t> out;
  for (const auto& b : cons.blocks)
    out[b.id] = static_cast<std::int64_t>(b.indices.size());
  return out;
}

}  // namespace

TEST_CASE("overlap-scenario layout at full scale pins the documented counts") {
  const ScenarioSpec spec = make_scenario_spec(Scenario::Low, 1.0, 3);
  const GeneratedData data = gen_scenario(spec);
  REQUIRE(data.table.n() == 7825);
  REQUIRE(data.table.p() == 101);
  const auto sizes = block_sizes(data.constraints);
  REQUIRE(sizes.at("background") == 1356);
  REQUIRE(sizes.at("fg2") == 750);
  REQUIRE(sizes.at("fg3") == 450);
  REQUIRE(sizes.at("fg4") == 400);
  REQUIRE(data.constraints.constrained_pixel_count() == 2956);
  REQUIRE(data.constraints.has_negative());
  // all pairs negative by default
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b)
      REQUIRE(data.constraints.relation[a][b] == (a != b));
}

TEST_CASE("cereal layout at full scale pins both preset counts") {
  SECTION("large preset") {
    const GeneratedData data = gen_synthetic_cereal(
        gen_component_params(4, 101, 2, {-2.5, 0, 2.5, 5}, 1.0, 5),
        cereal_layout(1.0, true), 5);
    REQUIRE(data.table.n() == 28039);
    const auto sizes = block_sizes(data.constraints);
    REQUIRE(sizes.at("background") == 5900);
    REQUIRE(sizes.at("fg2") == 3130);
    REQUIRE(sizes.at("fg3") == 1535);
    REQUIRE(sizes.at("fg4") == 1650);
    REQUIRE(data.constraints.constrained_pixel_count() == 12215);
  }
  SECTION("small preset") {
    const GeneratedData data = gen_synthetic_cereal(
        gen_component_params(4, 101, 2, {-2.5, 0, 2.5, 5}, 1.0, 5),
        cereal_layout(1.0, false), 5);
    REQUIRE(data.table.n() == 28039);
    const auto sizes = block_sizes(data.constraints);
    REQUIRE(sizes.at("background") == 3801);
    REQUIRE(sizes.at("fg2") == 1540);
    REQUIRE(sizes.at("fg3") == 783);
    REQUIRE(sizes.at("fg4") == 827);
    REQUIRE(data.constraints.constrained_pixel_count() == 6951);
  }
}

TEST_CASE("scenario presets carry the documented mean settings") {
  const ScenarioSpec low = make_scenario_spec(Scenario::Low, 0.5, 0);
  REQUIRE(low.a_values == std::vector<double>{-5, 0, 5, 10});
  REQUIRE(low.mean_variance == 0.5);
  REQUIRE(low.q == 3);
  const ScenarioSpec high = make_scenario_spec(Scenario::High, 0.5, 0);
  REQUIRE(high.a_values == std::vector<double>{-1.25, 0, 1.25, 2.5});
  REQUIRE(high.mean_variance == 1.5);
  const ScenarioSpec mild = make_scenario_spec(Scenario::Mild, 0.5, 0);
  REQUIRE(mild.a_values == std::vector<double>{-2.5, 0, 2.5, 5});
  REQUIRE(mild.mean_variance == 1.0);
}

TEST_CASE("quarter-scale cereal presets stay near the target fractions") {
  for (bool large : {true, false}) {
    const GeneratedData data = gen_synthetic_cereal(
        gen_component_params(4, 8, 2, {-2.5, 0, 2.5, 5}, 1.0, 2),
        cereal_layout(0.5, large), 2);
    const double frac =
        static_cast<double>(data.constraints.constrained_pixel_count()) /
        static_cast<double>(data.table.n());
    const double target = large ? 0.435 : 0.247;
    REQUIRE(std::abs(frac - target) < 0.02);
  }
}

TEST_CASE("labels come straight from the mask") {
  MaskSpec layout;
  MaskImageSpec img;
  img.id = "tiny";
  img.rows = 10;
  img.cols = 10;
  img.frac_rows = 0.9;
  img.frac_cols = 0.9;
  img.fg_class = 2;
  img.bg_class = 1;
  layout.images.push_back(img);
  const auto params = gen_component_params(2, 6, 1, {0.0, 4.0}, 0.5, 9);
  const GeneratedData data = gen_synthetic_cereal(params, layout, 9);
  const Eigen::MatrixXi mask = mask_classes(layout.images[0]);
  std::int64_t fg = 0;
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c)
      if (mask(r, c) == 2) ++fg;
  std::int64_t fg_labels = 0;
  for (int l : data.labels)
    if (l == 2) ++fg_labels;
  REQUIRE(fg_labels == fg);
  REQUIRE(static_cast<std::int64_t>(data.labels.size()) == 100);
}

TEST_CASE("sample moments converge to the class parameters") {
  const int p = 12, q = 2;
  const auto params = gen_component_params(1, p, q, {1.5}, 0.5, 31);
  const ClassParams& cp = params[0];
  Rng rng(77);
  const int n = 10000;
  Eigen::MatrixXd draws(n, p);
  Eigen::MatrixXi mask = Eigen::MatrixXi::Constant(100, 100, 1);
  const ImageTensor img = gen_from_mask(mask, params, rng, "mc");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j)
      draws(i, j) = img.values[static_cast<std::size_t>(i) * p + j];

  const Eigen::MatrixXd sigma =
      cp.lambda * cp.lambda.transpose() + Eigen::MatrixXd(cp.psi.asDiagonal());
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  for (int j = 0; j < p; ++j) {
    const double se = std::sqrt(sigma(j, j) / n);
    REQUIRE(std::abs(mean[j] - cp.mu[j]) < 5.0 * se);
  }
  const Eigen::MatrixXd centered = draws.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / (n - 1);
  REQUIRE((cov - sigma).norm() / sigma.norm() < 0.1);
}

TEST_CASE("identical seeds give bit-identical datasets") {
  const ScenarioSpec spec = make_scenario_spec(Scenario::Mild, 0.25, 17, 20);
  const GeneratedData a = gen_scenario(spec);
  const GeneratedData b = gen_scenario(spec);
  REQUIRE(a.table.data == b.table.data);
  REQUIRE(a.labels == b.labels);
  const ScenarioSpec other = make_scenario_spec(Scenario::Mild, 0.25, 18, 20);
  REQUIRE(gen_scenario(other).table.data != a.table.data);
}

TEST_CASE("within-block loading correlation exceeds across-block on average") {
  // variables 0-4 share a loading centre, 5-9 share another
  const int p = 10, n = 400;
  double within = 0.0, across = 0.0;
  int seeds = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto params = gen_component_params(1, p, 1, {0.0}, 0.5, seed);
    Rng rng(seed + 5000);
    Eigen::MatrixXd draws(n, p);
    Eigen::MatrixXi mask = Eigen::MatrixXi::Constant(20, 20, 1);
    const ImageTensor img = gen_from_mask(mask, params, rng, "corr");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j)
        draws(i, j) = img.values[static_cast<std::size_t>(i) * p + j];
    const Eigen::RowVectorXd mean = draws.colwise().mean();
    const Eigen::MatrixXd centered = draws.rowwise() - mean;
    Eigen::MatrixXd cov = (centered.transpose() * centered) / (n - 1);
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    for (int a = 0; a < p; ++a)
      for (int b = a + 1; b < p; ++b) {
        const double corr = cov(a, b) / (sd[a] * sd[b]);
        if ((a < 5) == (b < 5))
          within += corr;
        else
          across += corr;
      }
    ++seeds;
  }
  within /= seeds * 20.0;   // 2 * C(5,2) within pairs per seed
  across /= seeds * 25.0;   // 5 * 5 across pairs per seed
  REQUIRE(within > across);
}

TEST_CASE("a rectangle crossing the class boundary is rejected") {
  MaskSpec layout;
  MaskImageSpec img;
  img.id = "bad";
  img.rows = 12;
  img.cols = 12;
  img.frac_rows = 0.6;
  img.frac_cols = 0.6;
  img.fg_class = 2;
  img.bg_class = 1;
  img.rects.push_back({2, RectSpec{0, 0, 12, 12}});  // covers both regions
  layout.images.push_back(img);
  const auto params = gen_component_params(2, 6, 1, {0.0, 3.0}, 0.5, 1);
  REQUIRE_THROWS_AS(gen_synthetic_cereal(params, layout, 1), ValidationError);
}

TEST_CASE("multigrain mask places every class on a shared background") {
  const Eigen::MatrixXi mask = multigrain_mask(40, 90, {2, 3, 4});
  std::map<int, int> counts;
  for (int r = 0; r < 40; ++r)
    for (int c = 0; c < 90; ++c) counts[mask(r, c)]++;
  REQUIRE(counts.at(1) > 0);
  REQUIRE(counts.at(2) > 0);
  REQUIRE(counts.at(3) > 0);
  REQUIRE(counts.at(4) > 0);
}
