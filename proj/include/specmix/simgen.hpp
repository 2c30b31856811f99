#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "specmix/constraints.hpp"
#include "specmix/errors.hpp"
#include "specmix/image.hpp"
#include "specmix/model.hpp"
#include "specmix/rng.hpp"

namespace specmix {

// One simulated class: factor-model parameters without a mixing weight.
struct ClassParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd lambda;  // p x q
  Eigen::VectorXd psi;
};

enum class Scenario { Low, Mild, High, SyntheticCereal };

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Low: return "low";
    case Scenario::Mild: return "mild";
    case Scenario::High: return "high";
    case Scenario::SyntheticCereal: return "synthetic-cereal";
  }
  return "?";
}

inline Scenario scenario_from_name(const std::string& name) {
  if (name == "low") return Scenario::Low;
  if (name == "mild") return Scenario::Mild;
  if (name == "high") return Scenario::High;
  if (name == "synthetic-cereal") return Scenario::SyntheticCereal;
  throw ValidationError("unknown scenario '" + name + "'");
}

struct RectSpec {
  int row0 = 0, col0 = 0, rows = 0, cols = 0;
};

struct MaskImageSpec {
  std::string id;
  int rows = 0, cols = 0;
  double frac_rows = 0.0, frac_cols = 0.0;  // ellipse axis fractions
  int fg_class = 0, bg_class = 1;
  std::vector<std::pair<int, RectSpec>> rects;  // (class, rectangle)
};

struct MaskSpec {
  std::vector<MaskImageSpec> images;
};

struct ScenarioSpec {
  Scenario scenario = Scenario::Low;
  std::vector<double> a_values;  // per-class mean locations
  double mean_variance = 0.5;    // scenario control: 0.5 / 1 / 1.5
  int q = 3;
  int p = 101;
  std::uint64_t seed = 0;
  double psi_floor = kDefaultPsiFloor;
  MaskSpec layout;
};

namespace detail {

inline bool in_ellipse(int r, int c, const MaskImageSpec& img) {
  const double cr = (img.rows - 1) / 2.0;
  const double cc = (img.cols - 1) / 2.0;
  const double a = img.frac_rows * img.rows / 2.0;
  const double b = img.frac_cols * img.cols / 2.0;
  const double dr = (r - cr) / a;
  const double dc = (c - cc) / b;
  return dr * dr + dc * dc <= 1.0;
}

inline int mask_class(int r, int c, const MaskImageSpec& img) {
  return in_ellipse(r, c, img) ? img.fg_class : img.bg_class;
}

inline bool rect_single_class(const RectSpec& rect, int cls,
                              const MaskImageSpec& img) {
  if (rect.row0 < 0 || rect.col0 < 0 || rect.rows < 1 || rect.cols < 1 ||
      rect.row0 + rect.rows > img.rows || rect.col0 + rect.cols > img.cols)
    return false;
  for (int r = rect.row0; r < rect.row0 + rect.rows; ++r)
    for (int c = rect.col0; c < rect.col0 + rect.cols; ++c)
      if (mask_class(r, c, img) != cls) return false;
  return true;
}

// Scale a rectangle, then shrink its longer side deterministically until it
// sits inside a single class region.
inline RectSpec fit_rect(int h, int w, int cls, bool corner_anchor, int anchor,
                         const MaskImageSpec& img) {
  for (;;) {
    internal_check(h >= 1 && w >= 1, "mask: rectangle could not be placed");
    RectSpec rect;
    rect.rows = h;
    rect.cols = w;
    if (corner_anchor) {
      rect.row0 = (anchor == 0 || anchor == 1) ? 0 : img.rows - h;
      rect.col0 = (anchor == 0 || anchor == 2) ? 0 : img.cols - w;
    } else {
      rect.row0 = (img.rows - h) / 2;
      rect.col0 = (img.cols - w) / 2;
    }
    if (rect_single_class(rect, cls, img)) return rect;
    if (h >= w)
      --h;
    else
      --w;
  }
}

struct LayoutImage {
  const char* id;
  int rows, cols, cls;
  double fa, fb;
  int blue_h, blue_w, blue_n;  // corner rectangles (background class)
  int ctr_h, ctr_w;            // centered rectangle (foreground class)
};

// anchors used when fewer than four corner rectangles are placed:
// 2 -> top-left, bottom-right; 3 -> also top-right
inline const int kAnchorOrder[4] = {0, 3, 1, 2};

inline MaskSpec build_layout(const std::vector<LayoutImage>& images, double scale) {
  require(scale > 0.0 && scale <= 1.0, "layout: scale must be in (0, 1]");
  MaskSpec mask;
  for (const auto& li : images) {
    MaskImageSpec img;
    img.id = li.id;
    img.rows = std::max<int>(4, static_cast<int>(std::lround(li.rows * scale)));
    img.cols = std::max<int>(4, static_cast<int>(std::lround(li.cols * scale)));
    img.frac_rows = li.fa;
    img.frac_cols = li.fb;
    img.fg_class = li.cls;
    img.bg_class = 1;
    const int bh = std::max(1, static_cast<int>(std::lround(li.blue_h * scale)));
    const int bw = std::max(1, static_cast<int>(std::lround(li.blue_w * scale)));
    for (int k = 0; k < li.blue_n; ++k)
      img.rects.emplace_back(
          1, fit_rect(bh, bw, 1, true, kAnchorOrder[k], img));
    const int ch = std::max(1, static_cast<int>(std::lround(li.ctr_h * scale)));
    const int cw = std::max(1, static_cast<int>(std::lround(li.ctr_w * scale)));
    img.rects.emplace_back(li.cls, fit_rect(ch, cw, li.cls, false, 0, img));
    mask.images.push_back(std::move(img));
  }
  return mask;
}

}  // namespace detail

// Three-image layout used by the overlap scenarios. At scale 1 the images
// hold 7825 pixels and the constraint rectangles cover 2956 of them
// (1356 background + 750 + 450 + 400 foreground).
inline MaskSpec scenario_layout(double scale = 1.0) {
  static const std::vector<detail::LayoutImage> kImages = {
      {"sim1", 51, 51, 2, 0.80, 0.80, 12, 10, 4, 30, 25},
      {"sim2", 52, 50, 3, 0.80, 0.80, 11, 9, 4, 18, 25},
      {"sim3", 64, 41, 4, 0.80, 0.80, 12, 10, 4, 20, 20},
  };
  return detail::build_layout(kImages, scale);
}

// Nine-image layout that mirrors the real single-grain image set. At scale 1
// the images hold 28039 pixels; the large preset constrains 12215 of them
// (5900 background + 3130 + 1535 + 1650 foreground), the small preset 6951
// (3801 + 1540 + 783 + 827).
inline MaskSpec cereal_layout(double scale = 1.0, bool large_preset = true) {
  static const std::vector<detail::LayoutImage> kLarge = {
      {"wheat1", 67, 53, 2, 0.78, 0.82, 10, 17, 4, 40, 26},
      {"wheat2", 62, 64, 2, 0.72, 0.82, 10, 17, 4, 26, 40},
      {"wheat3", 65, 55, 2, 0.72, 0.88, 10, 17, 4, 30, 35},
      {"corn1", 61, 34, 3, 0.62, 0.62, 10, 16, 4, 27, 16},
      {"corn2", 39, 69, 3, 0.62, 0.62, 10, 16, 4, 19, 29},
      {"corn3", 56, 54, 3, 0.62, 0.62, 10, 16, 4, 23, 24},
      {"rice1", 56, 49, 4, 0.70, 0.70, 11, 15, 4, 22, 25},
      {"rice2", 78, 54, 4, 0.70, 0.70, 10, 17, 4, 22, 25},
      {"rice3", 50, 44, 4, 0.70, 0.70, 10, 15, 4, 25, 22},
  };
  static const std::vector<detail::LayoutImage> kSmall = {
      {"wheat1", 67, 53, 2, 0.78, 0.82, 8, 24, 2, 16, 32},
      {"wheat2", 62, 64, 2, 0.72, 0.82, 11, 20, 2, 16, 32},
      {"wheat3", 65, 55, 2, 0.72, 0.88, 10, 22, 2, 12, 43},
      {"corn1", 61, 34, 3, 0.62, 0.62, 12, 17, 2, 29, 9},
      {"corn2", 39, 69, 3, 0.62, 0.62, 11, 20, 2, 9, 29},
      {"corn3", 56, 54, 3, 0.62, 0.62, 11, 20, 2, 9, 29},
      {"rice1", 56, 49, 4, 0.70, 0.70, 9, 23, 2, 11, 25},
      {"rice2", 78, 54, 4, 0.70, 0.70, 11, 16, 2, 12, 23},
      {"rice3", 50, 44, 4, 0.70, 0.70, 23, 7, 3, 12, 23},
  };
  return detail::build_layout(large_preset ? kLarge : kSmall, scale);
}

inline ScenarioSpec make_scenario_spec(Scenario scenario, double scale,
                                       std::uint64_t seed, int p = 101) {
  ScenarioSpec spec;
  spec.scenario = scenario;
  spec.seed = seed;
  spec.p = p;
  switch (scenario) {
    case Scenario::Low:
      spec.a_values = {-5.0, 0.0, 5.0, 10.0};
      spec.mean_variance = 0.5;
      spec.q = 3;
      spec.layout = scenario_layout(scale);
      break;
    case Scenario::Mild:
      spec.a_values = {-2.5, 0.0, 2.5, 5.0};
      spec.mean_variance = 1.0;
      spec.q = 3;
      spec.layout = scenario_layout(scale);
      break;
    case Scenario::High:
      spec.a_values = {-1.25, 0.0, 1.25, 2.5};
      spec.mean_variance = 1.5;
      spec.q = 3;
      spec.layout = scenario_layout(scale);
      break;
    case Scenario::SyntheticCereal:
      spec.a_values = {-2.5, 0.0, 2.5, 5.0};
      spec.mean_variance = 1.0;
      spec.q = 2;
      spec.layout = cereal_layout(scale, true);
      break;
  }
  return spec;
}

// Class parameters: per-coordinate means around the class location, loadings
// drawn in blocks of five consecutive variables around one shared center per
// block (this is what induces the strong within-spectrum correlation), and
// floored gamma specific variances.
inline std::vector<ClassParams> gen_component_params(
    int G, int p, int q, const std::vector<double>& a_values,
    double mean_variance, std::uint64_t seed,
    double psi_floor = kDefaultPsiFloor) {
  require(G >= 1, "params: G must be >= 1");
  require(static_cast<std::size_t>(G) == a_values.size(),
          "params: a_values must have length G");
  require(p >= 2 && q >= 1 && q < p, "params: need 1 <= q < p");
  require(mean_variance > 0.0, "params: mean variance must be positive");
  Rng rng(seed);
  const double mean_sd = std::sqrt(mean_variance);
  std::vector<ClassParams> out(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g) {
    ClassParams& cp = out[static_cast<std::size_t>(g)];
    cp.mu.resize(p);
    for (int i = 0; i < p; ++i) cp.mu[i] = rng.normal(a_values[static_cast<std::size_t>(g)], mean_sd);
    cp.lambda.resize(p, q);
    const double load_sd = std::sqrt(0.03);
    for (int block = 0; block * 5 < p; ++block) {
      const double center = rng.uniform(0.3, 0.9);
      const int hi = std::min(p, (block + 1) * 5);
      for (int i = block * 5; i < hi; ++i)
        for (int k = 0; k < q; ++k) cp.lambda(i, k) = rng.normal(center, load_sd);
    }
    cp.psi.resize(p);
    for (int i = 0; i < p; ++i) {
      const double shape = rng.uniform(0.0, 0.1);
      cp.psi[i] = shape > 0.0 ? std::max(rng.gamma(shape), psi_floor) : psi_floor;
    }
  }
  return out;
}

struct GeneratedData {
  PixelTable table;
  std::vector<int> labels;  // true class per pixel, 1..G
  ConstraintSet constraints;
  std::vector<ImageTensor> images;
  std::vector<Eigen::MatrixXi> masks;  // class id per pixel, per image
  std::vector<ClassParams> params;     // the factor models actually used
};

// Class mask for one image of the layout.
inline Eigen::MatrixXi mask_classes(const MaskImageSpec& img) {
  Eigen::MatrixXi mask(img.rows, img.cols);
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c) mask(r, c) = detail::mask_class(r, c, img);
  return mask;
}

// Draw one image from per-class factor models: x = mu + lambda u + eps.
inline ImageTensor gen_from_mask(const Eigen::MatrixXi& mask,
                                 const std::vector<ClassParams>& params,
                                 Rng& rng, const std::string& id) {
  require(!params.empty(), "generate: no class parameters");
  const int p = static_cast<int>(params.front().mu.size());
  const int q = static_cast<int>(params.front().lambda.cols());
  ImageTensor img;
  img.id = id;
  img.rows = static_cast<int>(mask.rows());
  img.cols = static_cast<int>(mask.cols());
  img.bands = p;
  img.values.resize(static_cast<std::size_t>(img.rows) * img.cols * p);
  Eigen::VectorXd u(q), x(p);
  std::size_t pos = 0;
  for (int r = 0; r < img.rows; ++r) {
    for (int c = 0; c < img.cols; ++c) {
      const int cls = mask(r, c);
      require(cls >= 1 && static_cast<std::size_t>(cls) <= params.size(),
              "generate: mask class out of range");
      const ClassParams& cp = params[static_cast<std::size_t>(cls - 1)];
      for (int k = 0; k < q; ++k) u[k] = rng.normal();
      x.noalias() = cp.mu + cp.lambda * u;
      for (int i = 0; i < p; ++i) x[i] += rng.normal() * std::sqrt(cp.psi[i]);
      for (int i = 0; i < p; ++i) img.values[pos++] = x[i];
    }
  }
  return img;
}

namespace detail {

inline nlohmann::json constraint_document(const MaskSpec& layout) {
  // one group per class that has rectangles; default relation (all pairs
  // negative) is left implicit
  std::map<int, nlohmann::json> groups;
  for (const auto& img : layout.images) {
    for (const auto& [cls, rect] : img.rects) {
      if (!groups.count(cls))
        groups[cls] = nlohmann::json{
            {"name", cls == 1 ? "background" : "fg" + std::to_string(cls)},
            {"regions", nlohmann::json::array()}};
      groups[cls]["regions"].push_back({{"image", img.id},
                                        {"row0", rect.row0},
                                        {"row1", rect.row0 + rect.rows - 1},
                                        {"col0", rect.col0},
                                        {"col1", rect.col0 + rect.cols - 1}});
    }
  }
  nlohmann::json doc;
  doc["groups"] = nlohmann::json::array();
  for (auto& [cls, jg] : groups) doc["groups"].push_back(std::move(jg));
  return doc;
}

inline GeneratedData generate(const MaskSpec& layout,
                              const std::vector<ClassParams>& params,
                              std::uint64_t seed) {
  require(!layout.images.empty(), "generate: empty layout");
  GeneratedData data;
  data.params = params;
  for (std::size_t l = 0; l < layout.images.size(); ++l) {
    const MaskImageSpec& spec = layout.images[l];
    for (const auto& [cls, rect] : spec.rects)
      require(rect_single_class(rect, cls, spec),
              "generate: constraint rectangle crosses a class boundary in '" +
                  spec.id + "'");
    Eigen::MatrixXi mask = mask_classes(spec);
    Rng rng(mix_seed(seed, 1000 + l));
    data.images.push_back(gen_from_mask(mask, params, rng, spec.id));
    for (int r = 0; r < mask.rows(); ++r)
      for (int c = 0; c < mask.cols(); ++c) data.labels.push_back(mask(r, c));
    data.masks.push_back(std::move(mask));
  }
  data.table = flatten_images(data.images);
  data.constraints = build_constraints(constraint_document(layout), data.table);
  return data;
}

}  // namespace detail

// Scenario generator: parameters from the scenario settings, pixels from the
// layout masks, constraints from the layout rectangles (all pairs of groups
// negatively related).
inline GeneratedData gen_scenario(const ScenarioSpec& spec) {
  const int G = static_cast<int>(spec.a_values.size());
  const std::vector<ClassParams> params =
      gen_component_params(G, spec.p, spec.q, spec.a_values, spec.mean_variance,
                           mix_seed(spec.seed, 0), spec.psi_floor);
  return detail::generate(spec.layout, params, spec.seed);
}

// Synthetic nine-image dataset from caller-supplied class factor models.
inline GeneratedData gen_synthetic_cereal(const std::vector<ClassParams>& params,
                                          const MaskSpec& layout,
                                          std::uint64_t seed) {
  require(params.size() >= 2, "synthetic cereal: need the class factor models");
  return detail::generate(layout, params, seed);
}

// A single image holding several foreground shapes of different classes on a
// shared background, for supervised-classification exercises.
inline Eigen::MatrixXi multigrain_mask(int rows, int cols,
                                       const std::vector<int>& classes,
                                       int bg_class = 1) {
  require(rows >= 4 && cols >= 4, "multigrain: image too small");
  require(!classes.empty(), "multigrain: no classes");
  Eigen::MatrixXi mask = Eigen::MatrixXi::Constant(rows, cols, bg_class);
  const int k = static_cast<int>(classes.size());
  const double cell = static_cast<double>(cols) / k;
  for (int i = 0; i < k; ++i) {
    const double cc = cell * (i + 0.5);
    const double cr = rows / 2.0;
    const double a = rows * 0.30;
    const double b = cell * 0.35;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double dr = (r - cr) / a;
        const double dc = (c - cc) / b;
        if (dr * dr + dc * dc <= 1.0) mask(r, c) = classes[static_cast<std::size_t>(i)];
      }
  }
  return mask;
}

inline nlohmann::json class_params_to_json(const std::vector<ClassParams>& params) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& cp : params) {
    nlohmann::json jc;
    jc["mu"] = std::vector<double>(cp.mu.data(), cp.mu.data() + cp.mu.size());
    std::vector<double> lam;
    for (Eigen::Index r = 0; r < cp.lambda.rows(); ++r)
      for (Eigen::Index c = 0; c < cp.lambda.cols(); ++c)
        lam.push_back(cp.lambda(r, c));
    jc["q"] = cp.lambda.cols();
    jc["lambda"] = lam;
    jc["psi"] = std::vector<double>(cp.psi.data(), cp.psi.data() + cp.psi.size());
    j.push_back(std::move(jc));
  }
  return j;
}

inline std::vector<ClassParams> class_params_from_json(const nlohmann::json& j) {
  std::vector<ClassParams> out;
  for (const auto& jc : j) {
    ClassParams cp;
    const auto mu = jc.at("mu").get<std::vector<double>>();
    const auto lam = jc.at("lambda").get<std::vector<double>>();
    const auto psi = jc.at("psi").get<std::vector<double>>();
    const int q = jc.at("q").get<int>();
    const int p = static_cast<int>(mu.size());
    require(q >= 1 && lam.size() == static_cast<std::size_t>(p) * q &&
                psi.size() == mu.size(),
            "class params json: size mismatch");
    cp.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), p);
    cp.lambda.resize(p, q);
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < q; ++c)
        cp.lambda(r, c) = lam[static_cast<std::size_t>(r) * q + c];
    cp.psi = Eigen::Map<const Eigen::VectorXd>(psi.data(), p);
    out.push_back(std::move(cp));
  }
  return out;
}

}  // namespace specmix
