// specmix command line: simulate / fit / classify / evaluate.
//
// Every numeric flag mirrors a config-file key of the same name (JSON via
// --config). Explicit flags win conflicts unless --force-flags is given, in
// which case the config file wins. Each command writes the effective
// configuration next to its outputs.
//
// Exit codes: 0 success, 2 usage or validation, 3 numerical failure,
// 4 file I/O.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "specmix/specmix.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace specmix;

namespace {

struct ConfigBinding {
  std::string key;
  CLI::Option* option = nullptr;
  std::function<void(const json&)> apply;
  std::function<json()> dump;
};

class ConfigMirror {
 public:
  template <class T>
  void bind(CLI::Option* option, const std::string& key, T* value) {
    bindings_.push_back({key, option,
                         [value](const json& j) { *value = j.get<T>(); },
                         [value]() { return json(*value); }});
  }

  void merge_config(const std::string& path, bool force_flags) {
    const json conf = detail::parse_json_file(path);
    require(conf.is_object(), "config file must hold a JSON object");
    for (const auto& [key, value] : conf.items()) {
      bool known = false;
      for (auto& b : bindings_) {
        if (b.key != key) continue;
        known = true;
        if (force_flags || b.option == nullptr || b.option->count() == 0)
          b.apply(value);
      }
      require(known, "config file: unknown key '" + key + "'");
    }
  }

  json effective() const {
    json out;
    for (const auto& b : bindings_) out[b.key] = b.dump();
    return out;
  }

 private:
  std::vector<ConfigBinding> bindings_;
};

void write_effective_config(const std::string& command, const ConfigMirror& mirror,
                            const std::string& out_dir) {
  json echo = mirror.effective();
  echo["command"] = command;
  detail::write_json_file((fs::path(out_dir) / "config.json").string(), echo);
}

std::vector<ImageTensor> load_dataset_images(const std::string& dataset_path) {
  const json ds = detail::parse_json_file(dataset_path);
  std::vector<ImageTensor> images;
  for (const auto& rel : ds.at("images")) {
    const std::string header =
        detail::sibling_path(dataset_path, rel.get<std::string>());
    images.push_back(load_image(header, ImageFormat::RawF64));
  }
  require(!images.empty(), "dataset lists no images");
  return images;
}

void write_label_rasters(const PixelTable& table, const std::vector<int>& labels,
                         const std::string& dir) {
  fs::create_directories(dir);
  for (const auto& g : table.geometry) {
    Raster<std::uint16_t> raster{g.id, g.rows, g.cols, {}};
    raster.values.reserve(static_cast<std::size_t>(g.rows) * g.cols);
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(g.rows) * g.cols; ++i)
      raster.values.push_back(
          static_cast<std::uint16_t>(labels[static_cast<std::size_t>(g.offset + i)]));
    save_raster(raster, (fs::path(dir) / (g.id + ".json")).string());
  }
}

void write_float_rasters(const PixelTable& table, const std::vector<double>& values,
                         const std::string& dir) {
  fs::create_directories(dir);
  for (const auto& g : table.geometry) {
    Raster<float> raster{g.id, g.rows, g.cols, {}};
    raster.values.reserve(static_cast<std::size_t>(g.rows) * g.cols);
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(g.rows) * g.cols; ++i)
      raster.values.push_back(
          static_cast<float>(values[static_cast<std::size_t>(g.offset + i)]));
    save_raster(raster, (fs::path(dir) / (g.id + ".json")).string());
  }
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario = "low";
  double scale = 0.5;
  std::uint64_t seed = 0;
  int p = 101;
  int gen_q = 0;  // 0 = scenario default
  std::string preset = "large";
  std::string params_path;
  std::string out;
};

void run_simulate(const SimulateArgs& args) {
  const Scenario scenario = scenario_from_name(args.scenario);
  require(args.preset == "large" || args.preset == "small",
          "preset must be 'large' or 'small'");
  ScenarioSpec spec = make_scenario_spec(scenario, args.scale, args.seed, args.p);
  if (args.gen_q > 0) spec.q = args.gen_q;

  GeneratedData data;
  if (scenario == Scenario::SyntheticCereal) {
    spec.layout = cereal_layout(args.scale, args.preset == "large");
    std::vector<ClassParams> params;
    if (!args.params_path.empty())
      params = class_params_from_json(detail::parse_json_file(args.params_path));
    else
      params = gen_component_params(4, spec.p, spec.q, spec.a_values,
                                    spec.mean_variance, mix_seed(spec.seed, 0),
                                    spec.psi_floor);
    data = gen_synthetic_cereal(params, spec.layout, spec.seed);
  } else {
    data = gen_scenario(spec);
  }

  fs::create_directories(args.out);
  const fs::path out(args.out);
  fs::create_directories(out / "images");
  json dataset;
  dataset["scenario"] = args.scenario;
  dataset["p"] = data.table.p();
  dataset["n"] = data.table.n();
  dataset["images"] = json::array();
  for (const auto& img : data.images) {
    const std::string rel = "images/" + img.id + ".json";
    save_image(img, (out / rel).string());
    dataset["images"].push_back(rel);
  }
  dataset["labels"] = "labels.json";
  dataset["constraints"] = "constraints.json";
  detail::write_json_file((out / "dataset.json").string(), dataset);
  save_labels((out / "labels.json").string(), data.labels);

  // constraint document in the public format
  json doc;
  doc["groups"] = json::array();
  for (const auto& block : data.constraints.blocks) {
    // recover rectangles is unnecessary; emit the index-level document that
    // fit consumes equally well
    json jb{{"name", block.id}, {"indices", block.indices}};
    doc["groups"].push_back(jb);
  }
  json rel = json::array();
  for (std::size_t a = 0; a < data.constraints.n_blocks(); ++a)
    for (std::size_t b = a + 1; b < data.constraints.n_blocks(); ++b)
      if (data.constraints.relation[a][b])
        rel.push_back({data.constraints.blocks[a].id, data.constraints.blocks[b].id});
  doc["negative_pairs"] = rel;
  detail::write_json_file((out / "constraints.json").string(), doc);

  write_label_rasters(data.table, data.labels, (out / "labels").string());
  detail::write_json_file((out / "params.json").string(),
                          class_params_to_json(data.params));
  std::cerr << "simulate: n=" << data.table.n() << " p=" << data.table.p()
            << " constrained=" << data.constraints.constrained_pixel_count()
            << "\n";
}

// Constraint documents come in two shapes: rectangle groups (hand-written)
// and index groups (emitted by simulate). Both share the negative_pairs key.
ConstraintSet load_constraint_file(const std::string& path, const PixelTable& table) {
  const json doc = detail::parse_json_file(path);
  bool rectangles = false;
  if (doc.contains("groups"))
    for (const auto& jg : doc.at("groups"))
      if (jg.contains("regions")) rectangles = true;
  if (rectangles) return build_constraints(doc, table);

  ConstraintSet cons;
  std::map<std::string, std::size_t> names;
  for (const auto& jg : doc.at("groups")) {
    Block b;
    b.id = jg.at("name").get<std::string>();
    b.indices = jg.at("indices").get<std::vector<std::int64_t>>();
    names.emplace(b.id, cons.blocks.size());
    cons.blocks.push_back(std::move(b));
  }
  cons.relation.assign(cons.blocks.size(),
                       std::vector<bool>(cons.blocks.size(), false));
  if (doc.contains("negative_pairs")) {
    for (const auto& jp : doc.at("negative_pairs")) {
      const auto a = names.find(jp[0].get<std::string>());
      const auto b = names.find(jp[1].get<std::string>());
      require(a != names.end() && b != names.end(),
              "constraints: negative pair names unknown group");
      cons.relation[a->second][b->second] = true;
      cons.relation[b->second][a->second] = true;
    }
  } else {
    for (std::size_t a = 0; a < cons.blocks.size(); ++a)
      for (std::size_t b = 0; b < cons.blocks.size(); ++b)
        if (a != b) cons.relation[a][b] = true;
  }
  cons.validate(table.n());
  return cons;
}

struct FitArgs {
  std::string data;
  std::string constraints;
  int g = 4;
  int q = 2;
  int m = 25;
  int d = 20;
  std::uint64_t seed = 0;
  double rel_tol = 1e-6;
  int max_iterations = 1000;
  double psi_floor = kDefaultPsiFloor;
  int parallelism = 0;
  bool single_precision = false;
  bool keep_similarity = false;
  bool standardize = false;
  std::string out;
};

void run_fit(const FitArgs& args) {
  require(!args.data.empty(), "fit: --data is required");
  require(!args.out.empty(), "fit: --out is required");
  PixelTable table = flatten_images(load_dataset_images(args.data));
  ConstraintSet cons;
  if (!args.constraints.empty()) cons = load_constraint_file(args.constraints, table);

  std::vector<double> shift, scale;
  if (args.standardize) {
    for (int c = 0; c < table.p(); ++c) {
      const double mean = table.data.col(c).mean();
      const double var =
          (table.data.col(c).array() - mean).square().sum() /
          static_cast<double>(table.n() - 1);
      require(var > 0.0, "standardize: column " + std::to_string(c) + " is constant");
      shift.push_back(mean);
      scale.push_back(std::sqrt(var));
      table.data.col(c) = (table.data.col(c).array() - mean) / std::sqrt(var);
    }
  }

  ConsensusOptions opts;
  opts.m = args.m;
  opts.d = args.d;
  opts.fit.seed = args.seed;
  opts.fit.rel_tol = args.rel_tol;
  opts.fit.max_iterations = args.max_iterations;
  opts.fit.psi_floor = args.psi_floor;
  opts.parallelism = args.parallelism;
  opts.single_precision = args.single_precision;
  opts.keep_similarity = args.keep_similarity;

  const auto started = std::chrono::steady_clock::now();
  ConsensusResult result =
      consensus_cluster(table.data, cons, args.g, args.q, opts);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  if (!result.plan.full_coverage)
    std::cerr << "fit: warning: some variables appear in no subset\n";

  result.ensemble.shift = std::move(shift);
  result.ensemble.scale = std::move(scale);

  fs::create_directories(args.out);
  const fs::path out(args.out);
  save_labels((out / "labels.json").string(), result.labels);
  write_label_rasters(table, result.labels, (out / "labels").string());
  write_float_rasters(table, result.uncertainty, (out / "uncertainty").string());
  save_ensemble(result.ensemble, (out / "ensemble").string());

  json summary;
  summary["g"] = args.g;
  summary["q"] = args.q;
  summary["m"] = args.m;
  summary["d"] = args.d;
  summary["seed"] = args.seed;
  summary["n"] = table.n();
  summary["p"] = table.p();
  summary["constrained_pixels"] = cons.constrained_pixel_count();
  summary["achieved_clusters"] = result.achieved_clusters;
  summary["full_coverage"] = result.plan.full_coverage;
  summary["subset_converged"] = json::array();
  summary["subset_iterations"] = json::array();
  for (const auto& fit : result.ensemble.fits) {
    summary["subset_converged"].push_back(fit.converged);
    summary["subset_iterations"].push_back(fit.iterations);
  }
  detail::write_json_file((out / "summary.json").string(), summary);

  if (result.similarity.has_value()) {
    detail::write_raw_payload((out / "similarity.raw").string(),
                              result.similarity->values);
    detail::write_json_file(
        (out / "similarity.json").string(),
        json{{"n", result.similarity->n},
             {"layout", "upper-triangle-row-major-with-diagonal"},
             {"dtype", "f64"},
             {"payload", "similarity.raw"}});
  }
  std::cerr << "fit: " << seconds << " s, achieved clusters "
            << result.achieved_clusters << "\n";
}

struct ClassifyArgs {
  std::string ensemble;
  std::string data;
  std::string out;
};

void run_classify(const ClassifyArgs& args) {
  require(!args.ensemble.empty(), "classify: --ensemble is required");
  require(!args.data.empty(), "classify: --data is required");
  require(!args.out.empty(), "classify: --out is required");
  const EnsembleResult ensemble = load_ensemble(args.ensemble);
  const PixelTable table = flatten_images(load_dataset_images(args.data));
  const ClassificationResult result = classify_pixels(table, ensemble);

  fs::create_directories(args.out);
  const fs::path out(args.out);
  save_labels((out / "labels.json").string(), result.labels);
  write_label_rasters(table, result.labels, (out / "labels").string());
  write_float_rasters(table, result.uncertainty, (out / "uncertainty").string());
  json summary;
  summary["n"] = table.n();
  summary["g"] = ensemble.g;
  summary["m"] = ensemble.fits.size();
  summary["alignment_used_all_pixels"] = result.alignment_used_all_pixels;
  summary["alignment_complete"] = result.alignment_complete;
  detail::write_json_file((out / "summary.json").string(), summary);
}

struct EvaluateArgs {
  std::string labels_a;
  std::string labels_b;
  std::string out;
};

void run_evaluate(const EvaluateArgs& args) {
  require(!args.labels_a.empty() && !args.labels_b.empty(),
          "evaluate: --labels-a and --labels-b are required");
  const auto started = std::chrono::steady_clock::now();
  const std::vector<int> a = load_labels(args.labels_a);
  const std::vector<int> b = load_labels(args.labels_b);
  const double ari = adjusted_rand_index(a, b);

  std::vector<int> classes_a(a), classes_b(b);
  std::sort(classes_a.begin(), classes_a.end());
  classes_a.erase(std::unique(classes_a.begin(), classes_a.end()), classes_a.end());
  std::sort(classes_b.begin(), classes_b.end());
  classes_b.erase(std::unique(classes_b.begin(), classes_b.end()), classes_b.end());
  std::vector<std::vector<std::int64_t>> confusion(
      classes_a.size(), std::vector<std::int64_t>(classes_b.size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto ra = std::lower_bound(classes_a.begin(), classes_a.end(), a[i]) -
                    classes_a.begin();
    const auto cb = std::lower_bound(classes_b.begin(), classes_b.end(), b[i]) -
                    classes_b.begin();
    confusion[static_cast<std::size_t>(ra)][static_cast<std::size_t>(cb)]++;
  }

  json report;
  report["n"] = a.size();
  report["ari"] = ari;
  report["classes_a"] = classes_a;
  report["classes_b"] = classes_b;
  report["confusion"] = confusion;
  if (!args.out.empty()) {
    fs::create_directories(args.out);
    detail::write_json_file((fs::path(args.out) / "report.json").string(), report);
  }
  std::cout << report.dump(2) << "\n";
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  std::cerr << "evaluate: " << seconds << " s\n";  // timing stays off disk
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consensus-constrained mixture labelling of spectral images"};
  app.require_subcommand(1);

  std::string config_path;
  bool force_flags = false;
  app.add_option("--config", config_path, "JSON config file mirroring the flags");
  app.add_flag("--force-flags", force_flags,
               "let the config file win over explicit flags");

  SimulateArgs sim;
  ConfigMirror sim_mirror;
  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  sim_mirror.bind(simulate->add_option("--scenario", sim.scenario,
                                       "low | mild | high | synthetic-cereal"),
                  "scenario", &sim.scenario);
  sim_mirror.bind(simulate->add_option("--scale", sim.scale,
                                       "linear image scale, 1.0 = full size"),
                  "scale", &sim.scale);
  sim_mirror.bind(simulate->add_option("--seed", sim.seed, "generation seed"),
                  "seed", &sim.seed);
  sim_mirror.bind(simulate->add_option("--p", sim.p, "spectrum length"), "p", &sim.p);
  sim_mirror.bind(simulate->add_option("--gen-q", sim.gen_q,
                                       "latent factors used when generating"),
                  "gen_q", &sim.gen_q);
  sim_mirror.bind(simulate->add_option("--preset", sim.preset,
                                       "synthetic-cereal constraint preset: large | small"),
                  "preset", &sim.preset);
  sim_mirror.bind(simulate->add_option("--params", sim.params_path,
                                       "class factor-model parameters (JSON)"),
                  "params", &sim.params_path);
  sim_mirror.bind(simulate->add_option("--out", sim.out, "output directory"),
                  "out", &sim.out);

  FitArgs fit;
  ConfigMirror fit_mirror;
  CLI::App* fit_cmd = app.add_subcommand("fit", "consensus-constrained clustering");
  fit_mirror.bind(fit_cmd->add_option("--data", fit.data, "dataset.json"), "data",
                  &fit.data);
  fit_mirror.bind(fit_cmd->add_option("--constraints", fit.constraints,
                                      "constraint document (omit to fit unconstrained)"),
                  "constraints", &fit.constraints);
  fit_mirror.bind(fit_cmd->add_option("--G", fit.g, "number of clusters"), "G", &fit.g);
  fit_mirror.bind(fit_cmd->add_option("--q", fit.q, "latent factors"), "q", &fit.q);
  fit_mirror.bind(fit_cmd->add_option("--M", fit.m, "variable subsets"), "M", &fit.m);
  fit_mirror.bind(fit_cmd->add_option("--d", fit.d, "variables per subset"), "d",
                  &fit.d);
  fit_mirror.bind(fit_cmd->add_option("--seed", fit.seed, "seed"), "seed", &fit.seed);
  fit_mirror.bind(fit_cmd->add_option("--rel-tol", fit.rel_tol,
                                      "relative log-likelihood tolerance"),
                  "rel_tol", &fit.rel_tol);
  fit_mirror.bind(fit_cmd->add_option("--max-iterations", fit.max_iterations,
                                      "iteration cap per fit"),
                  "max_iterations", &fit.max_iterations);
  fit_mirror.bind(fit_cmd->add_option("--psi-floor", fit.psi_floor,
                                      "specific-variance floor"),
                  "psi_floor", &fit.psi_floor);
  fit_mirror.bind(fit_cmd->add_option("--parallelism", fit.parallelism,
                                      "concurrent subset fits (0 = cores)"),
                  "parallelism", &fit.parallelism);
  fit_mirror.bind(fit_cmd->add_flag("--single-precision", fit.single_precision,
                                    "accumulate similarity in single precision"),
                  "single_precision", &fit.single_precision);
  fit_mirror.bind(fit_cmd->add_flag("--keep-similarity", fit.keep_similarity,
                                    "write the averaged similarity matrix"),
                  "keep_similarity", &fit.keep_similarity);
  fit_mirror.bind(fit_cmd->add_flag("--standardize", fit.standardize,
                                    "z-score each variable before fitting"),
                  "standardize", &fit.standardize);
  fit_mirror.bind(fit_cmd->add_option("--out", fit.out, "output directory"), "out",
                  &fit.out);

  ClassifyArgs cls;
  ConfigMirror cls_mirror;
  CLI::App* classify_cmd =
      app.add_subcommand("classify", "label new images with a fitted ensemble");
  cls_mirror.bind(classify_cmd->add_option("--ensemble", cls.ensemble,
                                           "ensemble directory from fit"),
                  "ensemble", &cls.ensemble);
  cls_mirror.bind(classify_cmd->add_option("--data", cls.data, "dataset.json"),
                  "data", &cls.data);
  cls_mirror.bind(classify_cmd->add_option("--out", cls.out, "output directory"),
                  "out", &cls.out);

  EvaluateArgs eval;
  ConfigMirror eval_mirror;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "compare two label files");
  eval_mirror.bind(eval_cmd->add_option("--labels-a", eval.labels_a, "label file"),
                   "labels_a", &eval.labels_a);
  eval_mirror.bind(eval_cmd->add_option("--labels-b", eval.labels_b, "label file"),
                   "labels_b", &eval.labels_b);
  eval_mirror.bind(eval_cmd->add_option("--out", eval.out,
                                        "directory for report.json (optional)"),
                   "out", &eval.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*simulate) {
      if (!config_path.empty()) sim_mirror.merge_config(config_path, force_flags);
      require(!sim.out.empty(), "simulate: --out is required");
      run_simulate(sim);
      fs::create_directories(sim.out);
      write_effective_config("simulate", sim_mirror, sim.out);
    } else if (*fit_cmd) {
      if (!config_path.empty()) fit_mirror.merge_config(config_path, force_flags);
      run_fit(fit);
      write_effective_config("fit", fit_mirror, fit.out);
    } else if (*classify_cmd) {
      if (!config_path.empty()) cls_mirror.merge_config(config_path, force_flags);
      run_classify(cls);
      write_effective_config("classify", cls_mirror, cls.out);
    } else if (*eval_cmd) {
      if (!config_path.empty()) eval_mirror.merge_config(config_path, force_flags);
      run_evaluate(eval);
      if (!eval.out.empty()) write_effective_config("evaluate", eval_mirror, eval.out);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
