#include "prnn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "config_json.hpp"
#include "prnn/errors.hpp"
#include "prnn/model.hpp"
#include "prnn/tensor_io.hpp"

namespace prnn {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> keys,
                         const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      throw ValidationError("unknown " + where + " key '" + key + "'");
    }
  }
}

}  // namespace

json hyperparams_to_json(const Hyperparams& h) {
  return json{{"lambda", h.lambda},
              {"alpha", h.alpha},
              {"beta", h.beta},
              {"lr", h.lr},
              {"batch", h.batch},
              {"em_max_iters", h.em_max_iters},
              {"em_tol", h.em_tol},
              {"em_epochs_per_iter", h.em_epochs_per_iter},
              {"bridging_smoothing", h.bridging_smoothing},
              {"max_epochs", h.max_epochs},
              {"patience", h.patience}};
}

Hyperparams hyperparams_from_json(const json& j, const Hyperparams& base) {
  reject_unknown_keys(j,
                      {"lambda", "alpha", "beta", "lr", "batch", "em_max_iters", "em_tol",
                       "em_epochs_per_iter", "bridging_smoothing", "max_epochs", "patience"},
                      "hyperparams");
  Hyperparams h = base;
  h.lambda = j.value("lambda", h.lambda);
  h.alpha = j.value("alpha", h.alpha);
  h.beta = j.value("beta", h.beta);
  h.lr = j.value("lr", h.lr);
  h.batch = j.value("batch", h.batch);
  h.em_max_iters = j.value("em_max_iters", h.em_max_iters);
  h.em_tol = j.value("em_tol", h.em_tol);
  h.em_epochs_per_iter = j.value("em_epochs_per_iter", h.em_epochs_per_iter);
  h.bridging_smoothing = j.value("bridging_smoothing", h.bridging_smoothing);
  h.max_epochs = j.value("max_epochs", h.max_epochs);
  h.patience = j.value("patience", h.patience);
  return h;
}

namespace harness {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Fixed formatting so CSV bytes never depend on locale or stream state.
std::string num(double v) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::setprecision(17) << v;
  return ss.str();
}

std::vector<double> stage_series(const std::vector<EpochRecord>& curve,
                                 std::initializer_list<const char*> stages) {
  std::vector<double> out;
  for (const auto& r : curve) {
    for (const char* s : stages) {
      if (r.stage == s) out.push_back(r.loss);
    }
  }
  return out;
}

json metrics_object(const Metrics& m) {
  return json{{"mean_accuracy", m.mean_accuracy},
              {"per_class_accuracy", m.per_class_accuracy},
              {"confusion", m.confusion}};
}

fs::path require_manifest(const ExperimentConfig& config) {
  if (config.manifest.empty()) throw ValidationError("no manifest given (config 'manifest' or --manifest)");
  if (!fs::is_regular_file(config.manifest)) {
    throw ValidationError("manifest not found: " + config.manifest.string());
  }
  return config.manifest;
}

/// Every backbone tensor a depth-only forward pass reads must be present with
/// the shape the configuration implies.
void check_checkpoint_layout(const ParameterStore& params, const ModelConfig& config) {
  ParameterStore expected;
  model_params::init_backbone(expected, config, 0, false);
  for (const auto& name : expected.names()) {
    if (!params.contains(name)) {
      throw DimensionError("checkpoint is missing parameter '" + name + "'");
    }
    const auto& want = expected.get(name).shape();
    const auto& got = params.get(name).shape();
    if (want != got) {
      throw DimensionError("parameter '" + name + "' has shape " + shape_to_string(got) +
                           ", configuration expects " + shape_to_string(want));
    }
  }
}

struct Evaluation {
  Metrics metrics;
  // Per evaluated sample: label and the per-frame class distributions.
  std::vector<std::size_t> labels;
  std::vector<std::vector<Tensor>> traces;
};

Evaluation evaluate(const ParameterStore& params, const ModelConfig& config,
                    const std::vector<Sample>& samples) {
  Evaluation ev;
  std::vector<std::size_t> predicted;
  for (const auto& s : samples) {
    const auto dists = predict(params, config, s.frames);
    predicted.push_back(argmax(dists.back().probs));
    ev.labels.push_back(s.label);
    std::vector<Tensor> per_frame;
    per_frame.reserve(dists.size());
    for (const auto& d : dists) per_frame.push_back(d.probs);
    ev.traces.push_back(std::move(per_frame));
  }
  ev.metrics = compute_metrics(ev.labels, predicted, config.num_classes);
  return ev;
}

std::string traces_csv(const Evaluation& ev, const std::vector<Sample>& samples) {
  std::ostringstream os;
  const std::size_t k = ev.metrics.num_classes;
  os << "sequence,label,frame";
  for (std::size_t c = 0; c < k; ++c) os << ",p" << c;
  os << "\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t t = 0; t < ev.traces[i].size(); ++t) {
      os << samples[i].id << "," << samples[i].label << "," << t;
      for (std::size_t c = 0; c < k; ++c) os << "," << num(ev.traces[i][t][c]);
      os << "\n";
    }
  }
  return os.str();
}

std::string training_log_json(const TrainingRun& run) {
  json curve = json::array();
  for (const auto& r : run.curve) {
    curve.push_back({{"stage", r.stage},
                     {"iteration", r.iteration},
                     {"loss", r.loss},
                     {"val_accuracy", r.val_accuracy},
                     {"val_loss", r.val_loss}});
  }
  json em = json::array();
  for (const auto& e : run.em) {
    em.push_back({{"iteration", e.iteration},
                  {"Q_before_bridging", e.q_before_bridging},
                  {"Q_after_bridging", e.q_after_bridging},
                  {"Q", e.q_end},
                  {"refining_loss", e.refining_loss},
                  {"max_posterior_error", e.max_posterior_error},
                  {"min_posterior_entry", e.min_posterior_entry},
                  {"max_bridging_row_error", e.max_bridging_row_error}});
  }
  return json{{"variant", variant_name(run.variant)}, {"curve", curve}, {"em", em}}.dump(2) +
         "\n";
}

std::vector<std::size_t> trace_selection(const std::vector<Sample>& samples,
                                         std::size_t num_classes, std::size_t per_class) {
  std::vector<std::size_t> picked;
  std::vector<std::size_t> taken(num_classes, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto label = samples[i].label;
    if (label < num_classes && taken[label] < per_class) {
      ++taken[label];
      picked.push_back(i);
    }
  }
  return picked;
}

}  // namespace

void ExperimentConfig::validate() const {
  dataset.validate();
  hyper.validate();
  const auto model = ModelConfig::preset(preset, dataset.num_classes);
  model.validate();
  if (model.encoder.input_size != dataset.frame_size) {
    throw ValidationError("preset '" + preset + "' expects " +
                          std::to_string(model.encoder.input_size) + "px frames, dataset has " +
                          std::to_string(dataset.frame_size));
  }
  if (seeds.empty()) throw ValidationError("seeds must not be empty");
  if (out.empty()) throw ValidationError("output directory must not be empty");
}

std::string ExperimentConfig::to_json() const {
  json seeds_json = json::array();
  for (auto s : seeds) seeds_json.push_back(s);
  const json j{{"dataset", synth::dataset_config_to_json(dataset)},
               {"preset", preset},
               {"hyperparams", hyperparams_to_json(hyper)},
               {"variant", variant_name(variant)},
               {"seed", seed},
               {"seeds", seeds_json},
               {"out", out.generic_string()},
               {"manifest", manifest.generic_string()},
               {"traces_per_class", traces_per_class}};
  return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown_keys(j,
                      {"dataset", "preset", "hyperparams", "variant", "seed", "seeds", "out",
                       "manifest", "traces_per_class"},
                      "config");
  ExperimentConfig c;
  try {
    if (j.contains("dataset")) c.dataset = synth::dataset_config_from_json(j.at("dataset"));
    if (j.contains("hyperparams")) c.hyper = hyperparams_from_json(j.at("hyperparams"), c.hyper);
    c.preset = j.value("preset", c.preset);
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.seeds = j.value("seeds", c.seeds);
    c.out = j.value("out", c.out.string());
    c.manifest = j.value("manifest", c.manifest.string());
    c.traces_per_class = j.value("traces_per_class", c.traces_per_class);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ValidationError("config not found: " + path.string());
  return from_json(read_text(path));
}

void write_checkpoint_info(const CheckpointInfo& info, const fs::path& dir) {
  const json j{{"preset", info.preset},
               {"num_classes", info.num_classes},
               {"variant", info.variant},
               {"stage", info.stage},
               {"seed", info.seed}};
  write_text(dir / "model.json", j.dump(2) + "\n");
}

CheckpointInfo read_checkpoint_info(const fs::path& dir) {
  const auto path = dir / "model.json";
  if (!fs::is_regular_file(path)) throw ValidationError("not a checkpoint: " + dir.string());
  try {
    const auto j = json::parse(read_text(path));
    CheckpointInfo info;
    info.preset = j.at("preset").get<std::string>();
    info.num_classes = j.at("num_classes").get<std::size_t>();
    info.variant = j.at("variant").get<std::string>();
    info.stage = j.at("stage").get<std::string>();
    info.seed = j.at("seed").get<std::uint64_t>();
    return info;
  } catch (const json::exception& e) {
    throw ValidationError("bad model.json in " + dir.string() + ": " + e.what());
  }
}

std::string metrics_json(const Metrics& m, const std::string& variant, std::uint64_t seed,
                         const std::vector<EpochRecord>& curve) {
  json j = metrics_object(m);
  j["variant"] = variant;
  j["seed"] = seed;
  j["stage_losses"] = json{{"pretrain", stage_series(curve, {"pretrain"})},
                           {"learn", stage_series(curve, {"learn", "vanilla"})},
                           {"refine_Q", stage_series(curve, {"refine"})}};
  return j.dump(2) + "\n";
}

std::string confusion_csv(const Metrics& m) {
  std::ostringstream os;
  os << "true\\pred";
  for (std::size_t c = 0; c < m.num_classes; ++c) os << "," << c;
  os << "\n";
  for (std::size_t r = 0; r < m.num_classes; ++r) {
    os << r;
    for (std::size_t c = 0; c < m.num_classes; ++c) os << "," << m.confusion[r][c];
    os << "\n";
  }
  return os.str();
}

std::string curves_csv(const std::vector<EpochRecord>& curve) {
  std::ostringstream os;
  os << "stage,iteration,loss_or_Q,val_accuracy\n";
  for (const auto& r : curve) {
    os << r.stage << "," << r.iteration << "," << num(r.loss) << "," << num(r.val_accuracy)
       << "\n";
  }
  return os.str();
}

fs::path cmd_gen_data(const ExperimentConfig& config) {
  config.validate();
  synth::build_dataset(config.dataset, config.out);
  return config.out / synth::kManifestFile;
}

TrainOutcome cmd_train(const ExperimentConfig& config) {
  config.validate();
  const auto manifest_path = require_manifest(config);
  const auto data = synth::load_training_dataset(manifest_path);
  if (data.num_classes != config.dataset.num_classes) {
    throw ValidationError("manifest has K=" + std::to_string(data.num_classes) +
                          " but config has K=" + std::to_string(config.dataset.num_classes));
  }
  const auto model = ModelConfig::preset(config.preset, data.num_classes);

  TrainOutcome outcome;
  outcome.run = train_variant(data, model, config.hyper, config.variant, config.seed);
  const auto& run = outcome.run;
  const auto name = variant_name(run.variant);

  const auto ckpt_root = config.out / "checkpoints";
  fs::remove_all(ckpt_root);
  for (const auto& ck : run.checkpoints) {
    const auto dir = ckpt_root / ck.name;
    ck.params.save(dir);
    write_checkpoint_info({config.preset, data.num_classes, name, ck.name, config.seed}, dir);
  }
  outcome.final_checkpoint = ckpt_root / run.checkpoints.back().name;
  if (run.bridging) save_tensor(ckpt_root / "bridging_matrix.ptns", run.bridging->tensor());
  write_text(ckpt_root / "training_log.json", training_log_json(run));

  const auto ev = evaluate(run.final_params(), model, data.test);
  outcome.test_metrics = ev.metrics;
  write_text(config.out / "metrics.json", metrics_json(ev.metrics, name, config.seed, run.curve));
  write_text(config.out / "curves.csv", curves_csv(run.curve));
  write_text(config.out / "confusion.csv", confusion_csv(ev.metrics));
  write_text(config.out / "config.json", config.to_json());
  return outcome;
}

Metrics cmd_eval(const EvalRequest& request) {
  const auto info = read_checkpoint_info(request.checkpoint);
  if (!fs::is_regular_file(request.manifest)) {
    throw ValidationError("manifest not found: " + request.manifest.string());
  }
  const auto manifest = synth::read_manifest(request.manifest);
  if (manifest.config.num_classes != info.num_classes) {
    throw DimensionError("checkpoint has K=" + std::to_string(info.num_classes) +
                         " but manifest has K=" + std::to_string(manifest.config.num_classes));
  }
  const auto model = ModelConfig::preset(info.preset, info.num_classes);
  if (model.encoder.input_size != manifest.config.frame_size) {
    throw DimensionError("checkpoint expects " + std::to_string(model.encoder.input_size) +
                         "px frames, manifest has " +
                         std::to_string(manifest.config.frame_size));
  }
  const auto params = ParameterStore::load(request.checkpoint);
  check_checkpoint_layout(params, model);

  const auto samples =
      synth::load_split(manifest, request.manifest.parent_path(), request.split, false);
  const auto ev = evaluate(params, model, samples);
  if (!request.out.empty()) {
    write_text(request.out / "metrics.json", metrics_json(ev.metrics, info.variant, info.seed, {}));
    write_text(request.out / "confusion.csv", confusion_csv(ev.metrics));
    if (request.traces) write_text(request.out / "traces.csv", traces_csv(ev, samples));
  }
  return ev.metrics;
}

AblationResult cmd_ablate(const ExperimentConfig& config) {
  config.validate();
  const auto manifest_path = require_manifest(config);
  const auto start = std::chrono::steady_clock::now();
  const auto manifest = synth::read_manifest(manifest_path);
  const auto test = synth::load_split(manifest, manifest_path.parent_path(), "test", false);
  const auto model = ModelConfig::preset(config.preset, manifest.config.num_classes);
  const auto picked = trace_selection(test, model.num_classes, config.traces_per_class);

  AblationResult result;
  std::ostringstream traces;
  traces << "# per-frame confidence of the true class on selected test sequences\n"
         << "# columns: frame p_true predicted_class\n";
  std::size_t block = 0;

  for (const auto variant : ablation_order()) {
    for (const auto seed : config.seeds) {
      ExperimentConfig run_cfg = config;
      run_cfg.variant = variant;
      run_cfg.seed = seed;
      run_cfg.out = config.out / "runs" / (variant_name(variant) + "_seed" + std::to_string(seed));
      const auto outcome = cmd_train(run_cfg);
      result.rows.push_back({variant, seed, outcome.test_metrics.mean_accuracy});

      if (seed != config.seeds.front()) continue;
      const auto& params = outcome.run.final_params();
      for (const auto i : picked) {
        const auto dists = predict(params, model, test[i].frames);
        traces << (block++ == 0 ? "" : "\n\n") << "# " << variant_name(variant) << " seed "
               << seed << " " << test[i].id << " label " << test[i].label << "\n";
        for (std::size_t t = 0; t < dists.size(); ++t) {
          traces << t << " " << num(dists[t].probs[test[i].label]) << " "
                 << argmax(dists[t].probs) << "\n";
        }
      }
    }
  }

  std::ostringstream rows;
  rows << "variant,seed,mean_accuracy\n";
  for (const auto& r : result.rows) {
    rows << variant_name(r.variant) << "," << r.seed << "," << num(r.accuracy) << "\n";
  }
  std::ostringstream summary;
  summary << "variant,runs,mean_accuracy,stddev\n";
  for (const auto variant : ablation_order()) {
    std::vector<double> acc;
    for (const auto& r : result.rows) {
      if (r.variant == variant) acc.push_back(r.accuracy);
    }
    double mean = 0.0;
    for (double a : acc) mean += a;
    mean /= static_cast<double>(acc.size());
    double var = 0.0;
    for (double a : acc) var += (a - mean) * (a - mean);
    const double sd = acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0;
    result.summary.push_back({variant, mean, sd, acc.size()});
    summary << variant_name(variant) << "," << acc.size() << "," << num(mean) << "," << num(sd)
            << "\n";
  }
  write_text(config.out / "ablation.csv", rows.str());
  write_text(config.out / "ablation_summary.csv", summary.str());
  write_text(config.out / "traces.dat", traces.str());
  write_text(config.out / "config.json", config.to_json());
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DimensionError*>(&e)) return 3;
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  if (dynamic_cast<const DegeneratePosteriorError*>(&e)) return 4;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const IoError*>(&e) ||
      dynamic_cast<const json::exception*>(&e)) {
    return 2;
  }
  return 1;
}

}  // namespace harness
}  // namespace prnn
