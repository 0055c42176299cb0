// End-to-end acceptance run: prints one PASS/FAIL line per criterion.
//
// usage: acceptance [work_dir]
//
// The full component ablation dominates the runtime (tens of minutes on one
// core). Exit status is 0 only when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "prnn/dataset.hpp"
#include "prnn/encoder.hpp"
#include "prnn/experiment.hpp"
#include "prnn/grad_check.hpp"
#include "prnn/heads.hpp"
#include "prnn/latent_pi.hpp"
#include "prnn/model.hpp"
#include "prnn/ops.hpp"
#include "prnn/rng.hpp"

namespace fs = std::filesystem;
using namespace prnn;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int failures = 0;
std::string transcript;  // copy of every verdict line, saved next to the work files

void emit(const std::string& line) {
  std::printf("%s\n", line.c_str());
  std::fflush(stdout);
  transcript += line + "\n";
}

void report(int id, const char* title, const Verdict& v, const std::string& summary) {
  if (!v.pass) ++failures;
  emit("criterion " + std::to_string(id) + (v.pass ? " PASS: " : " FAIL: ") + title + " (" + summary +
       ")" + (v.detail.empty() ? "" : " failures: ") + v.detail);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  CounterRng rng(seed);
  Tensor t(shape);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
  }
  return files;
}

constexpr int kSeeds = 20;
constexpr double kGradTol = 1e-5;

// ---------------------------------------------------------------------------
// 1. gradients

struct OpCase {
  const char* name;
  std::vector<std::pair<std::string, Shape>> inputs;
  std::function<Var(const std::vector<Var>&)> op;
};

std::vector<OpCase> op_cases() {
  using V = std::vector<Var>;
  return {
      {"add", {{"a", {3, 2}}, {"b", {3, 2}}}, [](const V& v) { return ops::add(v[0], v[1]); }},
      {"sub", {{"a", {4}}, {"b", {4}}}, [](const V& v) { return ops::sub(v[0], v[1]); }},
      {"mul", {{"a", {2, 3}}, {"b", {2, 3}}}, [](const V& v) { return ops::mul(v[0], v[1]); }},
      {"scale", {{"a", {5}}}, [](const V& v) { return ops::scale(v[0], 2.3); }},
      {"sum", {{"a", {3, 2}}}, [](const V& v) { return ops::sum(v[0]); }},
      {"square", {{"a", {5}}}, [](const V& v) { return ops::square(v[0]); }},
      {"matmul", {{"a", {2, 3}}, {"b", {3, 4}}}, [](const V& v) { return ops::matmul(v[0], v[1]); }},
      {"matvec", {{"w", {3, 4}}, {"x", {4}}}, [](const V& v) { return ops::matvec(v[0], v[1]); }},
      {"affine", {{"w", {3, 4}}, {"x", {4}}, {"b", {3}}},
       [](const V& v) { return ops::affine(v[0], v[1], v[2]); }},
      {"conv2d_same", {{"x", {5, 4, 2}}, {"k", {3, 3, 2, 3}}, {"b", {3}}},
       [](const V& v) { return ops::conv2d_same(v[0], v[1], v[2]); }},
      {"maxpool2", {{"x", {5, 5, 2}}}, [](const V& v) { return ops::maxpool2(v[0]); }},
      {"relu", {{"a", {8}}}, [](const V& v) { return ops::relu(v[0]); }},
      {"tanh", {{"a", {6}}}, [](const V& v) { return ops::tanh_act(v[0]); }},
      {"sigmoid", {{"a", {6}}}, [](const V& v) { return ops::sigmoid_act(v[0]); }},
      {"softmax", {{"a", {5}}}, [](const V& v) { return ops::softmax(v[0]); }},
      {"cross_entropy", {{"a", {4}}},
       [](const V& v) {
         return ops::cross_entropy(Tensor::vector({0.4, 0.3, 0.2, 0.1}), ops::softmax(v[0]));
       }},
      {"reshape", {{"a", {2, 6}}}, [](const V& v) { return ops::reshape(v[0], {4, 3}); }},
      {"concat", {{"a", {2}}, {"b", {3}}}, [](const V& v) { return ops::concat({v[0], v[1]}); }},
  };
}

ModelConfig tiny_model() {
  ModelConfig m = ModelConfig::preset("desk", 2);
  m.encoder.conv_channels = {2, 2, 2, 2, 2};
  m.encoder.feature_dim = 3;
  m.lstm.input_dim = 3;
  m.lstm.num_layers = 1;
  m.lstm.hidden_units = 2;
  m.lstm.max_unroll = 3;
  return m;
}

/// Both composite losses on a two-frame sequence through the real network.
std::pair<double, double> composite_grad_errors(std::uint64_t seed) {
  const auto cfg = tiny_model();
  ParameterStore p;
  model_params::init_backbone(p, cfg, seed, false);
  model_params::add_regression_head(p, cfg, seed);
  model_params::add_secondary_head(p, cfg, seed);
  for (const auto& n : p.names()) {
    if (n.ends_with(".b") || n.ends_with(".bi") || n.ends_with(".bo") || n.ends_with(".bc")) {
      p.assign(n, random_tensor(p.get(n).shape(), hash_seed(seed, n), 0.05, 0.3));
    }
  }
  const Tensor frames = random_tensor({2, 32, 32}, seed + 11);
  const Tensor targets = random_tensor({2, pi::kNumKeypoints, 2}, seed + 12, -0.9, 0.9);
  const Tensor soft = ops::softmax(random_tensor({2}, seed + 13));
  const std::size_t label = seed % 2;

  auto terms = [&](Tape& t, const ParameterStore& ps) {
    ForwardOptions opts;
    opts.keypoints = true;
    opts.secondary = true;
    const auto fwd = forward_sequence(t, ps, cfg, frames, nullptr, opts);
    pi::SequenceTerms s;
    s.final_probs = fwd.rnn.probs.back();
    s.keypoints = fwd.keypoints;
    s.keypoint_targets = targets;
    s.secondary_logits = fwd.secondary_logits;
    s.label = label;
    return s;
  };
  const auto joint = grad_check(
      [&](Tape& t, const ParameterStore& ps) { return pi::multitask_loss(terms(t, ps), 1.0); }, p);
  const auto refine = grad_check(
      [&](Tape& t, const ParameterStore& ps) { return pi::refining_loss(terms(t, ps), soft, 0.5); },
      p);
  return {joint.max_rel_error, refine.max_rel_error};
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  Verdict v;
  double worst = 0.0;
  for (const auto& c : op_cases()) {
    for (int s = 0; s < kSeeds; ++s) {
      ParameterStore p;
      std::uint64_t k = 0;
      for (const auto& [name, shape] : c.inputs) p.add(name, random_tensor(shape, hash_seed(s, c.name) + k++));
      const Tensor weights = [&] {
        Tape probe;
        std::vector<Var> in;
        for (const auto& [name, shape] : c.inputs) in.push_back(probe.parameter(p, name));
        return random_tensor(c.op(in).shape(), 5000 + s);
      }();
      const auto r = grad_check(
          [&](Tape& t, const ParameterStore& ps) {
            std::vector<Var> in;
            for (const auto& [name, shape] : c.inputs) in.push_back(t.parameter(ps, name));
            return ops::sum(ops::mul(c.op(in), t.constant(weights)));
          },
          p);
      worst = std::max(worst, r.max_rel_error);
      if (r.max_rel_error >= kGradTol) v.require(false, std::string(c.name) + " seed " + std::to_string(s));
    }
  }
  double worst_composite = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    const auto [joint, refine] = composite_grad_errors(100 + s);
    worst_composite = std::max({worst_composite, joint, refine});
    v.require(joint < kGradTol, "multitask composite seed " + std::to_string(s));
    v.require(refine < kGradTol, "refining composite seed " + std::to_string(s));
  }
  const double secs = seconds_since(t0);
  v.require(secs < 60.0, "suite took " + fmt("%.1f s", secs));
  report(1, "gradient correctness", v,
         std::to_string(op_cases().size()) + " ops x 20 seeds, " + "worst op rel err " + fmt("%.2e", worst) +
             ", worst composite " + fmt("%.2e", worst_composite) + ", " + fmt("%.1f s", secs));
}

// ---------------------------------------------------------------------------
// 2. EM invariants

double q_bruteforce(const std::vector<Tensor>& logits, const std::vector<std::size_t>& labels,
                    const Tensor& m) {
  double q = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    const std::size_t k = logits[j].size();
    double z = 0.0;
    for (std::size_t l = 0; l < k; ++l) z += std::exp(logits[j][l]);
    double inner = 0.0;
    for (std::size_t l = 0; l < k; ++l) inner += std::exp(logits[j][l]) / z * m.at(l, labels[j]);
    q += std::log(inner);
  }
  return q;
}

void criterion_em(const Dataset& data) {
  Verdict v;
  const auto cfg = ModelConfig::preset("desk", data.num_classes);
  const Hyperparams hyper = Hyperparams::desk();
  const auto learned = run_learning(data, cfg, nullptr, hyper, 1);
  const auto refined = run_refining(data, cfg, learned.params, hyper, 1);
  double post_err = 0.0, row_err = 0.0, worst_dq = 0.0;
  for (const auto& it : refined.iterations) {
    post_err = std::max(post_err, it.max_posterior_error);
    row_err = std::max(row_err, it.max_bridging_row_error);
    worst_dq = std::min(worst_dq, it.q_after_bridging - it.q_before_bridging);
    v.require(it.min_posterior_entry >= 0.0, "negative posterior entry");
  }
  v.require(!refined.iterations.empty(), "no EM iterations ran");
  v.require(post_err <= 1e-12, "posterior off simplex by " + fmt("%.2e", post_err));
  v.require(row_err <= 1e-12, "bridging row error " + fmt("%.2e", row_err));
  v.require(worst_dq >= -1e-9, "Q decreased by " + fmt("%.2e", -worst_dq));

  double oracle_gap = 0.0;
  for (int s = 0; s < 50; ++s) {
    std::vector<Tensor> logits;
    std::vector<std::size_t> labels;
    for (int j = 0; j < 5; ++j) {
      logits.push_back(random_tensor({3}, 100 * s + j, -3, 3));
      labels.push_back(static_cast<std::size_t>((s + j) % 3));
    }
    auto m = pi::BridgingMatrix::smoothed_identity(3, 0.2);
    for (int it = 0; it < 3; ++it) {
      const double before = pi::q_loglik(logits, labels, m);
      oracle_gap = std::max(oracle_gap, std::abs(before - q_bruteforce(logits, labels, m.tensor())));
      std::vector<Tensor> us;
      for (int j = 0; j < 5; ++j) us.push_back(pi::estep_latent_pi(logits[j], labels[j], m));
      m = pi::mstep_bridging(us, labels);
      const double after = pi::q_loglik(logits, labels, m);
      oracle_gap = std::max(oracle_gap, std::abs(after - q_bruteforce(logits, labels, m.tensor())));
      worst_dq = std::min(worst_dq, after - before);
    }
  }
  v.require(oracle_gap <= 1e-12, "q_loglik vs brute force " + fmt("%.2e", oracle_gap));
  v.require(worst_dq >= -1e-9, "Q decreased on oracle instances");
  report(2, "EM invariants", v,
         fmt("%.0f EM iterations", static_cast<double>(refined.iterations.size())) +
             ", simplex err " + fmt("%.1e", post_err) + ", row err " + fmt("%.1e", row_err) +
             ", min dQ " + fmt("%.1e", worst_dq) + ", oracle gap " + fmt("%.1e", oracle_gap));
}

// ---------------------------------------------------------------------------
// 3. closed-form oracles

void criterion_oracles() {
  Verdict v;
  const pi::BridgingMatrix m2(Tensor::matrix(2, 2, {0.9, 0.1, 0.3, 0.7}));
  const auto u = pi::estep_latent_pi(Tensor::vector({1.0, 0.0}), 0, m2);
  v.require(std::abs(u[0] - 0.89079) < 1e-4 && std::abs(u[1] - 0.10921) < 1e-4, "E-step example");

  const auto m = pi::mstep_bridging({Tensor::vector({0.8, 0.2}), Tensor::vector({0.6, 0.4}),
                                     Tensor::vector({0.3, 0.7}), Tensor::vector({0.1, 0.9})},
                                    {0, 0, 1, 1});
  v.require(std::abs(m(0, 0) - 0.7778) < 1e-4 && std::abs(m(0, 1) - 0.2222) < 1e-4 &&
                std::abs(m(1, 0) - 0.2727) < 1e-4 && std::abs(m(1, 1) - 0.7273) < 1e-4,
            "M-step example");

  for (int s = 0; s < 20; ++s) {
    const auto logits = random_tensor({4}, 40 + s, -5, 5);
    const std::size_t g = static_cast<std::size_t>(s) % 4;
    const auto ident = pi::estep_latent_pi(logits, g, pi::BridgingMatrix::identity(4));
    for (std::size_t k = 0; k < 4; ++k) {
      if (ident[k] != (k == g ? 1.0 : 0.0)) v.require(false, "identity M not one-hot");
    }
    const auto unif = pi::estep_latent_pi(logits, g, pi::BridgingMatrix::uniform(4));
    const auto sm = ops::softmax(logits);
    for (std::size_t k = 0; k < 4; ++k) {
      if (std::abs(unif[k] - sm[k]) > 1e-12) v.require(false, "uniform M not softmax");
    }
  }
  const auto oh = pi::mstep_bridging(
      {pi::one_hot(3, 0), pi::one_hot(3, 2), pi::one_hot(3, 1)}, {0, 2, 1});
  v.require(oh.tensor() == pi::BridgingMatrix::identity(3).tensor(), "one-hot posteriors -> identity");
  report(3, "closed-form oracles", v,
         "u=(" + fmt("%.5f", u[0]) + ", " + fmt("%.5f", u[1]) + "), M=[[" + fmt("%.4f", m(0, 0)) +
             ", " + fmt("%.4f", m(0, 1)) + "], [" + fmt("%.4f", m(1, 0)) + ", " +
             fmt("%.4f", m(1, 1)) + "]]");
}

// ---------------------------------------------------------------------------
// 4. sampler calibration

void criterion_sampler() {
  Verdict v;
  constexpr int kDraws = 100000;
  double worst_sigmas = 0.0;
  for (std::size_t k : {2u, 4u, 10u}) {
    for (double alpha : {0.0, 0.2, 0.4, 1.0}) {
      CounterRng rng(hash_seed(k, "calibration" + std::to_string(alpha)));
      const std::size_t g = 0;
      const auto u = ops::softmax(random_tensor({k}, k + 77));
      int hits = 0;
      for (int i = 0; i < kDraws; ++i) hits += pi::sample_disturbed_target(u, g, alpha, rng).sampled_label == g;
      const double pg = 1.0 - (static_cast<double>(k) - 1.0) * alpha / static_cast<double>(k);
      const double sigma = std::sqrt(kDraws * pg * (1.0 - pg));
      const double dev = std::abs(hits - kDraws * pg);
      if (sigma > 0.0) worst_sigmas = std::max(worst_sigmas, dev / sigma);
      if (dev > 3.0 * sigma) {
        v.require(false, "K=" + std::to_string(k) + " alpha=" + fmt("%.1f", alpha));
      }
    }
  }
  report(4, "sampler calibration", v, "worst deviation " + fmt("%.2f", worst_sigmas) + " sigma");
}

// ---------------------------------------------------------------------------
// 5. shape fidelity

void criterion_shapes() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto cfg = encoder::EncoderConfig::paper();
  ParameterStore p;
  encoder::init_params(p, cfg, 1);
  Tape tape;
  encoder::ShapeTrace trace;
  const Var x = encoder::encode_frame(tape, p, cfg, random_tensor({224, 224, 1}, 3), &trace);
  v.require(trace.final_map == Shape{7, 7, 512}, "final map " + shape_to_string(trace.final_map));
  v.require(x.shape() == Shape{1000}, "features " + shape_to_string(x.shape()));
  v.require(encoder::infer_shapes(cfg).final_map == trace.final_map, "static shape inference");
  report(5, "shape fidelity", v,
         "224x224x1 -> " + shape_to_string(trace.final_map) + " -> " + shape_to_string(x.shape()) +
             ", " + fmt("%.1f s", seconds_since(t0)));
}

// ---------------------------------------------------------------------------
// 6. directional ablation

harness::AblationResult criterion_ablation(const harness::ExperimentConfig& base) {
  Verdict v;
  auto cfg = base;
  cfg.out = base.out / "ablation";
  cfg.seeds = {1, 2, 3, 4, 5};
  const auto result = harness::cmd_ablate(cfg);
  std::map<Variant, double> mean;
  for (const auto& s : result.summary) mean[s.variant] = s.mean;
  const double full = mean[Variant::kFull];
  v.require(full >= mean[Variant::kNoRefine], "full < no_refine");
  v.require(full >= mean[Variant::kVanillaCnnRnn], "full < vanilla");
  v.require(full - 0.25 >= 0.25, "full does not beat chance by 0.25");
  v.require(result.seconds < 3600.0, "ablation took " + fmt("%.0f s", result.seconds));
  std::string summary;
  for (const auto& s : result.summary) {
    summary += variant_name(s.variant) + "=" + fmt("%.3f", s.mean) + fmt("+-%.3f", s.stddev) + ", ";
  }
  report(6, "directional component ablation", v, summary + fmt("%.0f s", result.seconds));
  return result;
}

// ---------------------------------------------------------------------------
// 7. PI contract

void criterion_pi(const harness::ExperimentConfig& base, const fs::path& checkpoint) {
  Verdict v;
  const auto data_dir = base.manifest.parent_path();
  const auto copy = base.out / "data_without_skeletons";
  fs::remove_all(copy);
  fs::copy(data_dir, copy, fs::copy_options::recursive);
  const auto manifest = synth::read_manifest(copy / synth::kManifestFile);
  std::size_t removed = 0;
  for (const auto& e : manifest.test) removed += fs::remove(copy / e.skeleton);
  v.require(removed == manifest.test.size(), "could not remove test skeletons");

  harness::EvalRequest with{checkpoint, base.manifest, "test", base.out / "eval_with", true};
  harness::EvalRequest without{checkpoint, copy / synth::kManifestFile, "test",
                               base.out / "eval_without", true};
  fs::remove_all(with.out);
  fs::remove_all(without.out);
  const auto m = harness::cmd_eval(with);
  harness::cmd_eval(without);
  const auto a = snapshot(with.out), b = snapshot(without.out);
  v.require(a.size() == 3, "expected metrics, confusion and traces files");
  v.require(a == b, "eval output differs without skeleton files");
  report(7, "PI contract", v,
         std::to_string(removed) + " skeleton files removed, " + std::to_string(a.size()) +
             " output files identical, test accuracy " + fmt("%.3f", m.mean_accuracy));
}

// ---------------------------------------------------------------------------
// 8. determinism

void criterion_determinism(const harness::ExperimentConfig& base, const fs::path& first_run) {
  Verdict v;
  std::size_t compared = 0;

  auto gen = base;
  gen.out = base.out / "data_rerun";
  fs::remove_all(gen.out);
  harness::cmd_gen_data(gen);
  const auto d1 = snapshot(base.manifest.parent_path()), d2 = snapshot(gen.out);
  v.require(d1 == d2, "gen-data rerun differs");
  compared += d1.size();

  auto train = base;
  train.variant = Variant::kFull;
  train.seed = 1;
  train.out = base.out / "train_rerun";
  fs::remove_all(train.out);
  harness::cmd_train(train);
  auto r1 = snapshot(first_run), r2 = snapshot(train.out);
  // config.json echoes the output directory, which differs by construction.
  r1.erase("config.json");
  r2.erase("config.json");
  v.require(!r1.empty() && r1 == r2, "train rerun differs");
  compared += r1.size();

  const auto ckpt = first_run / "checkpoints" / "refine";
  harness::EvalRequest e1{ckpt, base.manifest, "test", base.out / "eval_rerun_a", true};
  harness::EvalRequest e2{ckpt, base.manifest, "test", base.out / "eval_rerun_b", true};
  harness::cmd_eval(e1);
  harness::cmd_eval(e2);
  const auto s1 = snapshot(e1.out), s2 = snapshot(e2.out);
  v.require(s1 == s2, "eval rerun differs");
  compared += s1.size();
  report(8, "determinism", v, std::to_string(compared) + " files byte-identical across reruns");
}

}  // namespace

int main(int argc, char** argv) {
  const auto t0 = Clock::now();
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "prnn_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  harness::ExperimentConfig base;
  base.out = work / "data";
  base.manifest = work / "data" / synth::kManifestFile;
  try {
    harness::cmd_gen_data(base);
  } catch (const std::exception& e) {
    std::printf("dataset generation failed: %s\n", e.what());
    return 1;
  }
  base.out = work;

  auto guarded = [](int id, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      ++failures;
      emit("criterion " + std::to_string(id) + " FAIL: exception: " + e.what());
    }
  };

  guarded(1, criterion_gradients);
  guarded(2, [&] { criterion_em(synth::load_training_dataset(base.manifest)); });
  guarded(3, criterion_oracles);
  guarded(4, criterion_sampler);
  guarded(5, criterion_shapes);
  guarded(6, [&] { criterion_ablation(base); });
  const auto full_run = work / "ablation" / "runs" / "prnn_full_seed1";
  guarded(7, [&] { criterion_pi(base, full_run / "checkpoints" / "refine"); });
  guarded(8, [&] { criterion_determinism(base, full_run); });

  emit("acceptance: " + std::to_string(failures) + " failing criteria, " + fmt("%.0f", seconds_since(t0)) +
       " s total");
  std::ofstream(work / "acceptance_report.txt") << transcript;
  return failures == 0 ? 0 : 1;
}
