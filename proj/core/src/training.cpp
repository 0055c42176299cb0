#include "prnn/training.hpp"

#include <cmath>
#include <numeric>

#include "prnn/errors.hpp"
#include "prnn/heads.hpp"
#include "prnn/metrics.hpp"
#include "prnn/ops.hpp"
#include "prnn/rng.hpp"

namespace prnn {

namespace {

bool better(const SplitScore& a, const SplitScore& b) {
  return a.accuracy > b.accuracy || (a.accuracy == b.accuracy && a.loss < b.loss);
}

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericError(what + " is not finite");
}

void require_train(const Dataset& data) {
  if (data.train.empty()) throw ValidationError("training split is empty");
  if (data.num_classes == 0) throw ValidationError("dataset has no classes");
  for (const auto& s : data.train) {
    if (s.label >= data.num_classes) throw ValidationError("label out of range in " + s.id);
  }
}

double evaluate_loss(const ParameterStore& params, std::size_t n, const SequenceLoss& loss) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Tape tape;
    total += loss(tape, params, i).value()[0];
  }
  return total;
}

/// Shared epoch loop with best-validation snapshotting and early stopping.
StageResult fit(ParameterStore params, const std::string& stage, std::size_t num_train,
                const SequenceLoss& loss,
                const std::function<SplitScore(const ParameterStore&)>& validate,
                const Hyperparams& hyper, std::uint64_t seed) {
  params.reset_optimizer();
  StageResult result;
  CounterRng rng(hash_seed(seed, stage));

  const double init_loss = evaluate_loss(params, num_train, loss);
  require_finite(init_loss, stage + " initial loss");
  SplitScore best_score = validate(params);
  result.curve.push_back({stage, 0, init_loss, best_score.accuracy, best_score.loss});
  result.params = params;

  for (std::size_t epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    const double epoch_loss = run_epoch(params, num_train, loss, hyper, rng);
    const SplitScore score = validate(params);
    result.curve.push_back({stage, epoch, epoch_loss, score.accuracy, score.loss});
    if (better(score, best_score)) {
      best_score = score;
      result.params = params;
      result.best_iteration = epoch;
    } else if (epoch - result.best_iteration >= hyper.patience) {
      break;
    }
  }
  return result;
}

std::function<SplitScore(const ParameterStore&)> validator(const Dataset& data,
                                                           const ModelConfig& config,
                                                           bool with_skeleton) {
  const auto& split = data.val.empty() ? data.train : data.val;
  return [&split, &config, with_skeleton](const ParameterStore& p) {
    return score_split(p, config, split, with_skeleton);
  };
}

}  // namespace

Hyperparams Hyperparams::desk() {
  Hyperparams h;
  h.lambda = 0.1;
  return h;
}

void Hyperparams::validate() const {
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  if (beta < 0.0) throw ValidationError("beta must be >= 0");
  if (!(lr > 0.0)) throw ValidationError("learning rate must be > 0");
  if (batch == 0) throw ValidationError("batch size must be >= 1");
  if (em_tol < 0.0) throw ValidationError("em_tol must be >= 0");
  if (em_epochs_per_iter == 0) throw ValidationError("em_epochs_per_iter must be >= 1");
  if (!(bridging_smoothing >= 0.0 && bridging_smoothing <= 1.0)) {
    throw ValidationError("bridging_smoothing must lie in [0, 1]");
  }
}

SplitScore score_split(const ParameterStore& params, const ModelConfig& config,
                       const std::vector<Sample>& samples, bool with_skeleton) {
  if (samples.empty()) return {};
  std::vector<std::size_t> labels, predicted;
  double loss = 0.0;
  for (const auto& s : samples) {
    Tape tape;
    ForwardOptions opts;
    opts.with_skeleton = with_skeleton;
    const auto fwd = forward_sequence(tape, params, config, s.frames,
                                      with_skeleton ? &s.privileged : nullptr, opts);
    const Tensor& p = fwd.rnn.probs.back().value();
    loss += pi::classification_loss(p, s.label);
    labels.push_back(s.label);
    predicted.push_back(argmax(p));
  }
  SplitScore score;
  score.accuracy = compute_metrics(labels, predicted, config.num_classes).mean_accuracy;
  score.loss = loss / static_cast<double>(samples.size());
  return score;
}

double run_epoch(ParameterStore& params, std::size_t num_samples, const SequenceLoss& loss,
                 const Hyperparams& hyper, CounterRng& rng) {
  std::vector<std::size_t> order(num_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = num_samples; i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  double total = 0.0;
  for (std::size_t start = 0; start < num_samples; start += hyper.batch) {
    Gradients grads = params.zero_gradients();
    const std::size_t end = std::min(num_samples, start + hyper.batch);
    for (std::size_t b = start; b < end; ++b) {
      Tape tape;
      const Var l = loss(tape, params, order[b]);
      const double v = l.value()[0];
      require_finite(v, "training loss");
      total += v;
      tape.backward(l);
      tape.accumulate_parameter_grads(grads);
    }
    adam_step(params, grads, hyper.lr);
  }
  return total;
}

StageResult run_pretrain(const Dataset& data, const ModelConfig& config, const Hyperparams& hyper,
                         std::uint64_t seed) {
  hyper.validate();
  require_train(data);
  for (const auto* split : {&data.train, &data.val}) {
    for (const auto& s : *split) {
      if (s.privileged.empty()) throw ValidationError("pre-training needs skeletons: " + s.id);
    }
  }
  ParameterStore params;
  model_params::init_backbone(params, config, seed, /*with_skeleton=*/true);
  const auto& train = data.train;
  SequenceLoss loss = [&](Tape& tape, const ParameterStore& p, std::size_t i) {
    ForwardOptions opts;
    opts.with_skeleton = true;
    const auto fwd = forward_sequence(tape, p, config, train[i].frames, &train[i].privileged, opts);
    return pi::classification_loss(fwd.rnn.probs.back(), train[i].label);
  };
  return fit(std::move(params), "pretrain", train.size(), loss, validator(data, config, true),
             hyper, seed);
}

StageResult run_learning(const Dataset& data, const ModelConfig& config,
                         const ParameterStore* pretrained, const Hyperparams& hyper,
                         std::uint64_t seed) {
  hyper.validate();
  require_train(data);
  if (hyper.lambda > 0.0) {
    for (const auto& s : data.train) {
      if (s.keypoint_targets.empty()) {
        throw ValidationError("learning stage needs regression targets: " + s.id);
      }
    }
  }
  ParameterStore params;
  if (pretrained) {
    params = *pretrained;
    if (params.contains("embed.we")) params.remove("embed.we");
  } else {
    model_params::init_backbone(params, config, seed, /*with_skeleton=*/false);
  }
  if (!params.contains("head.reg.w")) model_params::add_regression_head(params, config, seed);
  const auto& train = data.train;
  const double lambda = hyper.lambda;
  SequenceLoss loss = [&train, &config, lambda](Tape& tape, const ParameterStore& p,
                                                std::size_t i) {
    ForwardOptions opts;
    opts.keypoints = true;
    const auto fwd = forward_sequence(tape, p, config, train[i].frames, nullptr, opts);
    pi::SequenceTerms terms;
    terms.final_probs = fwd.rnn.probs.back();
    terms.keypoints = fwd.keypoints;
    terms.keypoint_targets = train[i].keypoint_targets;
    terms.label = train[i].label;
    return pi::multitask_loss(terms, lambda);
  };
  return fit(std::move(params), "learn", train.size(), loss, validator(data, config, false),
             hyper, seed);
}

StageResult run_vanilla(const Dataset& data, const ModelConfig& config, const Hyperparams& hyper,
                        std::uint64_t seed) {
  hyper.validate();
  require_train(data);
  ParameterStore params;
  model_params::init_backbone(params, config, seed, /*with_skeleton=*/false);
  const auto& train = data.train;
  SequenceLoss loss = [&](Tape& tape, const ParameterStore& p, std::size_t i) {
    const auto fwd = forward_sequence(tape, p, config, train[i].frames, nullptr, {});
    return pi::classification_loss(fwd.rnn.probs.back(), train[i].label);
  };
  return fit(std::move(params), "vanilla", train.size(), loss, validator(data, config, false),
             hyper, seed);
}

std::vector<Tensor> secondary_logits(const ParameterStore& params, const ModelConfig& config,
                                     const std::vector<Sample>& samples) {
  std::vector<Tensor> out;
  out.reserve(samples.size());
  ForwardOptions opts;
  opts.secondary = true;
  for (const auto& s : samples) {
    Tape tape;
    out.push_back(forward_sequence(tape, params, config, s.frames, nullptr, opts)
                      .secondary_logits.value());
  }
  return out;
}

RefineResult run_refining(const Dataset& data, const ModelConfig& config,
                          const ParameterStore& learned, const Hyperparams& hyper,
                          std::uint64_t seed) {
  hyper.validate();
  require_train(data);
  RefineResult result;
  result.bridging =
      pi::BridgingMatrix::smoothed_identity(config.num_classes, hyper.bridging_smoothing);
  if (hyper.em_max_iters == 0) {
    result.params = learned;
    return result;
  }

  ParameterStore params = learned;
  if (!params.contains("head.reg.w")) model_params::add_regression_head(params, config, seed);
  if (!params.contains("head.sec.w")) model_params::add_secondary_head(params, config, seed);
  params.reset_optimizer();

  const auto& train = data.train;
  std::vector<std::size_t> labels;
  for (const auto& s : train) labels.push_back(s.label);

  auto validate = validator(data, config, false);
  pi::BridgingMatrix bridging = result.bridging;
  SplitScore best_score = validate(params);
  result.params = params;

  std::vector<Tensor> logits = secondary_logits(params, config, train);
  double q_prev = pi::q_loglik(logits, labels, bridging);
  require_finite(q_prev, "initial Q");
  result.curve.push_back({"refine", 0, q_prev, best_score.accuracy, best_score.loss});

  CounterRng rng(hash_seed(seed, "refine"));
  std::vector<Tensor> posteriors(train.size());
  const double alpha = hyper.alpha, beta = hyper.beta;

  for (std::size_t it = 1; it <= hyper.em_max_iters; ++it) {
    EmIteration log;
    log.iteration = it;

    // E-step under the current network and bridging matrix.
    log.min_posterior_entry = 1.0;
    for (std::size_t j = 0; j < train.size(); ++j) {
      posteriors[j] = pi::estep_latent_pi(logits[j], labels[j], bridging);
      log.max_posterior_error = std::max(log.max_posterior_error, std::abs(posteriors[j].sum() - 1.0));
      for (double v : posteriors[j].data()) log.min_posterior_entry = std::min(log.min_posterior_entry, v);
    }

    // Closed-form bridging update with the network held fixed.
    log.q_before_bridging = q_prev;
    bridging = pi::mstep_bridging(posteriors, labels);
    log.max_bridging_row_error = bridging.max_row_error();
    log.q_after_bridging = pi::q_loglik(logits, labels, bridging);
    require_finite(log.q_after_bridging, "Q");

    // Network update on the PI-based loss; a fresh disturbed target per step.
    SequenceLoss loss = [&](Tape& tape, const ParameterStore& p, std::size_t i) {
      ForwardOptions opts;
      opts.secondary = true;
      const auto fwd = forward_sequence(tape, p, config, train[i].frames, nullptr, opts);
      pi::SequenceTerms terms;
      terms.final_probs = fwd.rnn.probs.back();
      terms.secondary_logits = fwd.secondary_logits;
      terms.label = train[i].label;
      const auto target = pi::sample_disturbed_target(posteriors[i], labels[i], alpha, rng);
      return pi::refining_loss(terms, target.target, beta);
    };
    for (std::size_t e = 0; e < hyper.em_epochs_per_iter; ++e) {
      log.refining_loss = run_epoch(params, train.size(), loss, hyper, rng);
    }

    logits = secondary_logits(params, config, train);
    log.q_end = pi::q_loglik(logits, labels, bridging);
    require_finite(log.q_end, "Q");
    result.iterations.push_back(log);

    const SplitScore score = validate(params);
    result.curve.push_back({"refine", it, log.q_end, score.accuracy, score.loss});
    if (better(score, best_score)) {
      best_score = score;
      result.params = params;
      result.bridging = bridging;
      result.best_iteration = it;
    }
    const double rel = std::abs(log.q_end - q_prev) / std::max(std::abs(q_prev), 1e-300);
    q_prev = log.q_end;
    if (rel < hyper.em_tol) break;
  }
  return result;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kVanillaCnnRnn: return "vanilla_cnn_rnn";
    case Variant::kNoPretrain: return "prnn_no_pretrain";
    case Variant::kNoRefine: return "prnn_no_refine";
    case Variant::kFull: return "prnn_full";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  for (auto v : ablation_order()) {
    if (variant_name(v) == name) return v;
  }
  throw ValidationError("unknown variant '" + name + "'");
}

std::vector<Variant> ablation_order() {
  return {Variant::kVanillaCnnRnn, Variant::kNoPretrain, Variant::kNoRefine, Variant::kFull};
}

TrainingRun train_variant(const Dataset& data, const ModelConfig& config,
                          const Hyperparams& hyper, Variant variant, std::uint64_t seed) {
  config.validate();
  hyper.validate();
  TrainingRun run;
  run.variant = variant;
  auto append_curve = [&run](const std::vector<EpochRecord>& c) {
    run.curve.insert(run.curve.end(), c.begin(), c.end());
  };
  if (variant == Variant::kVanillaCnnRnn) {
    auto r = run_vanilla(data, config, hyper, seed);
    append_curve(r.curve);
    run.checkpoints.push_back({"vanilla", std::move(r.params)});
    return run;
  }
  std::optional<ParameterStore> pretrained;
  if (variant != Variant::kNoPretrain) {
    auto r = run_pretrain(data, config, hyper, seed);
    append_curve(r.curve);
    run.checkpoints.push_back({"pretrain", r.params});
    pretrained = std::move(r.params);
  }
  auto learned = run_learning(data, config, pretrained ? &*pretrained : nullptr, hyper, seed);
  append_curve(learned.curve);
  run.checkpoints.push_back({"learn", learned.params});
  if (variant == Variant::kNoRefine) return run;

  auto refined = run_refining(data, config, learned.params, hyper, seed);
  append_curve(refined.curve);
  run.em = refined.iterations;
  run.bridging = refined.bridging;
  run.checkpoints.push_back({"refine", std::move(refined.params)});
  return run;
}

TrainingRun train_three_step(const Dataset& data, const ModelConfig& config,
                             const Hyperparams& hyper, std::uint64_t seed) {
  return train_variant(data, config, hyper, Variant::kFull, seed);
}

}  // namespace prnn
