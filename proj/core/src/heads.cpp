#include "prnn/heads.hpp"

#include <cmath>
#include <string>

#include "prnn/errors.hpp"
#include "prnn/init.hpp"
#include "prnn/ops.hpp"
#include "prnn/preprocess.hpp"

namespace prnn::pi {

void init_embed(ParameterStore& store, std::size_t feature_dim, std::size_t skeleton_dim,
                bool with_skeleton, std::uint64_t seed) {
  store.add("embed.w", glorot_uniform({feature_dim, feature_dim}, feature_dim, feature_dim,
                                      seed, "embed.w"));
  store.add("embed.b", Tensor({feature_dim}));
  if (with_skeleton) {
    store.add("embed.we", glorot_uniform({feature_dim, skeleton_dim}, skeleton_dim, feature_dim,
                                         seed, "embed.we"));
  }
}

Var pretrain_embed(Tape& tape, const ParameterStore& params, const Var& x,
                   const Tensor* skeleton_frame) {
  Var pre = ops::matvec(tape.parameter(params, "embed.w"), x);
  if (skeleton_frame) {
    Tensor flat = skeleton_frame->reshaped({skeleton_frame->size()});
    const Var we = tape.parameter(params, "embed.we");
    if (we.value().dim(1) != flat.size()) {
      throw DimensionError("pretrain_embed: skeleton of " + std::to_string(flat.size()) +
                           " values vs W_e " + shape_to_string(we.shape()));
    }
    pre = ops::add(pre, ops::matvec(we, tape.constant(std::move(flat))));
  }
  return ops::tanh_act(ops::add(pre, tape.parameter(params, "embed.b")));
}

void init_regression_head(ParameterStore& store, std::size_t hidden_units, std::uint64_t seed) {
  const std::size_t out = 2 * kNumKeypoints;
  store.add("head.reg.w", glorot_uniform({out, hidden_units}, hidden_units, out, seed,
                                         "head.reg.w"));
  store.add("head.reg.b", Tensor({out}));
}

Var predict_keypoints(Tape& tape, const ParameterStore& params, const Var& hidden) {
  return ops::tanh_act(ops::affine(tape.parameter(params, "head.reg.w"), hidden,
                                   tape.parameter(params, "head.reg.b")));
}

void init_secondary_head(ParameterStore& store, std::size_t num_classes, std::size_t max_frames,
                         std::uint64_t seed) {
  const std::size_t in = 2 * kNumKeypoints * max_frames;
  store.add("head.sec.w", glorot_uniform({num_classes, in}, in, num_classes, seed, "head.sec.w"));
  store.add("head.sec.b", Tensor({num_classes}));
}

Var skeleton_to_logits(Tape& tape, const ParameterStore& params,
                       const std::vector<Var>& keypoints_per_frame, std::size_t max_frames) {
  const std::size_t per_frame = 2 * kNumKeypoints;
  if (keypoints_per_frame.empty() || keypoints_per_frame.size() > max_frames) {
    throw DimensionError("skeleton_to_logits: " + std::to_string(keypoints_per_frame.size()) +
                         " frames for a " + std::to_string(max_frames) + "-frame layout");
  }
  std::vector<Var> parts = keypoints_per_frame;
  for (const Var& p : parts) {
    if (p.value().size() != per_frame) {
      throw DimensionError("skeleton_to_logits: frame holds " + shape_to_string(p.shape()) +
                           ", expected 12 values");
    }
  }
  const std::size_t pad = (max_frames - parts.size()) * per_frame;
  if (pad > 0) parts.push_back(tape.constant(Tensor({pad})));
  const Var b = ops::concat(parts);
  const Var w = tape.parameter(params, "head.sec.w");
  if (w.value().dim(1) != b.value().size()) {
    throw DimensionError("skeleton_to_logits: B has " + std::to_string(b.value().size()) +
                         " values, W^y' is " + shape_to_string(w.shape()));
  }
  return ops::affine(w, b, tape.parameter(params, "head.sec.b"));
}

Tensor one_hot(std::size_t num_classes, std::size_t label) {
  if (label >= num_classes) {
    throw ValidationError("label " + std::to_string(label) + " out of range for " +
                          std::to_string(num_classes) + " classes");
  }
  Tensor t({num_classes});
  t[label] = 1.0;
  return t;
}

Var classification_loss(const Var& probs, std::size_t label) {
  return ops::cross_entropy(one_hot(probs.value().size(), label), probs);
}

double classification_loss(const Tensor& probs, std::size_t label) {
  return ops::cross_entropy(one_hot(probs.size(), label), probs);
}

namespace {
void check_keypoint_sizes(std::size_t pred, std::size_t target) {
  if (pred != 2 * kNumKeypoints || target != 2 * kNumKeypoints) {
    throw DimensionError("regression_loss: expected 6 keypoints on both sides, got " +
                         std::to_string(pred / 2) + " and " + std::to_string(target / 2));
  }
}
}  // namespace

Var regression_loss(const Var& pred, const Tensor& target) {
  check_keypoint_sizes(pred.value().size(), target.size());
  Tape& tape = pred.tape();
  const Var t = tape.constant(target.reshaped({target.size()}));
  const Var p = pred.value().rank() == 1 ? pred : ops::reshape(pred, {pred.value().size()});
  return ops::scale(ops::sum(ops::square(ops::sub(t, p))),
                    1.0 / static_cast<double>(kNumKeypoints));
}

double regression_loss(const Tensor& pred, const Tensor& target) {
  check_keypoint_sizes(pred.size(), target.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = target[i] - pred[i];
    s += d * d;
  }
  return s / static_cast<double>(kNumKeypoints);
}

Var multitask_loss(const SequenceTerms& seq, double lambda) {
  if (lambda < 0.0) throw ValidationError("multitask_loss: lambda must be >= 0");
  Var loss = classification_loss(seq.final_probs, seq.label);
  if (lambda == 0.0) return loss;
  if (seq.keypoints.empty() || seq.keypoint_targets.empty()) {
    throw ValidationError("multitask_loss: regression targets missing");
  }
  const std::size_t frames = seq.keypoints.size();
  if (seq.keypoint_targets.dim(0) < frames) {
    throw DimensionError("multitask_loss: fewer keypoint targets than frames");
  }
  // Targets align with the most recent frames when the sequence was truncated.
  const std::size_t offset = seq.keypoint_targets.dim(0) - frames;
  const std::size_t per = 2 * kNumKeypoints;
  std::vector<Var> terms;
  terms.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    Tensor target({per});
    for (std::size_t i = 0; i < per; ++i) target[i] = seq.keypoint_targets[(offset + t) * per + i];
    terms.push_back(regression_loss(seq.keypoints[t], target));
  }
  return ops::add(loss, ops::scale(sum_losses(terms), lambda));
}

Var refining_loss(const SequenceTerms& seq, const Tensor& sampled_target, double beta) {
  if (beta < 0.0) throw ValidationError("refining_loss: beta must be >= 0");
  Var loss = ops::cross_entropy(sampled_target, seq.final_probs);
  if (beta == 0.0) return loss;
  if (!seq.secondary_logits.valid()) {
    throw ValidationError("refining_loss: secondary logits missing");
  }
  Var secondary = classification_loss(ops::softmax(seq.secondary_logits), seq.label);
  return ops::add(loss, ops::scale(secondary, beta));
}

Var sum_losses(const std::vector<Var>& losses) {
  if (losses.empty()) throw ValidationError("sum_losses: nothing to sum");
  Var total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = ops::add(total, losses[i]);
  return total;
}

}  // namespace prnn::pi
