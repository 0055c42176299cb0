#pragma once

#include <cstdint>
#include <vector>

#include "prnn/autodiff.hpp"
#include "prnn/params.hpp"
#include "prnn/tensor.hpp"

// Task heads and per-sequence loss terms of the privileged-information pipeline.
namespace prnn::pi {

/// embed.{w,b} ([F x F], [F]) and, when with_skeleton, embed.we ([F x 3S]).
void init_embed(ParameterStore& store, std::size_t feature_dim, std::size_t skeleton_dim,
                bool with_skeleton, std::uint64_t seed);

/// x' = tanh(W7 x + We flatten(E) + b7). Without a skeleton the We term is dropped.
Var pretrain_embed(Tape& tape, const ParameterStore& params, const Var& x,
                   const Tensor* skeleton_frame);

/// head.reg.{w,b}: top hidden state -> 12 keypoint values per frame.
void init_regression_head(ParameterStore& store, std::size_t hidden_units, std::uint64_t seed);
/// b_t = tanh(W h_t + b), laid out as 6 (x, y) pairs.
Var predict_keypoints(Tape& tape, const ParameterStore& params, const Var& hidden);

/// head.sec.{w,b}: concatenated predicted skeleton (12 * T_max) -> K logits.
void init_secondary_head(ParameterStore& store, std::size_t num_classes, std::size_t max_frames,
                         std::uint64_t seed);
/// Zero-pads the per-frame keypoint vectors to 12 * T_max and returns W B + b.
Var skeleton_to_logits(Tape& tape, const ParameterStore& params,
                       const std::vector<Var>& keypoints_per_frame, std::size_t max_frames);

Tensor one_hot(std::size_t num_classes, std::size_t label);

/// -log p[label]; label is a 0-based class index.
Var classification_loss(const Var& probs, std::size_t label);
double classification_loss(const Tensor& probs, std::size_t label);

/// (1/S) sum_s (dx^2 + dy^2) over 6 keypoints. pred and target hold 12 values.
Var regression_loss(const Var& pred, const Tensor& target);
double regression_loss(const Tensor& pred, const Tensor& target);

/// Per-sequence pieces that the batch losses sum over.
struct SequenceTerms {
  Var final_probs;               // p(y_T)
  std::vector<Var> keypoints;    // b_t per frame (may be empty)
  Tensor keypoint_targets;       // [T x 6 x 2] (may be empty)
  Var secondary_logits;          // y' (may be invalid)
  std::size_t label = 0;
};

/// L^c(T) + lambda * sum_t L^r(t) for one sequence.
Var multitask_loss(const SequenceTerms& seq, double lambda);

/// CE(target, p(y_T)) + beta * CE(one_hot(g), softmax(y')) for one sequence.
Var refining_loss(const SequenceTerms& seq, const Tensor& sampled_target, double beta);

/// Sums per-sequence scalars in index order.
Var sum_losses(const std::vector<Var>& losses);

}  // namespace prnn::pi
