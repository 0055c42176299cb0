#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prnn/autodiff.hpp"
#include "prnn/encoder.hpp"
#include "prnn/params.hpp"
#include "prnn/recurrent.hpp"

namespace prnn {

/// Full network layout: encoder -> embedding -> recurrent stack -> heads.
struct ModelConfig {
  encoder::EncoderConfig encoder;
  recurrent::LSTMConfig lstm;
  std::size_t num_classes = 4;
  std::size_t num_joints = 6;  // S, for the pre-training skeleton input

  static ModelConfig preset(const std::string& name, std::size_t num_classes);
  void validate() const;
  std::size_t skeleton_dim() const { return 3 * num_joints; }
  std::size_t max_frames() const { return lstm.max_unroll; }
};

/// Which parts of the network a forward pass builds.
struct ForwardOptions {
  bool with_skeleton = false;   // feed privileged input through embed.we
  bool keypoints = false;       // regression head per frame
  bool secondary = false;       // y' from the concatenated predicted skeleton
};

struct SequenceForward {
  std::vector<Var> features;   // embedded x'_t per frame
  recurrent::RnnOutputs rnn;
  std::vector<Var> keypoints;  // b_t per frame
  Var secondary_logits;        // y'
  std::size_t first_frame = 0; // index of the first frame kept after truncation
};

/// frames: [T x H x W]; privileged: [T x 3S] (required when with_skeleton).
SequenceForward forward_sequence(Tape& tape, const ParameterStore& params,
                                 const ModelConfig& config, const Tensor& frames,
                                 const Tensor* privileged, const ForwardOptions& options);

/// Depth-only final-frame class distribution and the per-frame trace.
std::vector<recurrent::ClassDistribution> predict(const ParameterStore& params,
                                                  const ModelConfig& config,
                                                  const Tensor& frames);

namespace model_params {
/// Encoder + embedding + recurrent stack + classification head.
void init_backbone(ParameterStore& store, const ModelConfig& config, std::uint64_t seed,
                   bool with_skeleton);
void add_regression_head(ParameterStore& store, const ModelConfig& config, std::uint64_t seed);
void add_secondary_head(ParameterStore& store, const ModelConfig& config, std::uint64_t seed);
}  // namespace model_params

}  // namespace prnn
