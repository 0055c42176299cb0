#include "prnn/model.hpp"

#include "prnn/errors.hpp"
#include "prnn/heads.hpp"
#include "prnn/rng.hpp"

namespace prnn {

ModelConfig ModelConfig::preset(const std::string& name, std::size_t num_classes) {
  ModelConfig c;
  if (name == "paper") {
    c.encoder = encoder::EncoderConfig::paper();
    c.lstm = recurrent::LSTMConfig::paper();
  } else if (name == "desk") {
    c.encoder = encoder::EncoderConfig::desk();
    c.lstm = recurrent::LSTMConfig::desk();
  } else {
    throw ValidationError("unknown preset '" + name + "' (expected paper or desk)");
  }
  c.lstm.input_dim = c.encoder.feature_dim;
  c.num_classes = num_classes;
  return c;
}

void ModelConfig::validate() const {
  encoder.validate();
  lstm.validate();
  if (lstm.input_dim != encoder.feature_dim) {
    throw ValidationError("LSTM input_dim must equal encoder feature_dim");
  }
  if (num_classes == 0) throw ValidationError("num_classes must be >= 1");
  if (num_joints == 0) throw ValidationError("num_joints must be >= 1");
}

namespace model_params {

void init_backbone(ParameterStore& store, const ModelConfig& config, std::uint64_t seed,
                   bool with_skeleton) {
  config.validate();
  encoder::init_params(store, config.encoder, seed);
  pi::init_embed(store, config.encoder.feature_dim, config.skeleton_dim(), with_skeleton, seed);
  recurrent::init_params(store, config.lstm, seed);
  recurrent::init_head(store, config.lstm, config.num_classes, seed);
}

void add_regression_head(ParameterStore& store, const ModelConfig& config, std::uint64_t seed) {
  pi::init_regression_head(store, config.lstm.hidden_units, seed);
}

void add_secondary_head(ParameterStore& store, const ModelConfig& config, std::uint64_t seed) {
  pi::init_secondary_head(store, config.num_classes, config.max_frames(), seed);
}

}  // namespace model_params

SequenceForward forward_sequence(Tape& tape, const ParameterStore& params,
                                 const ModelConfig& config, const Tensor& frames,
                                 const Tensor* privileged, const ForwardOptions& options) {
  if (frames.rank() != 3) {
    throw DimensionError("forward_sequence: frames must be [T x H x W], got " +
                         shape_to_string(frames.shape()));
  }
  const std::size_t total = frames.dim(0);
  const std::size_t h = frames.dim(1), w = frames.dim(2);
  if (options.with_skeleton) {
    if (!privileged) throw ValidationError("forward_sequence: privileged input required");
    if (privileged->rank() != 2 || privileged->dim(0) != total ||
        privileged->dim(1) != config.skeleton_dim()) {
      throw DimensionError("forward_sequence: privileged input " +
                           shape_to_string(privileged->shape()) + " does not match " +
                           std::to_string(total) + " frames x " +
                           std::to_string(config.skeleton_dim()));
    }
  }
  SequenceForward out;
  out.first_frame = total > config.max_frames() ? total - config.max_frames() : 0;
  const std::size_t pixels = h * w;
  for (std::size_t t = out.first_frame; t < total; ++t) {
    Tensor frame({h, w, 1});
    std::copy(frames.data().begin() + static_cast<std::ptrdiff_t>(t * pixels),
              frames.data().begin() + static_cast<std::ptrdiff_t>((t + 1) * pixels),
              frame.data().begin());
    Var x = encoder::encode_frame(tape, params, config.encoder, frame);
    Tensor skel;
    if (options.with_skeleton) {
      const std::size_t sd = config.skeleton_dim();
      skel = Tensor({sd});
      for (std::size_t i = 0; i < sd; ++i) skel[i] = (*privileged)[t * sd + i];
    }
    out.features.push_back(pi::pretrain_embed(tape, params, x, options.with_skeleton ? &skel : nullptr));
  }
  out.rnn = recurrent::rnn_forward(tape, params, config.lstm, out.features);
  if (options.keypoints || options.secondary) {
    for (const Var& hdn : out.rnn.top_hidden) {
      out.keypoints.push_back(pi::predict_keypoints(tape, params, hdn));
    }
  }
  if (options.secondary) {
    out.secondary_logits = pi::skeleton_to_logits(tape, params, out.keypoints, config.max_frames());
  }
  return out;
}

std::vector<recurrent::ClassDistribution> predict(const ParameterStore& params,
                                                  const ModelConfig& config,
                                                  const Tensor& frames) {
  Tape tape;
  const auto fwd = forward_sequence(tape, params, config, frames, nullptr, {});
  return recurrent::distributions(fwd.rnn);
}

}  // namespace prnn
