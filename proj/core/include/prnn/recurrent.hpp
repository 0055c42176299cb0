#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prnn/autodiff.hpp"
#include "prnn/params.hpp"
#include "prnn/tensor.hpp"

namespace prnn::recurrent {

enum class CellType { kLstm, kVanilla };

struct LSTMConfig {
  std::size_t input_dim = 64;
  std::size_t num_layers = 2;
  std::size_t hidden_units = 64;
  std::size_t max_unroll = 30;
  CellType cell = CellType::kLstm;
  double forget_bias = 1.0;

  static LSTMConfig paper();  // 2 x 1000 units, 100-step unroll
  static LSTMConfig desk();   // 2 x 64 units, 30-step unroll
  void validate() const;
};

/// Per-layer hidden and memory-cell vectors.
struct LSTMState {
  std::vector<Var> h;
  std::vector<Var> c;  // unused by the vanilla cell
};

/// Per-frame class scores and probabilities.
struct ClassDistribution {
  Tensor logits;
  Tensor probs;
};

/// Adds rnn.layerN.* (N from 1).
void init_params(ParameterStore& store, const LSTMConfig& config, std::uint64_t seed);
/// Adds head.cls.{w,b} mapping the top hidden state to num_classes scores.
void init_head(ParameterStore& store, const LSTMConfig& config, std::size_t num_classes,
               std::uint64_t seed);

LSTMState zero_state(Tape& tape, const LSTMConfig& config);

/// One time step through every layer. Layer l > 1 consumes layer l-1's new h.
LSTMState lstm_step(Tape& tape, const ParameterStore& params, const LSTMConfig& config,
                    const Var& x, const LSTMState& state);

struct RnnOutputs {
  std::vector<Var> top_hidden;  // h_t of the last layer, per frame
  std::vector<Var> logits;      // y_t = tanh(W^y h_t + b^y)
  std::vector<Var> probs;       // softmax(y_t)
};

/// Runs from a zero state over the frames. More than max_unroll frames are
/// truncated from the front so the most recent ones remain.
RnnOutputs rnn_forward(Tape& tape, const ParameterStore& params, const LSTMConfig& config,
                       const std::vector<Var>& features);

/// Value snapshot of per-frame distributions.
std::vector<ClassDistribution> distributions(const RnnOutputs& out);

}  // namespace prnn::recurrent
