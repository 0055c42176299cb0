#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "prnn/autodiff.hpp"
#include "prnn/params.hpp"
#include "prnn/tensor.hpp"

namespace prnn::encoder {

inline constexpr std::size_t kNumStages = 5;

struct EncoderConfig {
  std::size_t input_size = 32;
  std::array<std::size_t, kNumStages> conv_channels{8, 16, 16, 32, 32};
  std::size_t feature_dim = 64;
  std::string scale = "desk";

  /// 224x224 input, VGG-style channel doubling up to 512, 1000-dim features.
  static EncoderConfig paper();
  static EncoderConfig desk();

  void validate() const;
  /// Side length of the activation map after the last pooling stage.
  std::size_t final_map_side() const { return input_size >> kNumStages; }
  /// Length of the flattened final activation map.
  std::size_t flattened_dim() const;
};

/// A [S x S x 1] frame with values in [-1, 1].
struct DepthFrame {
  Tensor pixels;
};

/// Affine map [min_depth, max_depth] -> [-1, 1], clamping outside values.
/// Accepts any shape; a rank-2 [H x W] input becomes [H x W x 1].
DepthFrame normalize_depth(const Tensor& raw, double min_depth, double max_depth);

/// Adds encoder.conv{1..5}.{w,b} and encoder.proj.{w,b}.
void init_params(ParameterStore& store, const EncoderConfig& config, std::uint64_t seed);

/// Shapes seen along the forward pass.
struct ShapeTrace {
  std::vector<Shape> stage_outputs;  // after each conv -> relu -> pool stage
  Shape final_map;
  Shape features;
};

/// Five (conv3x3 -> relu -> maxpool2) stages, flatten, then tanh(W x + b).
/// frame must be [S x S x 1] (or [S x S]) with S == config.input_size.
Var encode_frame(Tape& tape, const ParameterStore& params, const EncoderConfig& config,
                 const Tensor& frame, ShapeTrace* trace = nullptr);

/// Value-only convenience wrapper.
Tensor encode_frame(const ParameterStore& params, const EncoderConfig& config,
                    const DepthFrame& frame);

/// Stage output shapes computed from the configuration alone.
ShapeTrace infer_shapes(const EncoderConfig& config);

}  // namespace prnn::encoder
