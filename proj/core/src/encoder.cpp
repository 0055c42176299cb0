#include "prnn/encoder.hpp"

#include <algorithm>

#include "prnn/errors.hpp"
#include "prnn/init.hpp"
#include "prnn/ops.hpp"

namespace prnn::encoder {

namespace {
std::string conv_name(std::size_t stage, const char* which) {
  return "encoder.conv" + std::to_string(stage + 1) + "." + which;
}
}  // namespace

EncoderConfig EncoderConfig::paper() {
  EncoderConfig c;
  c.input_size = 224;
  c.conv_channels = {64, 128, 256, 512, 512};
  c.feature_dim = 1000;
  c.scale = "paper";
  return c;
}

EncoderConfig EncoderConfig::desk() { return EncoderConfig{}; }

void EncoderConfig::validate() const {
  if (input_size == 0 || input_size % (std::size_t{1} << kNumStages) != 0) {
    throw ValidationError("encoder input_size " + std::to_string(input_size) +
                          " must be a positive multiple of 32");
  }
  for (auto c : conv_channels) {
    if (c == 0) throw ValidationError("encoder conv channel count must be positive");
  }
  if (feature_dim == 0) throw ValidationError("encoder feature_dim must be positive");
}

std::size_t EncoderConfig::flattened_dim() const {
  const auto s = final_map_side();
  return s * s * conv_channels.back();
}

DepthFrame normalize_depth(const Tensor& raw, double min_depth, double max_depth) {
  if (!(max_depth > min_depth)) {
    throw ValidationError("normalize_depth: max_depth must exceed min_depth");
  }
  Tensor out = raw.rank() == 2 ? raw.reshaped({raw.dim(0), raw.dim(1), 1}) : raw;
  const double span = max_depth - min_depth;
  for (auto& v : out.data()) {
    const double clamped = std::clamp(v, min_depth, max_depth);
    v = 2.0 * (clamped - min_depth) / span - 1.0;
  }
  return DepthFrame{std::move(out)};
}

void init_params(ParameterStore& store, const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  std::size_t cin = 1;
  for (std::size_t s = 0; s < kNumStages; ++s) {
    const std::size_t cout = config.conv_channels[s];
    const auto wname = conv_name(s, "w");
    store.add(wname, glorot_uniform({3, 3, cin, cout}, 9 * cin, 9 * cout, seed, wname));
    store.add(conv_name(s, "b"), Tensor({cout}));
    cin = cout;
  }
  const std::size_t flat = config.flattened_dim();
  store.add("encoder.proj.w",
            glorot_uniform({config.feature_dim, flat}, flat, config.feature_dim, seed,
                           "encoder.proj.w"));
  store.add("encoder.proj.b", Tensor({config.feature_dim}));
}

Var encode_frame(Tape& tape, const ParameterStore& params, const EncoderConfig& config,
                 const Tensor& frame, ShapeTrace* trace) {
  const std::size_t s = config.input_size;
  Tensor input = frame;
  if (input.rank() == 2) input = input.reshaped({input.dim(0), input.dim(1), 1});
  if (input.rank() != 3 || input.dim(0) != s || input.dim(1) != s || input.dim(2) != 1) {
    throw DimensionError("encode_frame: expected [" + std::to_string(s) + "x" +
                         std::to_string(s) + "x1] frame, got " +
                         shape_to_string(frame.shape()));
  }
  Var x = tape.constant(std::move(input));
  for (std::size_t st = 0; st < kNumStages; ++st) {
    x = ops::conv2d_same(x, tape.parameter(params, conv_name(st, "w")),
                         tape.parameter(params, conv_name(st, "b")));
    x = ops::maxpool2(ops::relu(x));
    if (trace) trace->stage_outputs.push_back(x.shape());
  }
  if (trace) trace->final_map = x.shape();
  const std::size_t flat = x.value().size();
  x = ops::reshape(x, {flat});
  Var out = ops::tanh_act(ops::affine(tape.parameter(params, "encoder.proj.w"), x,
                                      tape.parameter(params, "encoder.proj.b")));
  if (trace) trace->features = out.shape();
  return out;
}

Tensor encode_frame(const ParameterStore& params, const EncoderConfig& config,
                    const DepthFrame& frame) {
  Tape tape;
  return encode_frame(tape, params, config, frame.pixels).value();
}

ShapeTrace infer_shapes(const EncoderConfig& config) {
  config.validate();
  ShapeTrace t;
  std::size_t side = config.input_size;
  for (std::size_t st = 0; st < kNumStages; ++st) {
    side = (side + 1) / 2;
    t.stage_outputs.push_back({side, side, config.conv_channels[st]});
  }
  t.final_map = t.stage_outputs.back();
  t.features = {config.feature_dim};
  return t;
}

}  // namespace prnn::encoder
