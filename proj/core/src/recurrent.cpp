#include "prnn/recurrent.hpp"

#include "prnn/errors.hpp"
#include "prnn/init.hpp"
#include "prnn/ops.hpp"

namespace prnn::recurrent {

namespace {

std::string layer_name(std::size_t layer, const char* what) {
  return "rnn.layer" + std::to_string(layer + 1) + "." + what;
}

std::size_t layer_input(const LSTMConfig& c, std::size_t layer) {
  return layer == 0 ? c.input_dim : c.hidden_units;
}

Var gate(Tape& tape, const ParameterStore& p, std::size_t layer, const char* w, const char* u,
         const char* b, const Var& x, const Var& h) {
  return ops::add(ops::add(ops::matvec(tape.parameter(p, layer_name(layer, w)), x),
                           ops::matvec(tape.parameter(p, layer_name(layer, u)), h)),
                  tape.parameter(p, layer_name(layer, b)));
}

}  // namespace

LSTMConfig LSTMConfig::paper() {
  LSTMConfig c;
  c.input_dim = 1000;
  c.hidden_units = 1000;
  c.max_unroll = 100;
  return c;
}

LSTMConfig LSTMConfig::desk() { return LSTMConfig{}; }

void LSTMConfig::validate() const {
  if (input_dim == 0 || num_layers == 0 || hidden_units == 0 || max_unroll == 0) {
    throw ValidationError("LSTM config: sizes must be positive");
  }
}

void init_params(ParameterStore& store, const LSTMConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t hd = config.hidden_units;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::size_t in = layer_input(config, l);
    auto add_w = [&](const char* what, std::size_t cols) {
      const auto name = layer_name(l, what);
      store.add(name, glorot_uniform({hd, cols}, cols, hd, seed, name));
    };
    if (config.cell == CellType::kVanilla) {
      add_w("wh", in);
      add_w("uh", hd);
      store.add(layer_name(l, "bh"), Tensor({hd}));
      continue;
    }
    for (const char* w : {"wi", "wf", "wo", "wc"}) add_w(w, in);
    for (const char* u : {"ui", "uf", "uo", "uc"}) add_w(u, hd);
    store.add(layer_name(l, "bi"), Tensor({hd}));
    store.add(layer_name(l, "bf"), Tensor({hd}, config.forget_bias));
    store.add(layer_name(l, "bo"), Tensor({hd}));
    store.add(layer_name(l, "bc"), Tensor({hd}));
  }
}

void init_head(ParameterStore& store, const LSTMConfig& config, std::size_t num_classes,
               std::uint64_t seed) {
  if (num_classes == 0) throw ValidationError("classification head needs num_classes >= 1");
  store.add("head.cls.w", glorot_uniform({num_classes, config.hidden_units},
                                         config.hidden_units, num_classes, seed, "head.cls.w"));
  store.add("head.cls.b", Tensor({num_classes}));
}

LSTMState zero_state(Tape& tape, const LSTMConfig& config) {
  LSTMState s;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    s.h.push_back(tape.constant(Tensor({config.hidden_units})));
    s.c.push_back(tape.constant(Tensor({config.hidden_units})));
  }
  return s;
}

LSTMState lstm_step(Tape& tape, const ParameterStore& p, const LSTMConfig& config, const Var& x,
                    const LSTMState& state) {
  if (x.value().rank() != 1 || x.value().dim(0) != config.input_dim) {
    throw DimensionError("lstm_step: input " + shape_to_string(x.shape()) +
                         " does not match layer-1 width " + std::to_string(config.input_dim));
  }
  if (state.h.size() != config.num_layers || state.c.size() != config.num_layers) {
    throw DimensionError("lstm_step: state has wrong number of layers");
  }
  LSTMState next;
  Var in = x;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const Var& h = state.h[l];
    if (h.value().size() != config.hidden_units) {
      throw DimensionError("lstm_step: hidden state " + shape_to_string(h.shape()) +
                           " does not match hidden_units");
    }
    if (config.cell == CellType::kVanilla) {
      Var hn = ops::tanh_act(gate(tape, p, l, "wh", "uh", "bh", in, h));
      next.h.push_back(hn);
      next.c.push_back(state.c[l]);
      in = hn;
      continue;
    }
    Var i = ops::sigmoid_act(gate(tape, p, l, "wi", "ui", "bi", in, h));
    Var f = ops::sigmoid_act(gate(tape, p, l, "wf", "uf", "bf", in, h));
    Var o = ops::sigmoid_act(gate(tape, p, l, "wo", "uo", "bo", in, h));
    Var cand = ops::tanh_act(gate(tape, p, l, "wc", "uc", "bc", in, h));
    Var c = ops::add(ops::mul(f, state.c[l]), ops::mul(i, cand));
    Var hn = ops::mul(o, ops::tanh_act(c));
    next.h.push_back(hn);
    next.c.push_back(c);
    in = hn;
  }
  return next;
}

RnnOutputs rnn_forward(Tape& tape, const ParameterStore& p, const LSTMConfig& config,
                       const std::vector<Var>& features) {
  if (features.empty()) throw ValidationError("rnn_forward: empty sequence");
  const std::size_t start =
      features.size() > config.max_unroll ? features.size() - config.max_unroll : 0;
  RnnOutputs out;
  LSTMState state = zero_state(tape, config);
  const Var w = tape.parameter(p, "head.cls.w");
  const Var b = tape.parameter(p, "head.cls.b");
  for (std::size_t t = start; t < features.size(); ++t) {
    state = lstm_step(tape, p, config, features[t], state);
    const Var& top = state.h.back();
    Var y = ops::tanh_act(ops::affine(w, top, b));
    out.top_hidden.push_back(top);
    out.logits.push_back(y);
    out.probs.push_back(ops::softmax(y));
  }
  return out;
}

std::vector<ClassDistribution> distributions(const RnnOutputs& out) {
  std::vector<ClassDistribution> d;
  d.reserve(out.probs.size());
  for (std::size_t t = 0; t < out.probs.size(); ++t) {
    d.push_back({out.logits[t].value(), out.probs[t].value()});
  }
  return d;
}

}  // namespace prnn::recurrent
