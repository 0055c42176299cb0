#include <benchmark/benchmark.h>

#include "prnn/autodiff.hpp"
#include "prnn/encoder.hpp"
#include "prnn/heads.hpp"
#include "prnn/model.hpp"
#include "prnn/ops.hpp"
#include "prnn/recurrent.hpp"
#include "prnn/rng.hpp"
#include "prnn/training.hpp"

namespace {

using namespace prnn;

Tensor noise(const Shape& shape, std::uint64_t seed) {
  CounterRng rng(seed);
  Tensor t(shape);
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Conv3x3Forward(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  const Tensor x = noise({size, size, channels}, 1);
  const Tensor k = noise({3, 3, channels, channels}, 2);
  const Tensor b = noise({channels}, 3);
  for (auto _ : state) {
    Tape tape;
    auto y = ops::conv2d_same(tape.constant(x), tape.constant(k), tape.constant(b));
    benchmark::DoNotOptimize(y.value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(size * size * 9 * channels * channels));
}
BENCHMARK(BM_Conv3x3Forward)->Args({32, 8})->Args({16, 16})->Args({56, 32});

void BM_Conv3x3Backward(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  ParameterStore p;
  p.add("k", noise({3, 3, channels, channels}, 2));
  p.add("b", noise({channels}, 3));
  const Tensor x = noise({size, size, channels}, 1);
  for (auto _ : state) {
    Tape tape;
    auto y = ops::sum(ops::conv2d_same(tape.constant(x), tape.parameter(p, "k"), tape.parameter(p, "b")));
    tape.backward(y);
    benchmark::DoNotOptimize(tape.parameter_gradients());
  }
}
BENCHMARK(BM_Conv3x3Backward)->Args({32, 8})->Args({16, 16});

void BM_DeskEncodeFrame(benchmark::State& state) {
  const auto cfg = encoder::EncoderConfig::desk();
  ParameterStore p;
  encoder::init_params(p, cfg, 1);
  const encoder::DepthFrame frame{noise({32, 32, 1}, 4)};
  for (auto _ : state) benchmark::DoNotOptimize(encoder::encode_frame(p, cfg, frame));
}
BENCHMARK(BM_DeskEncodeFrame);

void BM_LstmSequence(benchmark::State& state) {
  recurrent::LSTMConfig cfg;
  cfg.max_unroll = static_cast<std::size_t>(state.range(0));
  ParameterStore p;
  recurrent::init_params(p, cfg, 1);
  recurrent::init_head(p, cfg, 4, 2);
  std::vector<Tensor> feats;
  for (std::size_t t = 0; t < cfg.max_unroll; ++t) feats.push_back(noise({cfg.input_dim}, 10 + t));
  for (auto _ : state) {
    Tape tape;
    std::vector<Var> xs;
    for (const auto& f : feats) xs.push_back(tape.constant(f));
    auto out = recurrent::rnn_forward(tape, p, cfg, xs);
    benchmark::DoNotOptimize(out.probs.back().value().data().data());
  }
}
BENCHMARK(BM_LstmSequence)->Arg(10)->Arg(30);

void BM_VanillaEpoch(benchmark::State& state) {
  const auto cfg = ModelConfig::preset("desk", 4);
  Dataset data;
  data.num_classes = 4;
  for (std::size_t i = 0; i < 10; ++i) {
    Sample s;
    s.frames = noise({12, 32, 32}, 100 + i);
    s.label = i % 4;
    data.train.push_back(s);
  }
  Hyperparams h;
  for (auto _ : state) {
    ParameterStore p;
    model_params::init_backbone(p, cfg, 1, false);
    CounterRng rng(5);
    const auto& train = data.train;
    SequenceLoss loss = [&](Tape& tape, const ParameterStore& ps, std::size_t i) {
      const auto fwd = forward_sequence(tape, ps, cfg, train[i].frames, nullptr, {});
      return pi::classification_loss(fwd.rnn.probs.back(), train[i].label);
    };
    benchmark::DoNotOptimize(run_epoch(p, train.size(), loss, h, rng));
  }
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_VanillaEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
