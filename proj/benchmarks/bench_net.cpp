#include <benchmark/benchmark.h>

#include "gzhybrid/net.hpp"
#include "gzhybrid/rng.hpp"

using namespace gzhybrid;

namespace {

EncoderConfig desk_encoder(int input) {
  EncoderConfig cfg;
  cfg.in_height = input;
  cfg.in_width = input;
  return cfg;  // default stages (16,32,64,64), representation 64
}

Tensor<float> random_batch(const EncoderConfig& cfg, std::size_t n) {
  Rng rng(1);
  Tensor<float> batch({n, std::size_t(cfg.in_channels), std::size_t(cfg.in_height),
                       std::size_t(cfg.in_width)});
  for (auto& v : batch.data) v = float(rng.uniform(0.0, 1.0));
  return batch;
}

}  // namespace

static void EncoderForward(benchmark::State& state) {
  const EncoderConfig cfg = desk_encoder(int(state.range(0)));
  const auto params = init_encoder_params<float>(cfg, 2);
  const auto batch = random_batch(cfg, std::size_t(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(encoder_forward(cfg, params, batch, nullptr));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(EncoderForward)
    ->Args({64, 1})
    ->Args({64, 32})
    ->Args({128, 8})
    ->Unit(benchmark::kMillisecond);

static void EncoderForwardBackward(benchmark::State& state) {
  const EncoderConfig cfg = desk_encoder(int(state.range(0)));
  const auto params = init_encoder_params<float>(cfg, 3);
  const auto batch = random_batch(cfg, std::size_t(state.range(1)));
  Tensor<float> dout({std::size_t(state.range(1)),
                      std::size_t(cfg.representation_width)});
  for (auto& v : dout.data) v = 0.01f;
  for (auto _ : state) {
    EncoderCache<float> cache;
    encoder_forward(cfg, params, batch, &cache);
    auto grads = params.zeros_like();
    encoder_backward(cfg, params, cache, dout, grads, nullptr);
    benchmark::DoNotOptimize(grads);
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(EncoderForwardBackward)
    ->Args({64, 32})
    ->Args({48, 32})
    ->Unit(benchmark::kMillisecond);

static void HeadForward(benchmark::State& state) {
  HeadConfig cfg{HeadKind::supervised_predictor, 64, {128}, 206, true};
  const auto params = init_head_params<float>(cfg, 4);
  Rng rng(5);
  Tensor<float> batch({32, 64});
  for (auto& v : batch.data) v = float(rng.uniform(-1.0, 1.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(head_forward(cfg, params, batch, nullptr));
  }
}
BENCHMARK(HeadForward);
