#include <benchmark/benchmark.h>

#include "gzhybrid/augment.hpp"
#include "gzhybrid/rng.hpp"
#include "gzhybrid/synthdata.hpp"

using namespace gzhybrid;

namespace {

Image sample_image(int size) {
  Rng rng(1);
  GalaxyParams p = sample_galaxy_params(rng, 0.5);
  return generate_galaxy(p, size, rng);
}

}  // namespace

static void StandardView(benchmark::State& state) {
  const Image img = sample_image(int(state.range(0)));
  const AugmentPolicy policy = AugmentPolicy::standard_defaults(int(state.range(0)));
  Rng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(standard_view(img, policy, rng));
  }
}
BENCHMARK(StandardView)->Arg(64)->Arg(128);

static void StrongViewPair(benchmark::State& state) {
  const Image img = sample_image(int(state.range(0)));
  const AugmentPolicy policy = AugmentPolicy::strong_defaults(int(state.range(0)));
  Rng rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(strong_views(img, policy, rng));
  }
}
BENCHMARK(StrongViewPair)->Arg(64)->Arg(128);

static void GenerateGalaxy(benchmark::State& state) {
  Rng prng(4);
  const GalaxyParams p = sample_galaxy_params(prng, 0.5);
  for (auto _ : state) {
    Rng rng(5);
    benchmark::DoNotOptimize(generate_galaxy(p, int(state.range(0)), rng));
  }
}
BENCHMARK(GenerateGalaxy)->Arg(64)->Arg(128);
