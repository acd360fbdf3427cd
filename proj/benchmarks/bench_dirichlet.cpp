#include <benchmark/benchmark.h>

#include <vector>

#include "gzhybrid/dirichlet.hpp"
#include "gzhybrid/rng.hpp"
#include "gzhybrid/schema.hpp"
#include "gzhybrid/synthdata.hpp"

using namespace gzhybrid;

namespace {

struct LossCase {
  VoteVector votes;
  std::vector<double> alpha;
  std::vector<QuestionSlice> slices;
};

LossCase desk_case() {
  const AnswerSchema schema = AnswerSchema::from_document(desk_schema_document());
  const SyntheticCampaignTruth truth{5, 40};
  Rng rng(1);
  const GalaxyParams p = sample_galaxy_params(rng, 0.3);
  LossCase out;
  out.votes =
      encode_votes(simulate_votes(truth, p, "g", "desk-a", schema, rng), schema);
  out.slices = schema.slices();
  std::vector<double> raw(schema.answer_count());
  for (auto& v : raw) v = rng.uniform(-2.0, 2.0);
  out.alpha = link(raw).alpha;
  return out;
}

}  // namespace

static void DmLogLikelihood(benchmark::State& state) {
  Rng rng(2);
  const std::size_t bins = std::size_t(state.range(0));
  std::vector<std::int64_t> k(bins);
  std::vector<double> alpha(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    k[i] = std::int64_t(rng.below(10));
    alpha[i] = rng.uniform(1.5, 60.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(dm_log_likelihood(k, alpha, false));
  }
}
BENCHMARK(DmLogLikelihood)->Arg(2)->Arg(6)->Arg(16);

static void DmGradAlpha(benchmark::State& state) {
  Rng rng(3);
  const std::size_t bins = std::size_t(state.range(0));
  std::vector<std::int64_t> k(bins);
  std::vector<double> alpha(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    k[i] = std::int64_t(rng.below(10));
    alpha[i] = rng.uniform(1.5, 60.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(dm_grad_alpha(k, alpha));
  }
}
BENCHMARK(DmGradAlpha)->Arg(2)->Arg(6)->Arg(16);

static void MultiQuestionLossDeskSchema(benchmark::State& state) {
  const LossCase c = desk_case();
  for (auto _ : state) {
    benchmark::DoNotOptimize(multi_question_loss(c.votes, c.alpha, c.slices, false));
  }
}
BENCHMARK(MultiQuestionLossDeskSchema);

static void McOracle(benchmark::State& state) {
  const std::vector<std::int64_t> k = {2, 0, 1};
  const std::vector<double> alpha = {2.0, 3.0, 1.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dm_mc_oracle(k, alpha, std::size_t(state.range(0)), 7));
  }
}
BENCHMARK(McOracle)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
