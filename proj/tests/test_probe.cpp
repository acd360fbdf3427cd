#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "gzhybrid/errors.hpp"
#include "gzhybrid/probe.hpp"
#include "gzhybrid/rng.hpp"
#include "gzhybrid/synthdata.hpp"
#include "gzhybrid/trainer.hpp"

using namespace gzhybrid;
namespace fs = std::filesystem;

namespace {

// Features where the label is the sign of coordinate 0, plus noise columns.
RepresentationMatrix separable_features(std::size_t n, int width, std::uint64_t seed,
                                        std::vector<int>* labels) {
  RepresentationMatrix X;
  X.width = width;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    X.ids.push_back("g" + std::to_string(i));
    const int label = rng.bernoulli(0.5) ? 1 : 0;
    labels->push_back(label);
    X.values.push_back(float((label ? 1.0 : -1.0) * rng.uniform(0.5, 1.5)));
    for (int j = 1; j < width; ++j) X.values.push_back(float(rng.uniform(-1.0, 1.0)));
  }
  return X;
}

}  // namespace

TEST_CASE("linearly separable features probe at >= 0.99 accuracy") {
  std::vector<int> labels;
  const RepresentationMatrix X = separable_features(400, 8, 1, &labels);
  const ProbeResult r = train_linear_probe(X, labels, 200, 5, 1e-4, 7);
  CHECK(r.mean >= 0.99);
  CHECK(r.fold_accuracies.size() == 5);
  for (double a : r.fold_accuracies) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("permuted labels probe at chance level for budget 2000") {
  std::vector<int> labels;
  const RepresentationMatrix X = separable_features(2200, 8, 2, &labels);
  // destroy the feature-label association
  Rng rng(3);
  rng.shuffle(labels);
  const ProbeResult r = train_linear_probe(X, labels, 2000, 5, 1e-3, 11);
  CHECK(r.mean >= 0.45);
  CHECK(r.mean <= 0.55);
}

TEST_CASE("subsample is stratified within one sample and both classes present") {
  std::vector<int> labels;
  for (int i = 0; i < 300; ++i) labels.push_back(i < 100 ? 1 : 0);  // third positive
  const auto sub = probe_subsample(labels, 90, 5);
  CHECK(sub.size() == 90);
  long pos = 0;
  for (auto i : sub) pos += labels[i];
  CHECK(std::abs(double(pos) - 90.0 / 3.0) <= 1.0);

  SUBCASE("single-class pools are rejected with a reseed prompt") {
    std::vector<int> ones(50, 1);
    CHECK_THROWS_AS(probe_subsample(ones, 10, 5), DataError);
  }
  SUBCASE("budgets beyond the pool are rejected") {
    CHECK_THROWS_AS(probe_subsample(labels, 500, 5), DataError);
  }
}

TEST_CASE("folds are disjoint, exhaustive and stratified") {
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) labels.push_back(i % 2);
  const auto sub = probe_subsample(labels, 100, 9);
  const auto folds = probe_fold_assignment(labels, sub, 5, 9);
  REQUIRE(folds.size() == sub.size());
  std::vector<int> count(5, 0);
  for (int f : folds) {
    REQUIRE(f >= 0);
    REQUIRE(f < 5);
    ++count[f];
  }
  // exhaustive: every row got exactly one fold; balanced within one per class
  CHECK(std::accumulate(count.begin(), count.end(), 0) == int(sub.size()));
  for (int c : count) CHECK(std::abs(c - 20) <= 2);
}

TEST_CASE("probe results reproduce under a fixed seed") {
  std::vector<int> labels;
  const RepresentationMatrix X = separable_features(300, 6, 4, &labels);
  const ProbeResult a = train_linear_probe(X, labels, 150, 5, 1e-3, 13);
  const ProbeResult b = train_linear_probe(X, labels, 150, 5, 1e-3, 13);
  REQUIRE(a.fold_accuracies.size() == b.fold_accuracies.size());
  for (std::size_t i = 0; i < a.fold_accuracies.size(); ++i)
    CHECK(a.fold_accuracies[i] == b.fold_accuracies[i]);
  CHECK(a.mean == b.mean);
}

TEST_CASE("extract_representations: frozen encoder, aligned rows, purity") {
  GenerateConfig gen;
  gen.labelled = 0;
  gen.unlabelled = 12;
  gen.rings = 0;
  gen.image_size = 16;
  const Dataset ds = make_dataset(gen, 17);

  EncoderConfig enc;
  enc.in_height = 16;
  enc.in_width = 16;
  enc.stages = {{8, 3, 2}, {16, 3, 2}};
  enc.representation_width = 16;
  const auto params = init_encoder_params<float>(enc, 3);
  const auto params_before = params;

  std::vector<std::size_t> idx = {0, 1, 2, 1};  // duplicate galaxy at rows 1 and 3
  const RepresentationMatrix reps = extract_representations(enc, params, ds, idx);
  CHECK(reps.width == 16);
  CHECK(reps.ids.size() == 4);
  CHECK(reps.values.size() == 4 * 16);
  CHECK(reps.ids[1] == reps.ids[3]);
  for (int j = 0; j < 16; ++j) CHECK(reps.row(1)[j] == reps.row(3)[j]);

  // the encoder is bit-identical before and after extraction + probing
  std::vector<int> labels = {0, 1, 0, 1};
  (void)train_linear_probe(reps, labels, 4, 2, 1e-3, 5);
  for (const auto& name : params.names())
    for (std::size_t i = 0; i < params.at(name).size(); ++i)
      CHECK(params.at(name).data[i] == params_before.at(name).data[i]);

  const RepresentationMatrix again = extract_representations(enc, params, ds, idx);
  for (std::size_t i = 0; i < reps.values.size(); ++i)
    CHECK(reps.values[i] == again.values[i]);
}

TEST_CASE("budget_sweep emits tables, plots and records failed cells") {
  GenerateConfig gen;
  gen.labelled = 24;
  gen.unlabelled = 10;
  gen.rings = 60;
  gen.image_size = 16;
  const Dataset ds = make_dataset(gen, 23);

  ExperimentConfig cfg;
  cfg.encoder.in_height = 16;
  cfg.encoder.in_width = 16;
  cfg.encoder.stages = {{8, 3, 2}, {16, 3, 2}};
  cfg.encoder.representation_width = 16;
  cfg.probe.folds = 3;
  cfg.direct.epochs = 2;
  cfg.direct.batch_size = 8;
  cfg.train.batch_size = 8;
  cfg.augment_standard.out_size = 16;
  cfg.augment_strong.out_size = 16;

  const auto out = fs::temp_directory_path() / "gzhybrid_sweep_test";
  fs::remove_all(out);

  // budget 2000 exceeds the 30-row ring_train pool: recorded missing
  const SweepResult sweep =
      budget_sweep({{"direct", {}}}, {12, 24, 2000}, ds, cfg, 29, out);
  CHECK(sweep.cells.size() == 2);
  CHECK(sweep.missing.size() == 1);
  CHECK(fs::exists(out / "results.csv"));
  CHECK(fs::exists(out / "summary.csv"));
  CHECK(fs::exists(out / "accuracy_vs_budget.svg"));

  SUBCASE("unsorted budgets are rejected") {
    CHECK_THROWS_AS(budget_sweep({{"direct", {}}}, {24, 12}, ds, cfg, 29, out),
                    ConfigError);
  }
}
