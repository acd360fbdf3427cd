#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gzhybrid/config.hpp"
#include "gzhybrid/net.hpp"
#include "gzhybrid/synthdata.hpp"

namespace gzhybrid {

// Frozen representations, one row per galaxy, aligned with ids.
struct RepresentationMatrix {
  std::vector<std::string> ids;
  int width = 0;
  std::vector<float> values;  // row-major [ids.size(), width]

  std::span<const float> row(std::size_t i) const {
    return {values.data() + i * std::size_t(width), std::size_t(width)};
  }
};

// Deterministic center views through the online encoder's representation
// (pre-projection); no augmentation. The encoder is read-only here.
RepresentationMatrix extract_representations(const EncoderConfig& encoder_cfg,
                                             const ParameterSet<float>& encoder,
                                             const Dataset& dataset,
                                             std::span<const std::size_t> indices);

struct ProbeResult {
  std::string method;
  int budget = 0;
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double stddev = 0.0;
  // Majority-class baseline under the same folds, for margin reporting.
  double majority_baseline = 0.0;
};

// Stratified draw of `budget` row positions; class balance stays within one
// sample of the pool's. Throws DataError (prompting a reseed) if either class
// would be empty.
std::vector<std::size_t> probe_subsample(const std::vector<int>& labels, int budget,
                                         std::uint64_t seed);

// Stratified fold id per subsample row; folds are disjoint and exhaustive.
std::vector<int> probe_fold_assignment(const std::vector<int>& labels,
                                       const std::vector<std::size_t>& subsample,
                                       int folds, std::uint64_t seed);

// Stratified subsample of `budget` rows, then k-fold cross-validation of an
// L2-regularized logistic classifier trained by line-searched full-batch
// gradient descent. Throws DataError (prompting a reseed) if the budgeted
// subsample is single-class.
ProbeResult train_linear_probe(const RepresentationMatrix& representations,
                               const std::vector<int>& labels, int budget, int folds,
                               double l2, std::uint64_t seed, int max_iters = 500,
                               double tol = 1e-8);

// One sweep entry: a named checkpoint, or the direct baseline when the
// checkpoint path is empty (trained end-to-end per budget and fold).
struct SweepMethod {
  std::string name;
  std::filesystem::path checkpoint;  // empty => direct baseline
};

struct SweepResult {
  std::vector<ProbeResult> cells;
  std::map<std::string, double> final_contrastive;  // methods with target nets
  std::vector<std::string> missing;                 // "method@budget: reason"
};

// Probes every (method, budget) pair over the ring_train pool, writes
// results.csv / summary.csv and the accuracy-vs-budget plot (plus the
// loss-vs-accuracy scatter when contrastive losses are available) under
// out_dir. A failed cell is recorded as missing and the sweep continues.
SweepResult budget_sweep(const std::vector<SweepMethod>& methods,
                         const std::vector<int>& budgets, const Dataset& dataset,
                         const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::filesystem::path& out_dir);

// Loads the archived config next to a checkpoint (config.resolved.json).
ExperimentConfig checkpoint_config(const std::filesystem::path& checkpoint_path);

// Writes results/summary tables for a set of probe cells.
void write_probe_tables(const std::vector<ProbeResult>& cells,
                        const std::map<std::string, double>& final_contrastive,
                        const std::filesystem::path& results_path,
                        const std::filesystem::path& summary_path);

}  // namespace gzhybrid
