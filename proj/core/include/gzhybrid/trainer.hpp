#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "gzhybrid/byol.hpp"
#include "gzhybrid/checkpoint.hpp"
#include "gzhybrid/config.hpp"
#include "gzhybrid/synthdata.hpp"

namespace gzhybrid {

struct TrainResult {
  std::filesystem::path checkpoint_path;
  double best_objective = std::numeric_limits<double>::infinity();
  double final_contrastive = std::numeric_limits<double>::quiet_NaN();
  long steps = 0;
  int epochs_completed = 0;
  bool early_stopped = false;
};

// Trains according to cfg.train.mode and writes checkpoint.gzckpt plus
// metrics.csv (one line per step: step, contrastive, supervised, combined,
// labelled_count, wall_ms) and val.csv under out_dir. The checkpoint holds
// the best-validation snapshot.
TrainResult train_model(const ExperimentConfig& cfg, const Dataset& dataset,
                        const std::filesystem::path& out_dir);

// Batch of images as a [N, C, H, W] tensor.
Tensor<float> images_to_batch(const std::vector<Image>& views);

// Deterministic center views (no augmentation), resized to `size`.
Tensor<float> center_batch(const Dataset& dataset, std::span<const std::size_t> indices,
                           int size);

// Two strongly-augmented views per sample; per-sample streams are derived
// from (seed, epoch, record index), so results are schedule-independent.
HybridBatch assemble_hybrid_batch(const Dataset& dataset,
                                  std::span<const std::size_t> indices,
                                  const AugmentPolicy& strong, std::uint64_t seed,
                                  std::uint64_t epoch);

SupervisedBatch assemble_supervised_batch(const Dataset& dataset,
                                          std::span<const std::size_t> indices,
                                          const AugmentPolicy& standard,
                                          std::uint64_t seed, std::uint64_t epoch);

// Encoder plus linear ring head, trained end-to-end on downstream labels (the
// `direct` baseline). Early-stops on a validation carve of the given pool.
struct DirectModel {
  EncoderConfig encoder_cfg;
  HeadConfig head_cfg;
  ParameterSet<float> encoder;
  ParameterSet<float> head;
};

DirectModel train_direct_model(const ExperimentConfig& cfg, const Dataset& dataset,
                               std::span<const std::size_t> indices,
                               std::span<const int> labels, std::uint64_t seed,
                               std::ostream* metrics);

// Ring logits on deterministic center views.
std::vector<double> direct_scores(const DirectModel& model, const Dataset& dataset,
                                  std::span<const std::size_t> indices);

// Mean symmetrized contrastive loss of a checkpoint over the validation
// split, using fixed per-sample eval augmentation streams. Requires the
// checkpoint to contain target groups; used for the loss-vs-accuracy report.
double eval_checkpoint_contrastive(const ExperimentConfig& cfg, const Dataset& dataset,
                                   const NamedTensors& checkpoint);

}  // namespace gzhybrid
