#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gzhybrid/augment.hpp"
#include "gzhybrid/net.hpp"
#include "gzhybrid/synthdata.hpp"

namespace gzhybrid {

enum class TrainMode { direct, pretrain, contrastive, hybrid };

TrainMode parse_train_mode(const std::string& text);
std::string to_string(TrainMode mode);

struct TrainSettings {
  TrainMode mode = TrainMode::hybrid;
  double lambda = 1.0;
  double ema_decay = 0.99;
  bool ema_schedule = false;
  double ema_base = 0.996;
  std::string eq3_denominator = "detached";  // "detached" or "off"
  double denominator_floor = 0.1;
  bool supervised_both_views = false;
  int batch_size = 32;
  int epochs = 40;
  int patience = 10;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int max_eval_samples = 256;
};

struct HeadSettings {
  int projection_width = 32;
  int hidden_width = 128;
  bool per_sample_norm = true;
};

struct ProbeSettings {
  std::vector<int> budgets = {40, 100, 250, 500};
  int folds = 5;
  double l2 = 1e-3;
  int budget = 500;   // single-probe default
  int max_iters = 500;
  double tol = 1e-8;
};

struct DirectSettings {
  int epochs = 25;
  int batch_size = 32;
  int patience = 5;
  double lr = 0.001;
};

// Everything a run needs; file values override defaults, CLI flags override
// file values, and the resolved config is archived next to the outputs.
struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::string out_dir = "run";
  std::string dataset_dir;
  std::string schema_path;  // empty: <dataset_dir>/schema.json

  EncoderConfig encoder;
  HeadSettings heads;
  TrainSettings train;
  AugmentPolicy augment_standard = AugmentPolicy::standard_defaults(64);
  AugmentPolicy augment_strong = AugmentPolicy::strong_defaults(64);
  ProbeSettings probe;
  DirectSettings direct;
  GenerateConfig gen;

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::filesystem::path& path);

  // Fully resolved config, defaults included.
  std::string to_json_text() const;

  // Synchronizes derived fields (augment output sizes track the encoder
  // input) and checks invariants. With need_dataset, the dataset directory
  // must exist.
  void resolve_and_validate(bool need_dataset);
};

}  // namespace gzhybrid
