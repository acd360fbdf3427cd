#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gzhybrid/dirichlet.hpp"
#include "gzhybrid/net.hpp"
#include "gzhybrid/schema.hpp"
#include "gzhybrid/tensor.hpp"

namespace gzhybrid {

// How the combined objective folds the supervised term in:
//   detached: combined = L_con + lambda * L_sup / max(value(L_con), floor),
//             the denominator carries no gradient;
//   off:      combined = L_con + lambda * L_sup.
enum class Eq3Denominator { detached, off };

struct HybridConfig {
  double lambda = 1.0;
  double ema_decay = 0.99;
  bool ema_schedule = false;  // cosine ramp from ema_base toward 1
  double ema_base = 0.996;
  long ema_total_steps = 0;  // schedule horizon; set by the trainer
  Eq3Denominator eq3_denominator = Eq3Denominator::detached;
  double denominator_floor = 0.1;
  bool supervised_both_views = false;  // default: view A only
  AdamConfig adam;
};

// Online branch: encoder, projection, contrastive predictor, supervised
// predictor. Target branch: EMA copies of encoder + projection only; target
// parameters never enter the optimizer state.
struct HybridState {
  EncoderConfig encoder_cfg;
  HeadConfig projection_cfg;
  HeadConfig predictor_cfg;
  HeadConfig supervised_cfg;
  HybridConfig config;

  ParameterSet<float> online_encoder;
  ParameterSet<float> online_projection;
  ParameterSet<float> online_predictor;
  ParameterSet<float> online_supervised;
  ParameterSet<float> target_encoder;
  ParameterSet<float> target_projection;

  AdamState<float> optimizer;
  long step = 0;
};

// Builds all networks; target starts as a copy of the online encoder and
// projection. answer_count fixes the supervised head's output width.
HybridState make_hybrid_state(const EncoderConfig& encoder_cfg, int projection_width,
                              int hidden_width, bool per_sample_norm,
                              std::size_t answer_count, const HybridConfig& config,
                              std::uint64_t seed);

struct LossBreakdown {
  double contrastive = 0.0;
  double supervised = 0.0;  // negated multi-question mean over labelled samples
  double combined = 0.0;
  int labelled_count = 0;
};

// One training batch: two strongly-augmented views per sample plus the
// encoded votes for labelled samples (the mask routes the supervised term).
struct HybridBatch {
  Tensor<float> view_a;  // [N, C, H, W]
  Tensor<float> view_b;
  std::vector<VoteVector> votes;       // aligned with samples; empty if unlabelled
  std::vector<std::uint8_t> labelled;  // 0/1 per sample
};

// target <- decay * target + (1 - decay) * online, elementwise.
void ema_update(const ParameterSet<float>& online, ParameterSet<float>& target,
                double decay);

// BYOL regression objective: 2 - 2 cos(prediction, target_projection); the
// squared distance of the L2-normalized vectors, in [0, 4].
double contrastive_loss(std::span<const float> prediction,
                        std::span<const float> target_projection);

// One optimizer step of the combined objective. The contrastive term is
// symmetrized over the two views and averaged over the batch; the supervised
// term averages the negated multi-question log-likelihood over labelled
// samples (zero when none are labelled). Throws NumericError if the loss
// goes non-finite.
LossBreakdown hybrid_step(HybridState& state, const HybridBatch& batch,
                          const std::vector<QuestionSlice>& slices);

// Pure contrastive mode: hybrid with lambda = 0 and the supervised head left
// untouched (not even evaluated).
LossBreakdown contrastive_step(HybridState& state, const HybridBatch& batch);

// Loss evaluation without any parameter update.
LossBreakdown hybrid_eval(const HybridState& state, const HybridBatch& batch,
                          const std::vector<QuestionSlice>& slices,
                          bool include_supervised = true);

// Purely-supervised pretraining: encoder + supervised head, standard single
// views, no target network, no contrastive head.
struct SupervisedState {
  EncoderConfig encoder_cfg;
  HeadConfig supervised_cfg;
  ParameterSet<float> encoder;
  ParameterSet<float> head;
  AdamState<float> optimizer;
  long step = 0;
  AdamConfig adam;
};

SupervisedState make_supervised_state(const EncoderConfig& encoder_cfg,
                                      int hidden_width, bool per_sample_norm,
                                      std::size_t answer_count, const AdamConfig& adam,
                                      std::uint64_t seed);

struct SupervisedBatch {
  Tensor<float> views;  // [N, C, H, W], standard augmentation
  std::vector<VoteVector> votes;
  std::vector<std::uint8_t> labelled;
};

// Throws DataError when the batch contains no labelled sample.
LossBreakdown supervised_step(SupervisedState& state, const SupervisedBatch& batch,
                              const std::vector<QuestionSlice>& slices);

LossBreakdown supervised_eval(const SupervisedState& state, const SupervisedBatch& batch,
                              const std::vector<QuestionSlice>& slices);

// EMA decay in effect at a given step (flat value or cosine schedule).
double effective_ema_decay(const HybridConfig& config, long step);

}  // namespace gzhybrid
