#include "gzhybrid/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include "gzhybrid/augment.hpp"
#include "gzhybrid/errors.hpp"
#include "gzhybrid/parallel.hpp"

namespace gzhybrid {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

HybridConfig hybrid_config_from(const TrainSettings& t, long total_steps) {
  HybridConfig h;
  h.lambda = t.lambda;
  h.ema_decay = t.ema_decay;
  h.ema_schedule = t.ema_schedule;
  h.ema_base = t.ema_base;
  h.ema_total_steps = total_steps;
  h.eq3_denominator = t.eq3_denominator == "off" ? Eq3Denominator::off
                                                 : Eq3Denominator::detached;
  h.denominator_floor = t.denominator_floor;
  h.supervised_both_views = t.supervised_both_views;
  h.adam = {t.lr, t.beta1, t.beta2, 1e-8};
  return h;
}

std::vector<std::size_t> capped_eval_pool(const std::vector<std::size_t>& pool,
                                          int cap, std::uint64_t seed) {
  std::vector<std::size_t> out = pool;
  Rng rng = Rng::stream(seed, "evalset");
  rng.shuffle(out);
  if (int(out.size()) > cap) out.resize(std::size_t(cap));
  std::sort(out.begin(), out.end());
  return out;
}

void write_metrics_line(std::ostream& out, long step, const LossBreakdown& loss,
                        double wall_ms) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "%ld,%.9g,%.9g,%.9g,%d,%.3f\n", step,
                loss.contrastive, loss.supervised, loss.combined,
                loss.labelled_count, wall_ms);
  out << buf;
}

// Binary cross-entropy on logits; returns mean loss, fills dlogits (scaled
// by 1/n) when given.
double bce_loss(const Tensor<float>& logits, std::span<const int> labels,
                Tensor<float>* dlogits) {
  const std::size_t n = logits.dim(0);
  if (dlogits) *dlogits = Tensor<float>(logits.shape);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = double(logits.data[i]);
    const double y = double(labels[i]);
    // softplus(z) - y z, computed stably
    total += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
    if (dlogits) {
      const double s = 1.0 / (1.0 + std::exp(-z));
      dlogits->data[i] = float((s - y) / double(n));
    }
  }
  return total / double(n);
}

}  // namespace

Tensor<float> images_to_batch(const std::vector<Image>& views) {
  if (views.empty()) throw std::invalid_argument("images_to_batch: empty batch");
  const int c = views[0].channels, h = views[0].height, w = views[0].width;
  Tensor<float> out({views.size(), std::size_t(c), std::size_t(h), std::size_t(w)});
  const std::size_t stride = std::size_t(c) * h * w;
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].channels != c || views[i].height != h || views[i].width != w)
      throw std::invalid_argument("images_to_batch: mixed image sizes");
    std::copy(views[i].px.begin(), views[i].px.end(), out.ptr() + i * stride);
  }
  return out;
}

Tensor<float> center_batch(const Dataset& dataset, std::span<const std::size_t> indices,
                           int size) {
  std::vector<Image> views(indices.size());
  parallel_for(indices.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      views[i] = resize_bilinear(dataset.image(indices[i]), size);
  });
  return images_to_batch(views);
}

HybridBatch assemble_hybrid_batch(const Dataset& dataset,
                                  std::span<const std::size_t> indices,
                                  const AugmentPolicy& strong, std::uint64_t seed,
                                  std::uint64_t epoch) {
  std::vector<Image> view_a(indices.size()), view_b(indices.size());
  HybridBatch batch;
  batch.votes.resize(indices.size());
  batch.labelled.resize(indices.size());
  parallel_for(indices.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t rec = indices[i];
      Rng rng = Rng::stream(seed, "augment", epoch, rec);
      auto views = strong_views(dataset.image(rec), strong, rng);
      view_a[i] = std::move(views.first);
      view_b[i] = std::move(views.second);
      batch.votes[i] = dataset.encoded_votes(rec);
      batch.labelled[i] = dataset.labelled(rec) ? 1 : 0;
    }
  });
  batch.view_a = images_to_batch(view_a);
  batch.view_b = images_to_batch(view_b);
  return batch;
}

SupervisedBatch assemble_supervised_batch(const Dataset& dataset,
                                          std::span<const std::size_t> indices,
                                          const AugmentPolicy& standard,
                                          std::uint64_t seed, std::uint64_t epoch) {
  std::vector<Image> views(indices.size());
  SupervisedBatch batch;
  batch.votes.resize(indices.size());
  batch.labelled.resize(indices.size());
  parallel_for(indices.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t rec = indices[i];
      Rng rng = Rng::stream(seed, "augment", epoch, rec);
      views[i] = standard_view(dataset.image(rec), standard, rng);
      batch.votes[i] = dataset.encoded_votes(rec);
      batch.labelled[i] = dataset.labelled(rec) ? 1 : 0;
    }
  });
  batch.views = images_to_batch(views);
  return batch;
}

namespace {

// Fixed eval views: streams keyed by ("eval-aug", 0, record), identical at
// every evaluation so the objective is comparable across epochs.
HybridBatch assemble_eval_hybrid_batch(const Dataset& dataset,
                                       std::span<const std::size_t> indices,
                                       const AugmentPolicy& strong,
                                       std::uint64_t seed) {
  std::vector<Image> view_a(indices.size()), view_b(indices.size());
  HybridBatch batch;
  batch.votes.resize(indices.size());
  batch.labelled.resize(indices.size());
  parallel_for(indices.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t rec = indices[i];
      Rng rng = Rng::stream(seed, "eval-aug", 0, rec);
      auto views = strong_views(dataset.image(rec), strong, rng);
      view_a[i] = std::move(views.first);
      view_b[i] = std::move(views.second);
      batch.votes[i] = dataset.encoded_votes(rec);
      batch.labelled[i] = dataset.labelled(rec) ? 1 : 0;
    }
  });
  batch.view_a = images_to_batch(view_a);
  batch.view_b = images_to_batch(view_b);
  return batch;
}

struct EvalAccumulator {
  double contrastive = 0.0;
  double supervised = 0.0;
  double combined = 0.0;
  long batches = 0;

  void add(const LossBreakdown& b) {
    contrastive += b.contrastive;
    supervised += b.supervised;
    combined += b.combined;
    ++batches;
  }
  LossBreakdown mean() const {
    LossBreakdown out;
    if (batches == 0) return out;
    out.contrastive = contrastive / double(batches);
    out.supervised = supervised / double(batches);
    out.combined = combined / double(batches);
    return out;
  }
};

// --------------------------------------------------------------------------
// hybrid / contrastive training
// --------------------------------------------------------------------------

TrainResult train_hybrid_like(const ExperimentConfig& cfg, const Dataset& dataset,
                              const std::filesystem::path& out_dir,
                              bool contrastive_only) {
  const auto slices = dataset.schema.slices();
  std::vector<std::size_t> pool = dataset.split_indices("train");
  {
    const auto unlab = dataset.split_indices("unlabelled");
    pool.insert(pool.end(), unlab.begin(), unlab.end());
  }
  if (pool.empty()) throw DataError("training pool is empty");
  const int batch = std::min<int>(cfg.train.batch_size, int(pool.size()));
  const long steps_per_epoch = std::max<long>(1, long(pool.size()) / batch);

  HybridConfig hc = hybrid_config_from(cfg.train, steps_per_epoch * cfg.train.epochs);
  if (contrastive_only) hc.lambda = 0.0;
  HybridState state = make_hybrid_state(cfg.encoder, cfg.heads.projection_width,
                                        cfg.heads.hidden_width,
                                        cfg.heads.per_sample_norm,
                                        dataset.schema.answer_count(), hc, cfg.seed);

  const auto val_pool = capped_eval_pool(dataset.split_indices("val"),
                                         cfg.train.max_eval_samples, cfg.seed);

  std::ofstream metrics(out_dir / "metrics.csv", std::ios::binary);
  metrics << "step,contrastive,supervised,combined,labelled_count,wall_ms\n";
  std::ofstream val_log(out_dir / "val.csv", std::ios::binary);
  val_log << "epoch,step,objective,contrastive,supervised\n";

  auto evaluate = [&]() -> LossBreakdown {
    EvalAccumulator acc;
    for (std::size_t at = 0; at < val_pool.size(); at += std::size_t(batch)) {
      const std::size_t hi = std::min(val_pool.size(), at + std::size_t(batch));
      const auto eval_batch = assemble_eval_hybrid_batch(
          dataset, std::span(val_pool).subspan(at, hi - at), cfg.augment_strong,
          cfg.seed);
      acc.add(hybrid_eval(state, eval_batch, slices, !contrastive_only));
    }
    return acc.mean();
  };

  TrainResult result;
  result.checkpoint_path = out_dir / "checkpoint.gzckpt";
  double best = std::numeric_limits<double>::infinity();
  double best_contrastive = std::numeric_limits<double>::quiet_NaN();
  int since_best = 0;
  HybridState best_state = state;
  double train_mean_combined = 0.0;

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    std::vector<std::size_t> order = pool;
    Rng order_rng = Rng::stream(cfg.seed, "order", std::uint64_t(epoch));
    order_rng.shuffle(order);

    double epoch_combined = 0.0;
    for (long s = 0; s < steps_per_epoch; ++s) {
      const auto t0 = Clock::now();
      const auto idx = std::span(order).subspan(std::size_t(s) * batch,
                                                std::size_t(batch));
      HybridBatch hb = assemble_hybrid_batch(dataset, idx, cfg.augment_strong,
                                             cfg.seed, std::uint64_t(epoch));
      const LossBreakdown loss = contrastive_only
                                     ? contrastive_step(state, hb)
                                     : hybrid_step(state, hb, slices);
      epoch_combined += loss.combined;
      write_metrics_line(metrics, state.step, loss, ms_since(t0));
    }
    train_mean_combined = epoch_combined / double(steps_per_epoch);
    result.epochs_completed = epoch + 1;

    // Convergence is measured by supervised validation loss (hybrid, when the
    // supervised term is active) or by contrastive validation loss; the
    // combined value is not comparable across steps once the detached
    // denominator moves.
    const bool supervised_objective = !contrastive_only && cfg.train.lambda > 0.0;
    LossBreakdown val = val_pool.empty() ? LossBreakdown{} : evaluate();
    const double objective =
        val_pool.empty()
            ? train_mean_combined
            : (supervised_objective ? val.supervised : val.contrastive);
    val_log << epoch << ',' << state.step << ',' << objective << ','
            << val.contrastive << ',' << val.supervised << '\n';
    std::cout << "epoch " << epoch << " steps " << state.step
              << " train_combined " << train_mean_combined << " val_objective "
              << objective << std::endl;

    if (objective < best) {
      best = objective;
      best_contrastive = val_pool.empty() ? train_mean_combined : val.contrastive;
      best_state = state;
      since_best = 0;
    } else if (++since_best >= cfg.train.patience) {
      result.early_stopped = true;
      break;
    }
  }

  result.best_objective = best;
  result.final_contrastive = best_contrastive;
  result.steps = state.step;

  save_checkpoint(result.checkpoint_path,
                  flatten_groups({{"online/encoder", &best_state.online_encoder},
                                  {"online/projection", &best_state.online_projection},
                                  {"online/predictor", &best_state.online_predictor},
                                  {"online/supervised", &best_state.online_supervised},
                                  {"target/encoder", &best_state.target_encoder},
                                  {"target/projection", &best_state.target_projection}}));
  return result;
}

// --------------------------------------------------------------------------
// purely-supervised pretraining
// --------------------------------------------------------------------------

TrainResult train_pretrain(const ExperimentConfig& cfg, const Dataset& dataset,
                           const std::filesystem::path& out_dir) {
  const auto slices = dataset.schema.slices();
  const std::vector<std::size_t> pool = dataset.split_indices("train");
  if (pool.empty()) throw DataError("pretrain: train split is empty");
  const int batch = std::min<int>(cfg.train.batch_size, int(pool.size()));
  const long steps_per_epoch = std::max<long>(1, long(pool.size()) / batch);

  SupervisedState state = make_supervised_state(
      cfg.encoder, cfg.heads.hidden_width, cfg.heads.per_sample_norm,
      dataset.schema.answer_count(), {cfg.train.lr, cfg.train.beta1, cfg.train.beta2, 1e-8},
      cfg.seed);

  const auto val_pool = capped_eval_pool(dataset.split_indices("val"),
                                         cfg.train.max_eval_samples, cfg.seed);

  std::ofstream metrics(out_dir / "metrics.csv", std::ios::binary);
  metrics << "step,contrastive,supervised,combined,labelled_count,wall_ms\n";
  std::ofstream val_log(out_dir / "val.csv", std::ios::binary);
  val_log << "epoch,step,objective,contrastive,supervised\n";

  auto evaluate = [&]() -> double {
    // Supervised validation loss on deterministic center views.
    double total = 0.0;
    long batches = 0;
    for (std::size_t at = 0; at < val_pool.size(); at += std::size_t(batch)) {
      const std::size_t hi = std::min(val_pool.size(), at + std::size_t(batch));
      const auto idx = std::span(val_pool).subspan(at, hi - at);
      SupervisedBatch sb;
      sb.views = center_batch(dataset, idx, cfg.encoder.in_height);
      sb.votes.reserve(idx.size());
      sb.labelled.reserve(idx.size());
      for (auto rec : idx) {
        sb.votes.push_back(dataset.encoded_votes(rec));
        sb.labelled.push_back(dataset.labelled(rec) ? 1 : 0);
      }
      total += supervised_eval(state, sb, slices).supervised;
      ++batches;
    }
    return batches ? total / double(batches) : 0.0;
  };

  TrainResult result;
  result.checkpoint_path = out_dir / "checkpoint.gzckpt";
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  SupervisedState best_state = state;
  double train_mean = 0.0;

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    std::vector<std::size_t> order = pool;
    Rng order_rng = Rng::stream(cfg.seed, "order", std::uint64_t(epoch));
    order_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (long s = 0; s < steps_per_epoch; ++s) {
      const auto t0 = Clock::now();
      const auto idx = std::span(order).subspan(std::size_t(s) * batch,
                                                std::size_t(batch));
      SupervisedBatch sb = assemble_supervised_batch(dataset, idx, cfg.augment_standard,
                                                     cfg.seed, std::uint64_t(epoch));
      const LossBreakdown loss = supervised_step(state, sb, slices);
      epoch_loss += loss.supervised;
      write_metrics_line(metrics, state.step, loss, ms_since(t0));
    }
    train_mean = epoch_loss / double(steps_per_epoch);
    result.epochs_completed = epoch + 1;

    const double objective = val_pool.empty() ? train_mean : evaluate();
    val_log << epoch << ',' << state.step << ',' << objective << ",0," << objective
            << '\n';
    std::cout << "epoch " << epoch << " steps " << state.step << " train_supervised "
              << train_mean << " val_objective " << objective << std::endl;

    if (objective < best) {
      best = objective;
      best_state = state;
      since_best = 0;
    } else if (++since_best >= cfg.train.patience) {
      result.early_stopped = true;
      break;
    }
  }

  result.best_objective = best;
  result.steps = state.step;
  save_checkpoint(result.checkpoint_path,
                  flatten_groups({{"online/encoder", &best_state.encoder},
                                  {"online/supervised", &best_state.head}}));
  return result;
}

// --------------------------------------------------------------------------
// direct downstream training
// --------------------------------------------------------------------------

struct DirectTrainState {
  EncoderConfig encoder_cfg;
  HeadConfig head_cfg;
  ParameterSet<float> encoder;
  ParameterSet<float> head;
  AdamState<float> optimizer;
  AdamConfig adam;
  long step = 0;
};

DirectTrainState make_direct_state(const ExperimentConfig& cfg, double lr,
                                   std::uint64_t seed) {
  DirectTrainState s;
  s.encoder_cfg = cfg.encoder;
  s.head_cfg = {HeadKind::supervised_predictor, cfg.encoder.representation_width,
                {}, 1, false};  // linear ring head on the representation
  s.encoder = init_encoder_params<float>(s.encoder_cfg, seed ^ 0x01);
  s.head = init_head_params<float>(s.head_cfg, seed ^ 0x05);
  s.adam = {lr, cfg.train.beta1, cfg.train.beta2, 1e-8};
  s.optimizer = AdamState<float>::for_groups({&s.encoder, &s.head});
  return s;
}

double direct_step(DirectTrainState& state, const Tensor<float>& views,
                   std::span<const int> labels) {
  EncoderCache<float> enc_cache;
  HeadCache<float> head_cache;
  Tensor<float> y = encoder_forward(state.encoder_cfg, state.encoder, views, &enc_cache);
  Tensor<float> z = head_forward(state.head_cfg, state.head, y, &head_cache);
  Tensor<float> dz;
  const double loss = bce_loss(z, labels, &dz);
  if (!std::isfinite(loss)) throw NumericError("direct loss went non-finite");

  ParameterSet<float> g_enc = state.encoder.zeros_like();
  ParameterSet<float> g_head = state.head.zeros_like();
  Tensor<float> dy;
  head_backward(state.head_cfg, state.head, head_cache, dz, g_head, &dy);
  encoder_backward(state.encoder_cfg, state.encoder, enc_cache, dy, g_enc, nullptr);
  adam_step(state.adam, state.optimizer, {&state.encoder, &state.head},
            {&g_enc, &g_head});
  state.step += 1;
  return loss;
}

double direct_eval(const DirectTrainState& state, const Dataset& dataset,
                   std::span<const std::size_t> indices, std::span<const int> labels) {
  const Tensor<float> views = center_batch(dataset, indices, state.encoder_cfg.in_height);
  Tensor<float> y = encoder_forward(state.encoder_cfg, state.encoder, views, nullptr);
  Tensor<float> z = head_forward(state.head_cfg, state.head, y, nullptr);
  return bce_loss(z, labels, nullptr);
}

DirectModel train_direct_impl(const ExperimentConfig& cfg, const Dataset& dataset,
                              std::span<const std::size_t> indices,
                              std::span<const int> labels, std::uint64_t seed,
                              std::ostream* metrics, TrainResult* result_out) {
  if (indices.empty()) throw DataError("direct training: no samples");

  // Deterministic 10% validation carve for early stopping.
  std::vector<std::size_t> order(indices.size());
  std::iota(order.begin(), order.end(), 0);
  Rng carve_rng = Rng::stream(seed, "direct-val");
  carve_rng.shuffle(order);
  const std::size_t n_val = std::max<std::size_t>(1, indices.size() / 10);
  std::vector<std::size_t> val_idx, train_idx;
  std::vector<int> val_labels, train_labels;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < n_val) {
      val_idx.push_back(indices[order[i]]);
      val_labels.push_back(labels[order[i]]);
    } else {
      train_idx.push_back(indices[order[i]]);
      train_labels.push_back(labels[order[i]]);
    }
  }
  if (train_idx.empty()) {
    train_idx = val_idx;
    train_labels = val_labels;
  }

  DirectTrainState state = make_direct_state(cfg, cfg.direct.lr, seed);
  const int batch = std::min<int>(cfg.direct.batch_size, int(train_idx.size()));
  const long steps_per_epoch = std::max<long>(1, long(train_idx.size()) / batch);

  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  DirectTrainState best_state = state;
  bool early = false;
  int epochs_done = 0;

  for (int epoch = 0; epoch < cfg.direct.epochs; ++epoch) {
    std::vector<std::size_t> perm(train_idx.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng order_rng = Rng::stream(seed, "direct-order", std::uint64_t(epoch));
    order_rng.shuffle(perm);

    for (long s = 0; s < steps_per_epoch; ++s) {
      const auto t0 = Clock::now();
      std::vector<std::size_t> idx(static_cast<std::size_t>(batch));
      std::vector<int> y(static_cast<std::size_t>(batch));
      for (int j = 0; j < batch; ++j) {
        const std::size_t p = perm[std::size_t(s) * batch + j];
        idx[std::size_t(j)] = train_idx[p];
        y[std::size_t(j)] = train_labels[p];
      }
      std::vector<Image> views(idx.size());
      parallel_for(idx.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
          Rng rng = Rng::stream(seed, "augment", std::uint64_t(epoch), idx[i]);
          views[i] = standard_view(dataset.image(idx[i]), cfg.augment_standard, rng);
        }
      });
      const double loss = direct_step(state, images_to_batch(views), y);
      if (metrics) {
        LossBreakdown b;
        b.supervised = loss;
        b.combined = loss;
        b.labelled_count = batch;
        write_metrics_line(*metrics, state.step, b, ms_since(t0));
      }
    }
    epochs_done = epoch + 1;

    const double objective = direct_eval(state, dataset, val_idx, val_labels);
    if (objective < best) {
      best = objective;
      best_state = state;
      since_best = 0;
    } else if (++since_best >= cfg.direct.patience) {
      early = true;
      break;
    }
  }

  if (result_out) {
    result_out->best_objective = best;
    result_out->steps = state.step;
    result_out->epochs_completed = epochs_done;
    result_out->early_stopped = early;
  }
  DirectModel model;
  model.encoder_cfg = best_state.encoder_cfg;
  model.head_cfg = best_state.head_cfg;
  model.encoder = best_state.encoder;
  model.head = best_state.head;
  return model;
}

TrainResult train_direct(const ExperimentConfig& cfg, const Dataset& dataset,
                         const std::filesystem::path& out_dir) {
  const auto pool = dataset.split_indices("ring_train");
  if (pool.empty()) throw DataError("direct: ring_train split is empty");
  std::vector<int> labels;
  labels.reserve(pool.size());
  for (auto i : pool) {
    if (!dataset.records[i].ring_label)
      throw DataError("direct: record " + dataset.records[i].id + " has no ring label");
    labels.push_back(*dataset.records[i].ring_label);
  }

  std::ofstream metrics(out_dir / "metrics.csv", std::ios::binary);
  metrics << "step,contrastive,supervised,combined,labelled_count,wall_ms\n";

  TrainResult result;
  result.checkpoint_path = out_dir / "checkpoint.gzckpt";
  DirectModel model =
      train_direct_impl(cfg, dataset, pool, labels, cfg.seed, &metrics, &result);
  std::cout << "direct training done: epochs " << result.epochs_completed
            << " best_val " << result.best_objective << std::endl;

  save_checkpoint(result.checkpoint_path,
                  flatten_groups({{"online/encoder", &model.encoder},
                                  {"direct/head", &model.head}}));
  return result;
}

}  // namespace

DirectModel train_direct_model(const ExperimentConfig& cfg, const Dataset& dataset,
                               std::span<const std::size_t> indices,
                               std::span<const int> labels, std::uint64_t seed,
                               std::ostream* metrics) {
  return train_direct_impl(cfg, dataset, indices, labels, seed, metrics, nullptr);
}

std::vector<double> direct_scores(const DirectModel& model, const Dataset& dataset,
                                  std::span<const std::size_t> indices) {
  std::vector<double> scores;
  scores.reserve(indices.size());
  const std::size_t chunk = 64;
  for (std::size_t at = 0; at < indices.size(); at += chunk) {
    const std::size_t hi = std::min(indices.size(), at + chunk);
    const Tensor<float> views =
        center_batch(dataset, indices.subspan(at, hi - at), model.encoder_cfg.in_height);
    Tensor<float> y = encoder_forward(model.encoder_cfg, model.encoder, views, nullptr);
    Tensor<float> z = head_forward(model.head_cfg, model.head, y, nullptr);
    for (std::size_t i = 0; i < z.dim(0); ++i) scores.push_back(double(z.data[i]));
  }
  return scores;
}

double eval_checkpoint_contrastive(const ExperimentConfig& cfg, const Dataset& dataset,
                                   const NamedTensors& checkpoint) {
  if (!has_group(checkpoint, "target/encoder"))
    throw CheckpointError("checkpoint has no target network, contrastive loss undefined");

  HybridConfig hc = hybrid_config_from(cfg.train, 0);
  HybridState state = make_hybrid_state(cfg.encoder, cfg.heads.projection_width,
                                        cfg.heads.hidden_width,
                                        cfg.heads.per_sample_norm,
                                        dataset.schema.answer_count(), hc, cfg.seed);
  apply_group(checkpoint, "online/encoder", state.online_encoder);
  apply_group(checkpoint, "online/projection", state.online_projection);
  apply_group(checkpoint, "online/predictor", state.online_predictor);
  apply_group(checkpoint, "target/encoder", state.target_encoder);
  apply_group(checkpoint, "target/projection", state.target_projection);

  const auto val_pool = capped_eval_pool(dataset.split_indices("val"),
                                         cfg.train.max_eval_samples, cfg.seed);
  if (val_pool.empty()) throw DataError("contrastive eval: val split is empty");

  EvalAccumulator acc;
  const std::size_t batch = std::size_t(std::max(1, cfg.train.batch_size));
  for (std::size_t at = 0; at < val_pool.size(); at += batch) {
    const std::size_t hi = std::min(val_pool.size(), at + batch);
    const auto eval_batch = assemble_eval_hybrid_batch(
        dataset, std::span(val_pool).subspan(at, hi - at), cfg.augment_strong,
        cfg.seed);
    acc.add(hybrid_eval(state, eval_batch, {}, false));
  }
  return acc.mean().contrastive;
}

TrainResult train_model(const ExperimentConfig& cfg, const Dataset& dataset,
                        const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  switch (cfg.train.mode) {
    case TrainMode::hybrid:
      return train_hybrid_like(cfg, dataset, out_dir, false);
    case TrainMode::contrastive:
      return train_hybrid_like(cfg, dataset, out_dir, true);
    case TrainMode::pretrain:
      return train_pretrain(cfg, dataset, out_dir);
    case TrainMode::direct:
      return train_direct(cfg, dataset, out_dir);
  }
  throw ConfigError("train_model: unknown mode");
}

}  // namespace gzhybrid
