#include "gzhybrid/byol.hpp"

#include <cmath>
#include <sstream>

#include "gzhybrid/errors.hpp"

namespace gzhybrid {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNormFloor = 1e-30;

// d(p, t) = 2 - 2 cos(p, t) per row; optionally the gradient wrt p, scaled.
double cosine_distance_rows(const Tensor<float>& pred, const Tensor<float>& targ,
                            double row_scale, Tensor<float>* dpred) {
  const std::size_t n = pred.dim(0), d = pred.dim(1);
  if (dpred) *dpred = Tensor<float>(pred.shape);
  double total = 0.0;
  for (std::size_t ni = 0; ni < n; ++ni) {
    const float* p = pred.ptr() + ni * d;
    const float* t = targ.ptr() + ni * d;
    double pn = 0.0, tn = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      pn += double(p[i]) * p[i];
      tn += double(t[i]) * t[i];
      dot += double(p[i]) * t[i];
    }
    pn = std::sqrt(pn);
    tn = std::sqrt(tn);
    if (pn < kNormFloor || tn < kNormFloor)
      throw NumericError("contrastive loss: zero-norm vector in batch row " +
                         std::to_string(ni));
    const double c = dot / (pn * tn);
    total += 2.0 - 2.0 * c;
    if (dpred) {
      float* g = dpred->ptr() + ni * d;
      const double s = -2.0 * row_scale;
      for (std::size_t i = 0; i < d; ++i)
        g[i] = float(s * (double(t[i]) / (pn * tn) - c * double(p[i]) / (pn * pn)));
    }
  }
  return total;
}

// Supervised term over labelled rows: mean of -log L. Fills draw (scaled by
// grad_scale) when requested.
double supervised_term(const Tensor<float>& raw, const std::vector<VoteVector>& votes,
                       const std::vector<std::uint8_t>& labelled,
                       const std::vector<QuestionSlice>& slices, double grad_scale,
                       Tensor<float>* draw, int* labelled_count) {
  const std::size_t n = raw.dim(0), a = raw.dim(1);
  int count = 0;
  for (std::size_t ni = 0; ni < n; ++ni)
    if (labelled[ni]) ++count;
  *labelled_count = count;
  if (draw) *draw = Tensor<float>(raw.shape);
  if (count == 0) return 0.0;

  const double inv = 1.0 / double(count);
  double total = 0.0;
  std::vector<double> raw_row(a);
  for (std::size_t ni = 0; ni < n; ++ni) {
    if (!labelled[ni]) continue;
    const float* r = raw.ptr() + ni * a;
    for (std::size_t i = 0; i < a; ++i) raw_row[i] = double(r[i]);
    const DirichletPrediction pred = link(raw_row);
    const auto mql = multi_question_loss(votes[ni], pred.alpha, slices, false);
    total += -mql.total * inv;
    if (draw) {
      const std::vector<double> lg = link_grad(raw_row);
      float* g = draw->ptr() + ni * a;
      std::size_t qi = 0;  // per_question entries are in slice order
      for (const auto& slice : slices) {
        const auto& q = mql.per_question[qi++];
        for (std::size_t i = slice.begin; i < slice.end; ++i)
          g[i] = float(grad_scale * inv * (-q.grad[i - slice.begin]) * lg[i]);
      }
    }
  }
  return total;
}

}  // namespace

HybridState make_hybrid_state(const EncoderConfig& encoder_cfg, int projection_width,
                              int hidden_width, bool per_sample_norm,
                              std::size_t answer_count, const HybridConfig& config,
                              std::uint64_t seed) {
  encoder_cfg.validate();
  HybridState s;
  s.encoder_cfg = encoder_cfg;
  s.config = config;

  s.projection_cfg = {HeadKind::projection, encoder_cfg.representation_width,
                      {hidden_width}, projection_width, per_sample_norm};
  s.predictor_cfg = {HeadKind::contrastive_predictor, projection_width,
                     {hidden_width}, projection_width, per_sample_norm};
  s.supervised_cfg = {HeadKind::supervised_predictor, encoder_cfg.representation_width,
                      {hidden_width}, int(answer_count), per_sample_norm};
  if (s.projection_cfg.output_width != s.predictor_cfg.output_width)
    throw ConfigError("projection and contrastive predictor widths must match");

  // Per-group init streams: parameters of one network do not depend on which
  // other networks exist (pure contrastive and hybrid share initializations).
  s.online_encoder = init_encoder_params<float>(s.encoder_cfg, seed ^ 0x01);
  s.online_projection = init_head_params<float>(s.projection_cfg, seed ^ 0x02);
  s.online_predictor = init_head_params<float>(s.predictor_cfg, seed ^ 0x03);
  s.online_supervised = init_head_params<float>(s.supervised_cfg, seed ^ 0x04);
  s.target_encoder = s.online_encoder;
  s.target_projection = s.online_projection;

  s.optimizer = AdamState<float>::for_groups(
      {&s.online_encoder, &s.online_projection, &s.online_predictor,
       &s.online_supervised});
  return s;
}

void ema_update(const ParameterSet<float>& online, ParameterSet<float>& target,
                double decay) {
  if (online.count() != target.count())
    throw std::invalid_argument("ema_update: parameter group mismatch");
  for (std::size_t ti = 0; ti < online.count(); ++ti) {
    const auto& src = online.tensor(ti);
    auto& dst = target.tensor(ti);
    if (!src.same_shape(dst))
      throw std::invalid_argument("ema_update: shape mismatch on " +
                                  online.names()[ti]);
    for (std::size_t j = 0; j < src.size(); ++j)
      dst.data[j] = float(decay * double(dst.data[j]) +
                          (1.0 - decay) * double(src.data[j]));
  }
}

double contrastive_loss(std::span<const float> prediction,
                        std::span<const float> target_projection) {
  if (prediction.size() != target_projection.size())
    throw std::invalid_argument("contrastive_loss: length mismatch");
  double pn = 0.0, tn = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    pn += double(prediction[i]) * prediction[i];
    tn += double(target_projection[i]) * target_projection[i];
    dot += double(prediction[i]) * target_projection[i];
  }
  pn = std::sqrt(pn);
  tn = std::sqrt(tn);
  if (pn < kNormFloor || tn < kNormFloor)
    throw NumericError("contrastive_loss: zero-norm input");
  return 2.0 - 2.0 * dot / (pn * tn);
}

double effective_ema_decay(const HybridConfig& config, long step) {
  if (!config.ema_schedule) return config.ema_decay;
  const long total = std::max<long>(config.ema_total_steps, 1);
  const double frac = std::min(1.0, double(step) / double(total));
  return 1.0 - (1.0 - config.ema_base) * 0.5 * (std::cos(kPi * frac) + 1.0);
}

namespace {

LossBreakdown hybrid_step_impl(HybridState& state, const HybridBatch& batch,
                               const std::vector<QuestionSlice>& slices,
                               bool evaluate_supervised, bool update) {
  const std::size_t n = batch.view_a.dim(0);
  if (n == 0) throw std::invalid_argument("hybrid step: empty batch");
  if (batch.view_b.dim(0) != n ||
      (evaluate_supervised &&
       (batch.votes.size() != n || batch.labelled.size() != n)))
    throw std::invalid_argument("hybrid step: batch fields disagree on size");

  // Online forward, both views.
  EncoderCache<float> enc_cache_a, enc_cache_b;
  HeadCache<float> proj_cache_a, proj_cache_b, pred_cache_a, pred_cache_b;
  Tensor<float> ya = encoder_forward(state.encoder_cfg, state.online_encoder,
                                     batch.view_a, update ? &enc_cache_a : nullptr);
  Tensor<float> yb = encoder_forward(state.encoder_cfg, state.online_encoder,
                                     batch.view_b, update ? &enc_cache_b : nullptr);
  Tensor<float> za = head_forward(state.projection_cfg, state.online_projection, ya,
                                  update ? &proj_cache_a : nullptr);
  Tensor<float> zb = head_forward(state.projection_cfg, state.online_projection, yb,
                                  update ? &proj_cache_b : nullptr);
  Tensor<float> pa = head_forward(state.predictor_cfg, state.online_predictor, za,
                                  update ? &pred_cache_a : nullptr);
  Tensor<float> pb = head_forward(state.predictor_cfg, state.online_predictor, zb,
                                  update ? &pred_cache_b : nullptr);

  // Target forward (gradient never flows here).
  Tensor<float> ta = encoder_forward(state.encoder_cfg, state.target_encoder,
                                     batch.view_a, nullptr);
  Tensor<float> tb = encoder_forward(state.encoder_cfg, state.target_encoder,
                                     batch.view_b, nullptr);
  Tensor<float> qa = head_forward(state.projection_cfg, state.target_projection, ta,
                                  nullptr);
  Tensor<float> qb = head_forward(state.projection_cfg, state.target_projection, tb,
                                  nullptr);

  // Symmetrized contrastive term, averaged over batch and both directions.
  const double row_scale = 0.5 / double(n);
  Tensor<float> dpa, dpb;
  const double sum_ab =
      cosine_distance_rows(pa, qb, row_scale, update ? &dpa : nullptr);
  const double sum_ba =
      cosine_distance_rows(pb, qa, row_scale, update ? &dpb : nullptr);
  LossBreakdown out;
  out.contrastive = row_scale * (sum_ab + sum_ba);

  // Supervised term on the online representation of view A (and optionally B).
  double sup_scale = 0.0;
  if (evaluate_supervised) {
    switch (state.config.eq3_denominator) {
      case Eq3Denominator::detached:
        sup_scale = state.config.lambda /
                    std::max(out.contrastive, state.config.denominator_floor);
        break;
      case Eq3Denominator::off:
        sup_scale = state.config.lambda;
        break;
    }
  }

  HeadCache<float> sup_cache_a, sup_cache_b;
  Tensor<float> draw_a, draw_b;
  const bool sup_grad = update && evaluate_supervised && state.config.lambda > 0.0;
  if (evaluate_supervised) {
    Tensor<float> raw_a = head_forward(state.supervised_cfg, state.online_supervised,
                                       ya, sup_grad ? &sup_cache_a : nullptr);
    int labelled_count = 0;
    double sup = supervised_term(raw_a, batch.votes, batch.labelled, slices,
                                 sup_scale, sup_grad ? &draw_a : nullptr,
                                 &labelled_count);
    out.labelled_count = labelled_count;
    if (state.config.supervised_both_views) {
      Tensor<float> raw_b = head_forward(state.supervised_cfg, state.online_supervised,
                                         yb, sup_grad ? &sup_cache_b : nullptr);
      int lb = 0;
      const double sup_b = supervised_term(raw_b, batch.votes, batch.labelled, slices,
                                           0.5 * sup_scale,
                                           sup_grad ? &draw_b : nullptr, &lb);
      sup = 0.5 * (sup + sup_b);
      if (sup_grad)
        for (auto& v : draw_a.data) v *= 0.5f;
    }
    out.supervised = sup;
  }

  out.combined = out.contrastive + sup_scale * out.supervised;
  if (!std::isfinite(out.combined)) {
    std::ostringstream msg;
    msg << "non-finite loss: contrastive=" << out.contrastive
        << " supervised=" << out.supervised << " combined=" << out.combined
        << " labelled=" << out.labelled_count;
    throw NumericError(msg.str());
  }
  if (!update) return out;

  // Backward. Gradients accumulate into zeroed mirrors of the online groups.
  ParameterSet<float> g_enc = state.online_encoder.zeros_like();
  ParameterSet<float> g_proj = state.online_projection.zeros_like();
  ParameterSet<float> g_pred = state.online_predictor.zeros_like();
  ParameterSet<float> g_sup = state.online_supervised.zeros_like();

  Tensor<float> dza, dzb;
  head_backward(state.predictor_cfg, state.online_predictor, pred_cache_a, dpa,
                g_pred, &dza);
  head_backward(state.predictor_cfg, state.online_predictor, pred_cache_b, dpb,
                g_pred, &dzb);
  Tensor<float> dya, dyb;
  head_backward(state.projection_cfg, state.online_projection, proj_cache_a, dza,
                g_proj, &dya);
  head_backward(state.projection_cfg, state.online_projection, proj_cache_b, dzb,
                g_proj, &dyb);

  if (sup_grad) {
    Tensor<float> dy_sup;
    head_backward(state.supervised_cfg, state.online_supervised, sup_cache_a, draw_a,
                  g_sup, &dy_sup);
    for (std::size_t i = 0; i < dya.size(); ++i) dya.data[i] += dy_sup.data[i];
    if (state.config.supervised_both_views) {
      Tensor<float> dy_sup_b;
      head_backward(state.supervised_cfg, state.online_supervised, sup_cache_b, draw_b,
                    g_sup, &dy_sup_b);
      for (std::size_t i = 0; i < dyb.size(); ++i) dyb.data[i] += dy_sup_b.data[i];
    }
  }

  encoder_backward(state.encoder_cfg, state.online_encoder, enc_cache_a, dya, g_enc,
                   nullptr);
  encoder_backward(state.encoder_cfg, state.online_encoder, enc_cache_b, dyb, g_enc,
                   nullptr);

  adam_step(state.config.adam, state.optimizer,
            {&state.online_encoder, &state.online_projection, &state.online_predictor,
             &state.online_supervised},
            {&g_enc, &g_proj, &g_pred, &g_sup});
  state.step += 1;

  const double decay = effective_ema_decay(state.config, state.step);
  ema_update(state.online_encoder, state.target_encoder, decay);
  ema_update(state.online_projection, state.target_projection, decay);
  return out;
}

}  // namespace

LossBreakdown hybrid_step(HybridState& state, const HybridBatch& batch,
                          const std::vector<QuestionSlice>& slices) {
  return hybrid_step_impl(state, batch, slices, true, true);
}

LossBreakdown contrastive_step(HybridState& state, const HybridBatch& batch) {
  // Equivalent to hybrid with lambda = 0; the supervised head is not touched.
  const double saved_lambda = state.config.lambda;
  state.config.lambda = 0.0;
  LossBreakdown out = hybrid_step_impl(state, batch, {}, false, true);
  state.config.lambda = saved_lambda;
  return out;
}

LossBreakdown hybrid_eval(const HybridState& state, const HybridBatch& batch,
                          const std::vector<QuestionSlice>& slices,
                          bool include_supervised) {
  return hybrid_step_impl(const_cast<HybridState&>(state), batch, slices,
                          include_supervised, false);
}

SupervisedState make_supervised_state(const EncoderConfig& encoder_cfg,
                                      int hidden_width, bool per_sample_norm,
                                      std::size_t answer_count, const AdamConfig& adam,
                                      std::uint64_t seed) {
  encoder_cfg.validate();
  SupervisedState s;
  s.encoder_cfg = encoder_cfg;
  s.supervised_cfg = {HeadKind::supervised_predictor, encoder_cfg.representation_width,
                      {hidden_width}, int(answer_count), per_sample_norm};
  s.encoder = init_encoder_params<float>(encoder_cfg, seed ^ 0x01);
  s.head = init_head_params<float>(s.supervised_cfg, seed ^ 0x04);
  s.adam = adam;
  s.optimizer = AdamState<float>::for_groups({&s.encoder, &s.head});
  return s;
}

namespace {

LossBreakdown supervised_impl(SupervisedState& state, const SupervisedBatch& batch,
                              const std::vector<QuestionSlice>& slices, bool update) {
  const std::size_t n = batch.views.dim(0);
  if (n == 0 || batch.votes.size() != n || batch.labelled.size() != n)
    throw std::invalid_argument("supervised step: batch fields disagree on size");
  int labelled = 0;
  for (auto f : batch.labelled) labelled += f ? 1 : 0;
  if (labelled == 0)
    throw DataError("supervised step: batch has no labelled samples, nothing to train");

  EncoderCache<float> enc_cache;
  HeadCache<float> head_cache;
  Tensor<float> y = encoder_forward(state.encoder_cfg, state.encoder, batch.views,
                                    update ? &enc_cache : nullptr);
  Tensor<float> raw = head_forward(state.supervised_cfg, state.head, y,
                                   update ? &head_cache : nullptr);
  Tensor<float> draw;
  int count = 0;
  LossBreakdown out;
  out.supervised = supervised_term(raw, batch.votes, batch.labelled, slices, 1.0,
                                   update ? &draw : nullptr, &count);
  out.labelled_count = count;
  out.combined = out.supervised;
  if (!std::isfinite(out.combined))
    throw NumericError("supervised loss went non-finite");
  if (!update) return out;

  ParameterSet<float> g_enc = state.encoder.zeros_like();
  ParameterSet<float> g_head = state.head.zeros_like();
  Tensor<float> dy;
  head_backward(state.supervised_cfg, state.head, head_cache, draw, g_head, &dy);
  encoder_backward(state.encoder_cfg, state.encoder, enc_cache, dy, g_enc, nullptr);
  adam_step(state.adam, state.optimizer, {&state.encoder, &state.head},
            {&g_enc, &g_head});
  state.step += 1;
  return out;
}

}  // namespace

LossBreakdown supervised_step(SupervisedState& state, const SupervisedBatch& batch,
                              const std::vector<QuestionSlice>& slices) {
  return supervised_impl(state, batch, slices, true);
}

LossBreakdown supervised_eval(const SupervisedState& state, const SupervisedBatch& batch,
                              const std::vector<QuestionSlice>& slices) {
  return supervised_impl(const_cast<SupervisedState&>(state), batch, slices, false);
}

}  // namespace gzhybrid
