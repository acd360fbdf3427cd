#pragma once

#include <cmath>
#include <cstdint>
#include <type_traits>
#include <string>
#include <vector>

#include "gzhybrid/errors.hpp"
#include "gzhybrid/parallel.hpp"
#include "gzhybrid/rng.hpp"
#include "gzhybrid/tensor.hpp"

namespace gzhybrid {

// ---------------------------------------------------------------------------
// Configs. Architecture is configuration, not code: the encoder is a stack of
// strided convolutions ending in a global average pool, heads are small MLPs.
// ---------------------------------------------------------------------------

struct ConvStage {
  int filters = 0;
  int kernel = 3;  // odd; padding is kernel/2
  int stride = 2;
};

struct EncoderConfig {
  int in_channels = 3;
  int in_height = 64;
  int in_width = 64;
  std::vector<ConvStage> stages = {{16, 3, 2}, {32, 3, 2}, {64, 3, 2}, {64, 3, 2}};
  int representation_width = 64;  // equals the last stage's filter count
  bool normalize_representation = false;  // per-sample norm on the pooled output

  void validate() const {
    if (in_channels <= 0 || in_height <= 0 || in_width <= 0)
      throw ConfigError("encoder: input dimensions must be positive");
    if (stages.empty()) throw ConfigError("encoder: needs at least one conv stage");
    for (const auto& s : stages) {
      if (s.filters <= 0 || s.kernel <= 0 || s.stride <= 0)
        throw ConfigError("encoder: conv stage fields must be positive");
      if (s.kernel % 2 == 0) throw ConfigError("encoder: kernel size must be odd");
    }
    if (representation_width < 16)
      throw ConfigError("encoder: representation width must be >= 16");
    if (stages.back().filters != representation_width)
      throw ConfigError(
          "encoder: representation width must equal the last stage's filters "
          "(the conv stack is globally pooled)");
  }
};

enum class HeadKind { projection, contrastive_predictor, supervised_predictor };

struct HeadConfig {
  HeadKind kind = HeadKind::projection;
  int input_width = 64;
  std::vector<int> hidden = {128};
  int output_width = 32;
  bool per_sample_norm = true;  // normalization on hidden activations

  void validate() const {
    if (input_width <= 0 || output_width <= 0)
      throw ConfigError("head: widths must be positive");
    for (int h : hidden)
      if (h <= 0) throw ConfigError("head: hidden widths must be positive");
  }
};

// ---------------------------------------------------------------------------
// Parameter initialization: fan-in-scaled uniform weights, zero biases.
// ---------------------------------------------------------------------------

template <typename T>
inline void init_uniform(Tensor<T>& w, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / double(fan_in));
  for (auto& v : w.data) v = T(rng.uniform(-limit, limit));
}

template <typename T>
ParameterSet<T> init_encoder_params(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = Rng::stream(seed, "init-encoder");
  ParameterSet<T> params;
  int in_c = cfg.in_channels;
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const auto& s = cfg.stages[i];
    auto& w = params.add("conv" + std::to_string(i) + "/weight",
                         {std::size_t(s.filters), std::size_t(in_c),
                          std::size_t(s.kernel), std::size_t(s.kernel)});
    init_uniform(w, std::size_t(in_c) * s.kernel * s.kernel, rng);
    params.add("conv" + std::to_string(i) + "/bias", {std::size_t(s.filters)});
    in_c = s.filters;
  }
  return params;
}

template <typename T>
ParameterSet<T> init_head_params(const HeadConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = Rng::stream(seed, "init-head");
  ParameterSet<T> params;
  int in = cfg.input_width;
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
    auto& w = params.add("fc" + std::to_string(i) + "/weight",
                         {std::size_t(cfg.hidden[i]), std::size_t(in)});
    init_uniform(w, std::size_t(in), rng);
    params.add("fc" + std::to_string(i) + "/bias", {std::size_t(cfg.hidden[i])});
    in = cfg.hidden[i];
  }
  auto& w = params.add("out/weight", {std::size_t(cfg.output_width), std::size_t(in)});
  init_uniform(w, std::size_t(in), rng);
  params.add("out/bias", {std::size_t(cfg.output_width)});
  return params;
}

// ---------------------------------------------------------------------------
// Layer kernels. Batch dimension is parallelized; parameter-gradient
// accumulation is reduced in sample order so results do not depend on the
// worker count.
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void require_finite(const Tensor<T>& t, const std::string& layer) {
  if (!t.all_finite())
    throw NumericError("non-finite activations after layer " + layer);
}

template <typename T>
void im2col(const T* src, int c, int h, int w, int k, int stride, int pad, int ho,
            int wo, T* col) {
  // col layout: [ho*wo, c*k*k]; padding positions hold zero.
  const int kk = k * k;
  const std::size_t ckk = std::size_t(c) * kk;
  for (int oy = 0; oy < ho; ++oy) {
    const int iy0 = oy * stride - pad;
    for (int ox = 0; ox < wo; ++ox) {
      const int ix0 = ox * stride - pad;
      T* dst = col + (std::size_t(oy) * wo + ox) * ckk;
      for (int ci = 0; ci < c; ++ci) {
        const T* plane = src + std::size_t(ci) * h * w;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = iy0 + ky;
          T* d = dst + std::size_t(ci) * kk + std::size_t(ky) * k;
          if (iy < 0 || iy >= h) {
            for (int kx = 0; kx < k; ++kx) d[kx] = T(0);
            continue;
          }
          const T* row = plane + std::size_t(iy) * w;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ix0 + kx;
            d[kx] = (ix < 0 || ix >= w) ? T(0) : row[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, int c, int h, int w, int k, int stride, int pad,
                int ho, int wo, T* dst) {
  const int kk = k * k;
  const std::size_t ckk = std::size_t(c) * kk;
  for (int oy = 0; oy < ho; ++oy) {
    const int iy0 = oy * stride - pad;
    for (int ox = 0; ox < wo; ++ox) {
      const int ix0 = ox * stride - pad;
      const T* srcp = col + (std::size_t(oy) * wo + ox) * ckk;
      for (int ci = 0; ci < c; ++ci) {
        T* plane = dst + std::size_t(ci) * h * w;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = iy0 + ky;
          if (iy < 0 || iy >= h) continue;
          T* row = plane + std::size_t(iy) * w;
          const T* sp = srcp + std::size_t(ci) * kk + std::size_t(ky) * k;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ix0 + kx;
            if (ix >= 0 && ix < w) row[ix] += sp[kx];
          }
        }
      }
    }
  }
}

// Convolution as im2col plus per-position dot products; the contiguous inner
// loops are what the compiler vectorizes.
template <typename T>
void conv2d_forward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b,
                    int stride, Tensor<T>& out) {
  const int n = int(in.dim(0)), c = int(in.dim(1)), h = int(in.dim(2)), wd = int(in.dim(3));
  const int f = int(w.dim(0)), k = int(w.dim(2));
  const int pad = k / 2;
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (wd + 2 * pad - k) / stride + 1;
  out = Tensor<T>({std::size_t(n), std::size_t(f), std::size_t(ho), std::size_t(wo)});
  const std::size_t ckk = std::size_t(c) * k * k;
  const std::size_t positions = std::size_t(ho) * wo;

  parallel_for(std::size_t(n), [&](std::size_t lo, std::size_t hi) {
    std::vector<T> col(positions * ckk);
    for (std::size_t ni = lo; ni < hi; ++ni) {
      const T* src = in.ptr() + ni * std::size_t(c) * h * wd;
      T* dst = out.ptr() + ni * std::size_t(f) * positions;
      im2col(src, c, h, wd, k, stride, pad, ho, wo, col.data());
      for (std::size_t p = 0; p < positions; ++p) {
        const T* cp = col.data() + p * ckk;
        for (int fi = 0; fi < f; ++fi) {
          const T* wf = w.ptr() + std::size_t(fi) * ckk;
          T acc = b.data[std::size_t(fi)];
          for (std::size_t i = 0; i < ckk; ++i) acc += wf[i] * cp[i];
          dst[std::size_t(fi) * positions + p] = acc;
        }
      }
    }
  });
}

template <typename T>
void conv2d_backward(const Tensor<T>& in, const Tensor<T>& w, int stride,
                     const Tensor<T>& dout, Tensor<T>& dw, Tensor<T>& db,
                     Tensor<T>* din) {
  const int n = int(in.dim(0)), c = int(in.dim(1)), h = int(in.dim(2)), wd = int(in.dim(3));
  const int f = int(w.dim(0)), k = int(w.dim(2));
  const int pad = k / 2;
  const int ho = int(dout.dim(2)), wo = int(dout.dim(3));
  const std::size_t ckk = std::size_t(c) * k * k;
  const std::size_t positions = std::size_t(ho) * wo;

  // Per-sample parameter-gradient slots, reduced in sample order afterwards.
  std::vector<Tensor<T>> dw_slots(static_cast<std::size_t>(n));
  std::vector<Tensor<T>> db_slots(static_cast<std::size_t>(n));
  if (din) *din = Tensor<T>(in.shape);

  parallel_for(std::size_t(n), [&](std::size_t lo, std::size_t hi) {
    std::vector<T> col(positions * ckk);
    std::vector<T> dcol;
    if (din) dcol.resize(positions * ckk);
    for (std::size_t ni = lo; ni < hi; ++ni) {
      dw_slots[ni] = Tensor<T>(w.shape);
      db_slots[ni] = Tensor<T>({std::size_t(f)});
      const T* src = in.ptr() + ni * std::size_t(c) * h * wd;
      const T* gout = dout.ptr() + ni * std::size_t(f) * positions;
      im2col(src, c, h, wd, k, stride, pad, ho, wo, col.data());
      if (din) std::fill(dcol.begin(), dcol.end(), T(0));

      T* dwp = dw_slots[ni].ptr();
      for (std::size_t p = 0; p < positions; ++p) {
        const T* cp = col.data() + p * ckk;
        T* dcp = din ? dcol.data() + p * ckk : nullptr;
        for (int fi = 0; fi < f; ++fi) {
          const T g = gout[std::size_t(fi) * positions + p];
          if (g == T(0)) continue;
          db_slots[ni].data[std::size_t(fi)] += g;
          T* dwf = dwp + std::size_t(fi) * ckk;
          const T* wf = w.ptr() + std::size_t(fi) * ckk;
          if (dcp) {
            for (std::size_t i = 0; i < ckk; ++i) {
              dwf[i] += g * cp[i];
              dcp[i] += g * wf[i];
            }
          } else {
            for (std::size_t i = 0; i < ckk; ++i) dwf[i] += g * cp[i];
          }
        }
      }
      if (din)
        col2im_add(dcol.data(), c, h, wd, k, stride, pad, ho, wo,
                   din->ptr() + ni * std::size_t(c) * h * wd);
    }
  });

  dw = Tensor<T>(w.shape);
  db = Tensor<T>({std::size_t(f)});
  for (std::size_t ni = 0; ni < std::size_t(n); ++ni) {
    for (std::size_t i = 0; i < dw.size(); ++i) dw.data[i] += dw_slots[ni].data[i];
    for (std::size_t i = 0; i < db.size(); ++i) db.data[i] += db_slots[ni].data[i];
  }
}

template <typename T>
void relu_forward(Tensor<T>& x) {
  for (auto& v : x.data)
    if (v < T(0)) v = T(0);
}

// dx = dy masked by (post-activation > 0); exact zeros get zero gradient.
template <typename T>
void relu_backward(const Tensor<T>& post, Tensor<T>& dy) {
  for (std::size_t i = 0; i < post.size(); ++i)
    if (post.data[i] <= T(0)) dy.data[i] = T(0);
}

template <typename T>
void global_avg_pool_forward(const Tensor<T>& in, Tensor<T>& out) {
  const std::size_t n = in.dim(0), c = in.dim(1), hw = in.dim(2) * in.dim(3);
  out = Tensor<T>({n, c});
  const T inv = T(1) / T(hw);
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ni = lo; ni < hi; ++ni)
      for (std::size_t ci = 0; ci < c; ++ci) {
        const T* p = in.ptr() + (ni * c + ci) * hw;
        T acc = T(0);
        for (std::size_t i = 0; i < hw; ++i) acc += p[i];
        out.data[ni * c + ci] = acc * inv;
      }
  });
}

template <typename T>
void global_avg_pool_backward(const std::vector<std::size_t>& in_shape,
                              const Tensor<T>& dout, Tensor<T>& din) {
  const std::size_t n = in_shape[0], c = in_shape[1], hw = in_shape[2] * in_shape[3];
  din = Tensor<T>(in_shape);
  const T inv = T(1) / T(hw);
  for (std::size_t ni = 0; ni < n; ++ni)
    for (std::size_t ci = 0; ci < c; ++ci) {
      const T g = dout.data[ni * c + ci] * inv;
      T* p = din.ptr() + (ni * c + ci) * hw;
      for (std::size_t i = 0; i < hw; ++i) p[i] = g;
    }
}

template <typename T>
void dense_forward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& b,
                   Tensor<T>& out) {
  const std::size_t n = in.dim(0), icount = in.dim(1), ocount = w.dim(0);
  out = Tensor<T>({n, ocount});
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ni = lo; ni < hi; ++ni) {
      const T* x = in.ptr() + ni * icount;
      T* y = out.ptr() + ni * ocount;
      for (std::size_t o = 0; o < ocount; ++o) {
        const T* wr = w.ptr() + o * icount;
        T acc = b.data[o];
        for (std::size_t i = 0; i < icount; ++i) acc += wr[i] * x[i];
        y[o] = acc;
      }
    }
  });
}

template <typename T>
void dense_backward(const Tensor<T>& in, const Tensor<T>& w, const Tensor<T>& dout,
                    Tensor<T>& dw, Tensor<T>& db, Tensor<T>* din) {
  const std::size_t n = in.dim(0), icount = in.dim(1), ocount = w.dim(0);
  dw = Tensor<T>(w.shape);
  db = Tensor<T>({ocount});
  if (din) {
    *din = Tensor<T>(in.shape);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t ni = lo; ni < hi; ++ni) {
        const T* g = dout.ptr() + ni * ocount;
        T* gx = din->ptr() + ni * icount;
        for (std::size_t o = 0; o < ocount; ++o) {
          const T* wr = w.ptr() + o * icount;
          const T go = g[o];
          if (go == T(0)) continue;
          for (std::size_t i = 0; i < icount; ++i) gx[i] += go * wr[i];
        }
      }
    });
  }
  // Parameter gradients in sample order (cheap relative to the forward pass).
  for (std::size_t ni = 0; ni < n; ++ni) {
    const T* x = in.ptr() + ni * icount;
    const T* g = dout.ptr() + ni * ocount;
    for (std::size_t o = 0; o < ocount; ++o) {
      const T go = g[o];
      db.data[o] += go;
      if (go == T(0)) continue;
      T* dwr = dw.ptr() + o * icount;
      for (std::size_t i = 0; i < icount; ++i) dwr[i] += go * x[i];
    }
  }
}

// Per-sample normalization over the feature axis, no learned scale/shift.
template <typename T>
void row_norm_forward(const Tensor<T>& in, Tensor<T>& out, T eps = T(1e-5)) {
  const std::size_t n = in.dim(0), d = in.dim(1);
  out = Tensor<T>({n, d});
  for (std::size_t ni = 0; ni < n; ++ni) {
    const T* x = in.ptr() + ni * d;
    T* y = out.ptr() + ni * d;
    T mean = T(0);
    for (std::size_t i = 0; i < d; ++i) mean += x[i];
    mean /= T(d);
    T var = T(0);
    for (std::size_t i = 0; i < d; ++i) {
      const T c = x[i] - mean;
      var += c * c;
    }
    var /= T(d);
    const T inv = T(1) / std::sqrt(var + eps);
    for (std::size_t i = 0; i < d; ++i) y[i] = (x[i] - mean) * inv;
  }
}

template <typename T>
void row_norm_backward(const Tensor<T>& in, const Tensor<T>& normed,
                       const Tensor<T>& dout, Tensor<T>& din, T eps = T(1e-5)) {
  const std::size_t n = in.dim(0), d = in.dim(1);
  din = Tensor<T>(in.shape);
  for (std::size_t ni = 0; ni < n; ++ni) {
    const T* x = in.ptr() + ni * d;
    const T* y = normed.ptr() + ni * d;
    const T* g = dout.ptr() + ni * d;
    T* gx = din.ptr() + ni * d;
    T mean = T(0);
    for (std::size_t i = 0; i < d; ++i) mean += x[i];
    mean /= T(d);
    T var = T(0);
    for (std::size_t i = 0; i < d; ++i) {
      const T c = x[i] - mean;
      var += c * c;
    }
    var /= T(d);
    const T inv = T(1) / std::sqrt(var + eps);
    T gmean = T(0), gdoty = T(0);
    for (std::size_t i = 0; i < d; ++i) {
      gmean += g[i];
      gdoty += g[i] * y[i];
    }
    gmean /= T(d);
    gdoty /= T(d);
    for (std::size_t i = 0; i < d; ++i)
      gx[i] = inv * (g[i] - gmean - y[i] * gdoty);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Encoder: [conv -> relu] per stage, global average pool, optional row norm.
// ---------------------------------------------------------------------------

template <typename T>
struct EncoderCache {
  Tensor<T> input;
  std::vector<Tensor<T>> stage_out;  // post-relu per stage
  Tensor<T> pooled;                  // pre-norm pooled representation
  Tensor<T> output;
};

template <typename T>
Tensor<T> encoder_forward(const EncoderConfig& cfg, const ParameterSet<T>& params,
                          const Tensor<T>& batch,
                          EncoderCache<std::type_identity_t<T>>* cache) {
  if (batch.shape.size() != 4 || int(batch.dim(1)) != cfg.in_channels ||
      int(batch.dim(2)) != cfg.in_height || int(batch.dim(3)) != cfg.in_width)
    throw ConfigError("encoder_forward: batch shape does not match config, got " +
                      shape_string(batch.shape));
  Tensor<T> x = batch;
  if (cache) cache->input = batch;
  if (cache) cache->stage_out.clear();
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const std::string tag = "conv" + std::to_string(i);
    Tensor<T> y;
    detail::conv2d_forward(x, params.at(tag + "/weight"), params.at(tag + "/bias"),
                           cfg.stages[i].stride, y);
    detail::relu_forward(y);
    detail::require_finite(y, tag);
    if (cache) cache->stage_out.push_back(y);
    x = std::move(y);
  }
  Tensor<T> pooled;
  detail::global_avg_pool_forward(x, pooled);
  detail::require_finite(pooled, "pool");
  if (cache) cache->pooled = pooled;
  Tensor<T> out;
  if (cfg.normalize_representation) {
    detail::row_norm_forward(pooled, out);
    detail::require_finite(out, "norm");
  } else {
    out = std::move(pooled);
  }
  if (cache) cache->output = out;
  return out;
}

// Accumulates parameter gradients into grads (same layout as params).
template <typename T>
void encoder_backward(const EncoderConfig& cfg, const ParameterSet<T>& params,
                      const EncoderCache<T>& cache, const Tensor<T>& dout,
                      ParameterSet<T>& grads,
                      Tensor<std::type_identity_t<T>>* dinput) {
  if (cache.stage_out.size() != cfg.stages.size())
    throw std::logic_error("encoder_backward: missing forward cache");
  Tensor<T> g = dout;
  if (cfg.normalize_representation) {
    Tensor<T> gn;
    detail::row_norm_backward(cache.pooled, cache.output, g, gn);
    g = std::move(gn);
  }
  Tensor<T> gconv;
  detail::global_avg_pool_backward(cache.stage_out.back().shape, g, gconv);
  for (std::size_t i = cfg.stages.size(); i-- > 0;) {
    const std::string tag = "conv" + std::to_string(i);
    detail::relu_backward(cache.stage_out[i], gconv);
    const Tensor<T>& in = (i == 0) ? cache.input : cache.stage_out[i - 1];
    Tensor<T> dw, db, din;
    const bool need_dinput = (i > 0) || (dinput != nullptr);
    detail::conv2d_backward(in, params.at(tag + "/weight"), cfg.stages[i].stride,
                            gconv, dw, db, need_dinput ? &din : nullptr);
    auto& gw = grads.at(tag + "/weight");
    auto& gb = grads.at(tag + "/bias");
    for (std::size_t j = 0; j < dw.size(); ++j) gw.data[j] += dw.data[j];
    for (std::size_t j = 0; j < db.size(); ++j) gb.data[j] += db.data[j];
    if (i == 0) {
      if (dinput) *dinput = std::move(din);
    } else {
      gconv = std::move(din);
    }
  }
}

// ---------------------------------------------------------------------------
// Head MLP: [dense -> (row norm) -> relu] per hidden layer, linear output.
// ---------------------------------------------------------------------------

template <typename T>
struct HeadCache {
  Tensor<T> input;
  std::vector<Tensor<T>> pre_norm;   // dense output per hidden layer
  std::vector<Tensor<T>> post_norm;  // after row norm (same as pre if disabled)
  std::vector<Tensor<T>> post_relu;
  Tensor<T> output;
};

template <typename T>
Tensor<T> head_forward(const HeadConfig& cfg, const ParameterSet<T>& params,
                       const Tensor<T>& batch,
                       HeadCache<std::type_identity_t<T>>* cache) {
  if (batch.shape.size() != 2 || int(batch.dim(1)) != cfg.input_width)
    throw ConfigError("head_forward: batch shape does not match config, got " +
                      shape_string(batch.shape));
  Tensor<T> x = batch;
  if (cache) {
    cache->input = batch;
    cache->pre_norm.clear();
    cache->post_norm.clear();
    cache->post_relu.clear();
  }
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
    const std::string tag = "fc" + std::to_string(i);
    Tensor<T> y;
    detail::dense_forward(x, params.at(tag + "/weight"), params.at(tag + "/bias"), y);
    if (cache) cache->pre_norm.push_back(y);
    if (cfg.per_sample_norm) {
      Tensor<T> z;
      detail::row_norm_forward(y, z);
      y = std::move(z);
    }
    if (cache) cache->post_norm.push_back(y);
    detail::relu_forward(y);
    detail::require_finite(y, tag);
    if (cache) cache->post_relu.push_back(y);
    x = std::move(y);
  }
  Tensor<T> out;
  detail::dense_forward(x, params.at("out/weight"), params.at("out/bias"), out);
  detail::require_finite(out, "out");
  if (cache) cache->output = out;
  return out;
}

template <typename T>
void head_backward(const HeadConfig& cfg, const ParameterSet<T>& params,
                   const HeadCache<T>& cache, const Tensor<T>& dout,
                   ParameterSet<T>& grads,
                   Tensor<std::type_identity_t<T>>* dinput) {
  if (cache.post_relu.size() != cfg.hidden.size())
    throw std::logic_error("head_backward: missing forward cache");
  const Tensor<T>& last =
      cfg.hidden.empty() ? cache.input : cache.post_relu.back();
  Tensor<T> dw, db, g;
  detail::dense_backward(last, params.at("out/weight"), dout, dw, db, &g);
  {
    auto& gw = grads.at("out/weight");
    auto& gb = grads.at("out/bias");
    for (std::size_t j = 0; j < dw.size(); ++j) gw.data[j] += dw.data[j];
    for (std::size_t j = 0; j < db.size(); ++j) gb.data[j] += db.data[j];
  }
  for (std::size_t i = cfg.hidden.size(); i-- > 0;) {
    const std::string tag = "fc" + std::to_string(i);
    detail::relu_backward(cache.post_relu[i], g);
    if (cfg.per_sample_norm) {
      Tensor<T> gn;
      detail::row_norm_backward(cache.pre_norm[i], cache.post_norm[i], g, gn);
      g = std::move(gn);
    }
    const Tensor<T>& in = (i == 0) ? cache.input : cache.post_relu[i - 1];
    Tensor<T> dwi, dbi, din;
    const bool need_dinput = (i > 0) || (dinput != nullptr);
    detail::dense_backward(in, params.at(tag + "/weight"), g, dwi, dbi,
                           need_dinput ? &din : nullptr);
    auto& gw = grads.at(tag + "/weight");
    auto& gb = grads.at(tag + "/bias");
    for (std::size_t j = 0; j < dwi.size(); ++j) gw.data[j] += dwi.data[j];
    for (std::size_t j = 0; j < dbi.size(); ++j) gb.data[j] += dbi.data[j];
    if (i == 0) {
      if (dinput) *dinput = std::move(din);
    } else {
      g = std::move(din);
    }
  }
  if (cfg.hidden.empty() && dinput) *dinput = std::move(g);
}

// ---------------------------------------------------------------------------
// Adam. One state spans several parameter groups (e.g. the whole online
// branch); target-network parameters never appear in any optimizer state.
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<ParameterSet<T>> m;
  std::vector<ParameterSet<T>> v;
  long step = 0;

  static AdamState for_groups(const std::vector<const ParameterSet<T>*>& groups) {
    AdamState s;
    for (const auto* g : groups) {
      s.m.push_back(g->zeros_like());
      s.v.push_back(g->zeros_like());
    }
    return s;
  }
};

template <typename T>
void adam_step(const AdamConfig& cfg, AdamState<T>& state,
               const std::vector<ParameterSet<T>*>& params,
               const std::vector<const ParameterSet<T>*>& grads) {
  if (params.size() != state.m.size() || grads.size() != params.size())
    throw std::logic_error("adam_step: group count mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  for (std::size_t gi = 0; gi < params.size(); ++gi) {
    for (std::size_t ti = 0; ti < params[gi]->count(); ++ti) {
      auto& p = params[gi]->tensor(ti);
      const auto& g = grads[gi]->tensor(ti);
      auto& m = state.m[gi].tensor(ti);
      auto& v = state.v[gi].tensor(ti);
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double gj = double(g.data[j]);
        const double mj = cfg.beta1 * double(m.data[j]) + (1.0 - cfg.beta1) * gj;
        const double vj = cfg.beta2 * double(v.data[j]) + (1.0 - cfg.beta2) * gj * gj;
        m.data[j] = T(mj);
        v.data[j] = T(vj);
        const double mhat = mj / bc1;
        const double vhat = vj / bc2;
        p.data[j] = T(double(p.data[j]) - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
      }
    }
  }
}

}  // namespace gzhybrid
