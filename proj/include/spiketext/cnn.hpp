#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spiketext/rng.hpp"
#include "spiketext/util.hpp"

namespace spiketext {

enum class Pooling { avg, max };
enum class Activation { relu, sigmoid };

Pooling pooling_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);
std::string to_string(Pooling p);
std::string to_string(Activation a);

// Architecture of the TextCNN: parallel 1-D convolution banks over the
// embedded sequence, temporal pooling, one fully-connected readout with h
// output units per class. The tailored variant (avg pooling, ReLU, no biases)
// is the one that can be converted to a spiking network.
struct CnnConfig {
  std::vector<int> filter_widths{3, 4, 5};
  int feature_maps = 100;  // F, per width
  int num_classes = 2;     // K
  int neurons_per_class = 10;  // h
  Pooling pooling = Pooling::avg;
  Activation activation = Activation::relu;
  bool use_bias = false;
  float dropout_rate = 0.5f;
  int dim = 300;  // embedding dimension D

  int num_widths() const { return static_cast<int>(filter_widths.size()); }
  int max_width() const {
    return *std::max_element(filter_widths.begin(), filter_widths.end());
  }
  int pooled_size() const { return feature_maps * num_widths(); }
  int fc_rows() const { return neurons_per_class * num_classes; }
  int conv_positions(int width_index, int L) const {
    return L - filter_widths[width_index] + 1;
  }

  bool is_tailored() const {
    return pooling == Pooling::avg && activation == Activation::relu && !use_bias;
  }
  void validate() const;
};

template <typename S>
struct CnnParamsT {
  // conv_w[i]: F x w_i x D, flat row-major; conv_b[i]: F (empty when bias-free)
  std::vector<std::vector<S>> conv_w;
  std::vector<std::vector<S>> conv_b;
  std::vector<S> fc_w;  // (h*K) x (F*|widths|)
  std::vector<S> fc_b;  // h*K (empty when bias-free)

  bool has_bias() const { return !fc_b.empty(); }
};

using CnnParams = CnnParamsT<float>;

template <typename S>
struct ForwardCacheT {
  int L = 0;
  std::vector<S> x;                    // L x D copy of the input
  std::vector<std::vector<S>> pre;     // per width: F x P pre-activations
  std::vector<std::vector<S>> act;     // per width: F x P activations
  std::vector<std::vector<int>> arg;   // per width: argmax position per feature
  std::vector<S> pooled;               // F * |widths|
  std::vector<S> mask;                 // dropout mask (scaled); empty in eval
  std::vector<S> dropped;              // pooled after dropout
  std::vector<S> fc_out;               // h*K
};

using ForwardCache = ForwardCacheT<float>;

template <typename S>
CnnParamsT<S> make_cnn_params(const CnnConfig& cfg, bool zero = true) {
  cfg.validate();
  CnnParamsT<S> p;
  p.conv_w.resize(cfg.num_widths());
  if (cfg.use_bias) p.conv_b.resize(cfg.num_widths());
  for (int i = 0; i < cfg.num_widths(); ++i) {
    p.conv_w[i].assign(static_cast<size_t>(cfg.feature_maps) *
                           cfg.filter_widths[i] * cfg.dim,
                       S(0));
    if (cfg.use_bias) p.conv_b[i].assign(cfg.feature_maps, S(0));
  }
  p.fc_w.assign(static_cast<size_t>(cfg.fc_rows()) * cfg.pooled_size(), S(0));
  if (cfg.use_bias) p.fc_b.assign(cfg.fc_rows(), S(0));
  (void)zero;
  return p;
}

// Seeded uniform in +/- sqrt(6 / (fan_in + fan_out)).
template <typename S>
CnnParamsT<S> init_cnn_params(const CnnConfig& cfg, RngStream rng) {
  CnnParamsT<S> p = make_cnn_params<S>(cfg);
  for (int i = 0; i < cfg.num_widths(); ++i) {
    const double fan_in = static_cast<double>(cfg.filter_widths[i]) * cfg.dim;
    const double fan_out = cfg.feature_maps;
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : p.conv_w[i]) w = static_cast<S>(rng.uniform(-bound, bound));
  }
  {
    const double fan_in = cfg.pooled_size();
    const double fan_out = cfg.fc_rows();
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : p.fc_w) w = static_cast<S>(rng.uniform(-bound, bound));
  }
  return p;
}

// Class scores for one embedded sequence (L x D). In train mode a fresh
// dropout mask is drawn from dropout_rng and applied to the pooled vector
// (inverted scaling, so evaluation needs no rescale).
template <typename S>
void cnn_forward(const CnnConfig& cfg, const CnnParamsT<S>& params,
                 std::span<const S> x, int L, bool train_mode,
                 RngStream* dropout_rng, std::span<S> scores,
                 ForwardCacheT<S>& cache) {
  const int D = cfg.dim;
  const int F = cfg.feature_maps;
  const int W = cfg.num_widths();
  if (L < cfg.max_width()) {
    throw std::runtime_error("sequence length " + std::to_string(L) +
                             " shorter than max filter width " +
                             std::to_string(cfg.max_width()));
  }
  require(x.size() == static_cast<size_t>(L) * D, "cnn_forward: bad input size");
  require(scores.size() == static_cast<size_t>(cfg.num_classes),
          "cnn_forward: bad score size");

  cache.L = L;
  cache.x.assign(x.begin(), x.end());
  cache.pre.resize(W);
  cache.act.resize(W);
  cache.arg.assign(W, {});
  cache.pooled.assign(cfg.pooled_size(), S(0));

  for (int i = 0; i < W; ++i) {
    const int w = cfg.filter_widths[i];
    const int P = L - w + 1;
    const size_t span_len = static_cast<size_t>(w) * D;
    auto& pre = cache.pre[i];
    auto& act = cache.act[i];
    pre.assign(static_cast<size_t>(F) * P, S(0));
    act.assign(static_cast<size_t>(F) * P, S(0));
    if (cfg.pooling == Pooling::max) cache.arg[i].assign(F, 0);

    for (int f = 0; f < F; ++f) {
      const S* wf = params.conv_w[i].data() + static_cast<size_t>(f) * span_len;
      const S bias = cfg.use_bias ? params.conv_b[i][f] : S(0);
      for (int p = 0; p < P; ++p) {
        S v = dot(wf, x.data() + static_cast<size_t>(p) * D, span_len) + bias;
        pre[static_cast<size_t>(f) * P + p] = v;
        S a;
        if (cfg.activation == Activation::relu) {
          a = v > S(0) ? v : S(0);
        } else {
          a = S(1) / (S(1) + std::exp(-v));
        }
        act[static_cast<size_t>(f) * P + p] = a;
      }
      if (cfg.pooling == Pooling::avg) {
        S acc = 0;
        for (int p = 0; p < P; ++p) acc += act[static_cast<size_t>(f) * P + p];
        cache.pooled[static_cast<size_t>(i) * F + f] = acc / static_cast<S>(P);
      } else {
        int best = 0;
        for (int p = 1; p < P; ++p) {
          if (act[static_cast<size_t>(f) * P + p] >
              act[static_cast<size_t>(f) * P + best]) {
            best = p;  // first maximal index wins ties
          }
        }
        cache.arg[i][f] = best;
        cache.pooled[static_cast<size_t>(i) * F + f] =
            act[static_cast<size_t>(f) * P + best];
      }
    }
  }

  const int pooled_n = cfg.pooled_size();
  if (train_mode && cfg.dropout_rate > 0.0f) {
    require(dropout_rng != nullptr, "cnn_forward: train mode needs a dropout rng");
    cache.mask.resize(pooled_n);
    const S keep_scale = S(1) / (S(1) - static_cast<S>(cfg.dropout_rate));
    for (int j = 0; j < pooled_n; ++j) {
      cache.mask[j] =
          dropout_rng->next_double() < cfg.dropout_rate ? S(0) : keep_scale;
    }
  } else {
    cache.mask.clear();
  }

  cache.dropped = cache.pooled;
  if (!cache.mask.empty()) {
    for (int j = 0; j < pooled_n; ++j) cache.dropped[j] *= cache.mask[j];
  }

  const int R = cfg.fc_rows();
  const int h = cfg.neurons_per_class;
  cache.fc_out.assign(R, S(0));
  for (int u = 0; u < R; ++u) {
    S v = dot(params.fc_w.data() + static_cast<size_t>(u) * pooled_n,
              cache.dropped.data(), static_cast<size_t>(pooled_n));
    if (cfg.use_bias) v += params.fc_b[u];
    cache.fc_out[u] = v;
  }
  for (int c = 0; c < cfg.num_classes; ++c) {
    S s = 0;
    for (int g = 0; g < h; ++g) s += cache.fc_out[static_cast<size_t>(c) * h + g];
    scores[c] = s;
  }
}

// Exact reverse of cnn_forward. Gradients accumulate into `grads`; the input
// gradient (for embedding updates) is written to d_input when non-null.
template <typename S>
void cnn_backward(const CnnConfig& cfg, const CnnParamsT<S>& params,
                  const ForwardCacheT<S>& cache, std::span<const S> d_scores,
                  CnnParamsT<S>& grads, std::vector<S>* d_input) {
  const int D = cfg.dim;
  const int F = cfg.feature_maps;
  const int W = cfg.num_widths();
  const int L = cache.L;
  const int pooled_n = cfg.pooled_size();
  const int R = cfg.fc_rows();
  const int h = cfg.neurons_per_class;
  require(d_scores.size() == static_cast<size_t>(cfg.num_classes),
          "cnn_backward: bad d_scores size");
  require(cache.x.size() == static_cast<size_t>(L) * D,
          "cnn_backward: cache does not match config");

  std::vector<S> d_dropped(pooled_n, S(0));
  for (int u = 0; u < R; ++u) {
    const S du = d_scores[u / h];
    if (du == S(0)) continue;
    axpy(du, cache.dropped.data(),
         grads.fc_w.data() + static_cast<size_t>(u) * pooled_n,
         static_cast<size_t>(pooled_n));
    if (cfg.use_bias) grads.fc_b[u] += du;
    axpy(du, params.fc_w.data() + static_cast<size_t>(u) * pooled_n,
         d_dropped.data(), static_cast<size_t>(pooled_n));
  }

  std::vector<S> d_pooled = d_dropped;
  if (!cache.mask.empty()) {
    for (int j = 0; j < pooled_n; ++j) d_pooled[j] *= cache.mask[j];
  }

  if (d_input) d_input->assign(static_cast<size_t>(L) * D, S(0));

  for (int i = 0; i < W; ++i) {
    const int w = cfg.filter_widths[i];
    const int P = L - w + 1;
    const size_t span_len = static_cast<size_t>(w) * D;
    const auto& pre = cache.pre[i];
    const auto& act = cache.act[i];

    for (int f = 0; f < F; ++f) {
      const S dp = d_pooled[static_cast<size_t>(i) * F + f];
      S* gw = grads.conv_w[i].data() + static_cast<size_t>(f) * span_len;
      const S* wf = params.conv_w[i].data() + static_cast<size_t>(f) * span_len;
      for (int p = 0; p < P; ++p) {
        S da;
        if (cfg.pooling == Pooling::avg) {
          da = dp / static_cast<S>(P);
        } else {
          da = (p == cache.arg[i][f]) ? dp : S(0);
        }
        if (da == S(0)) continue;
        S dv;
        const size_t fp = static_cast<size_t>(f) * P + p;
        if (cfg.activation == Activation::relu) {
          dv = pre[fp] > S(0) ? da : S(0);
        } else {
          const S a = act[fp];
          dv = da * a * (S(1) - a);
        }
        if (dv == S(0)) continue;
        axpy(dv, cache.x.data() + static_cast<size_t>(p) * D, gw, span_len);
        if (cfg.use_bias) grads.conv_b[i][f] += dv;
        if (d_input) {
          axpy(dv, wf, d_input->data() + static_cast<size_t>(p) * D, span_len);
        }
      }
    }
  }
}

// Argmax class; ties resolve to the lowest index.
template <typename S>
int cnn_predict(const CnnConfig& cfg, const CnnParamsT<S>& params,
                std::span<const S> x, int L) {
  std::vector<S> scores(cfg.num_classes);
  ForwardCacheT<S> cache;
  cnn_forward<S>(cfg, params, x, L, false, nullptr, scores, cache);
  return argmax<S>(scores);
}

}  // namespace spiketext
