#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spiketext/cnn.hpp"
#include "spiketext/corpus.hpp"
#include "spiketext/embedding.hpp"
#include "spiketext/encoder.hpp"
#include "spiketext/surrogate.hpp"
#include "spiketext/util.hpp"

namespace spiketext {

struct LifConfig {
  float beta = 1.0f;
  float u_thr = 1.0f;
  int T = 50;
  float k = 25.0f;

  void validate() const {
    if (!(beta > 0.0f && beta <= 1.0f)) {
      throw std::runtime_error("beta must satisfy 0 < beta <= 1");
    }
    if (!(u_thr > 0.0f)) throw std::runtime_error("U_thr must be > 0");
    if (T < 1) throw std::runtime_error("T must be >= 1");
    if (!(k >= 0.0f)) throw std::runtime_error("k must be >= 0");
  }
};

struct SnnModel {
  CnnConfig arch;
  CnnParams params;
  LifConfig lif;
};

// Copies tailored ANN weights bit-identically into a spiking model. Rejects
// configurations that cannot be converted (biases or max pooling).
SnnModel convert(const CnnConfig& arch, const CnnParams& params,
                 const LifConfig& lif);

// One membrane update: U <- I + beta*U - S_prev*U_thr, then S = 1 where
// U >= U_thr. `u` and `s_prev` are updated in place; `s_prev` receives the
// new spikes.
template <typename Sc>
void lif_step(std::span<Sc> u, std::span<Sc> s_prev, std::span<const Sc> I,
              const LifConfig& lif) {
  require(u.size() == s_prev.size() && u.size() == I.size(),
          "lif_step: shape mismatch");
  const Sc beta = static_cast<Sc>(lif.beta);
  const Sc u_thr = static_cast<Sc>(lif.u_thr);
  for (size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(I[i])) {
      throw std::runtime_error("lif_step: non-finite input current");
    }
    u[i] = I[i] + beta * u[i] - s_prev[i] * u_thr;
    s_prev[i] = u[i] >= u_thr ? Sc(1) : Sc(0);
  }
}

// Full record of one spiking run. Hard mode stores binary spikes and integer
// per-step class counts; relaxed mode (fast-sigmoid in the forward pass)
// stores real-valued surrogate spikes. Traces are kept only when requested.
template <typename Sc>
struct SnnRunT {
  int T = 0;
  int L = 0;
  std::vector<uint8_t> out_spikes;  // T x (h*K), hard mode only
  std::vector<int> counts;          // T x K, hard mode only
  std::vector<Sc> logits;           // T x K class sums (both modes)
  bool traced = false;
  std::vector<std::vector<Sc>> u_conv;  // per width: T x F x P
  std::vector<std::vector<Sc>> s_conv;  // per width: T x F x P
  std::vector<Sc> dropped;              // T x (F*|widths|)
  std::vector<Sc> u_out;                // T x (h*K)
  std::vector<Sc> s_out;                // T x (h*K)
  std::vector<Sc> mask;                 // dropout mask, empty when disabled
};

using SnnRun = SnnRunT<float>;

// Simulates the spiking network over a spike train. At each step the input
// spikes drive the conv banks, conv LIF neurons fire, spikes are averaged
// over positions into real-valued currents, the FC layer produces output
// currents, and output LIF neurons fire. All LIF states start at zero.
// `relaxed` replaces the Heaviside with the fast-sigmoid value in the forward
// pass (gradient checking); `dropout_mask` scales the pooled vector, one mask
// held fixed across all T steps.
template <typename Sc>
void snn_forward(const CnnConfig& arch, const CnnParamsT<Sc>& params,
                 const LifConfig& lif, const SurrogateConfig& sg,
                 const SpikeTrain& spikes, bool relaxed, bool trace,
                 const std::vector<Sc>* dropout_mask, SnnRunT<Sc>& run) {
  const int D = arch.dim;
  const int F = arch.feature_maps;
  const int W = arch.num_widths();
  const int K = arch.num_classes;
  const int h = arch.neurons_per_class;
  const int R = arch.fc_rows();
  const int pooled_n = arch.pooled_size();
  const int T = spikes.T;
  const int L = spikes.L;
  require(spikes.D == D, "snn_forward: spike train dim mismatch");
  require(!arch.use_bias && arch.pooling == Pooling::avg,
          "snn_forward: model is not in spiking form");
  if (L < arch.max_width()) {
    throw std::runtime_error("sequence length " + std::to_string(L) +
                             " shorter than max filter width " +
                             std::to_string(arch.max_width()));
  }
  const Sc beta = static_cast<Sc>(lif.beta);
  const Sc u_thr = static_cast<Sc>(lif.u_thr);

  run.T = T;
  run.L = L;
  run.traced = trace;
  run.out_spikes.assign(static_cast<size_t>(T) * R, 0);
  run.counts.assign(static_cast<size_t>(T) * K, 0);
  run.logits.assign(static_cast<size_t>(T) * K, Sc(0));
  run.mask.clear();
  if (dropout_mask) {
    require(dropout_mask->size() == static_cast<size_t>(pooled_n),
            "snn_forward: dropout mask size mismatch");
    run.mask = *dropout_mask;
  }
  run.u_conv.assign(W, {});
  run.s_conv.assign(W, {});
  if (trace) {
    for (int i = 0; i < W; ++i) {
      const int P = arch.conv_positions(i, L);
      run.u_conv[i].assign(static_cast<size_t>(T) * F * P, Sc(0));
      run.s_conv[i].assign(static_cast<size_t>(T) * F * P, Sc(0));
    }
    run.dropped.assign(static_cast<size_t>(T) * pooled_n, Sc(0));
    run.u_out.assign(static_cast<size_t>(T) * R, Sc(0));
    run.s_out.assign(static_cast<size_t>(T) * R, Sc(0));
  } else {
    run.dropped.clear();
    run.u_out.clear();
    run.s_out.clear();
  }

  std::vector<std::vector<Sc>> u(W), s_prev(W);
  for (int i = 0; i < W; ++i) {
    const int P = arch.conv_positions(i, L);
    u[i].assign(static_cast<size_t>(F) * P, Sc(0));
    s_prev[i].assign(static_cast<size_t>(F) * P, Sc(0));
  }
  std::vector<Sc> u_o(R, Sc(0)), s_prev_o(R, Sc(0));
  std::vector<Sc> xbuf(static_cast<size_t>(L) * D);
  std::vector<Sc> pooled(pooled_n);

  for (int t = 0; t < T; ++t) {
    const auto xt = spikes.step(t);
    for (size_t j = 0; j < xbuf.size(); ++j) xbuf[j] = static_cast<Sc>(xt[j]);

    for (int i = 0; i < W; ++i) {
      const int w = arch.filter_widths[i];
      const int P = L - w + 1;
      const size_t span_len = static_cast<size_t>(w) * D;
      auto& ui = u[i];
      auto& si = s_prev[i];
      for (int f = 0; f < F; ++f) {
        const Sc* wf =
            params.conv_w[i].data() + static_cast<size_t>(f) * span_len;
        Sc pool_acc = 0;
        for (int p = 0; p < P; ++p) {
          const size_t fp = static_cast<size_t>(f) * P + p;
          const Sc I = dot(wf, xbuf.data() + static_cast<size_t>(p) * D,
                           span_len);
          ui[fp] = I + beta * ui[fp] - si[fp] * u_thr;
          const Sc spike = relaxed ? surrogate_value(ui[fp], u_thr, sg)
                                   : (ui[fp] >= u_thr ? Sc(1) : Sc(0));
          si[fp] = spike;
          pool_acc += spike;
          if (trace) {
            run.u_conv[i][static_cast<size_t>(t) * F * P + fp] = ui[fp];
            run.s_conv[i][static_cast<size_t>(t) * F * P + fp] = spike;
          }
        }
        pooled[static_cast<size_t>(i) * F + f] = pool_acc / static_cast<Sc>(P);
      }
    }

    if (!run.mask.empty()) {
      for (int j = 0; j < pooled_n; ++j) pooled[j] *= run.mask[j];
    }
    if (trace) {
      std::copy(pooled.begin(), pooled.end(),
                run.dropped.begin() + static_cast<size_t>(t) * pooled_n);
    }

    for (int u_idx = 0; u_idx < R; ++u_idx) {
      const Sc I = dot(params.fc_w.data() + static_cast<size_t>(u_idx) * pooled_n,
                       pooled.data(), static_cast<size_t>(pooled_n));
      u_o[u_idx] = I + beta * u_o[u_idx] - s_prev_o[u_idx] * u_thr;
      const Sc spike = relaxed ? surrogate_value(u_o[u_idx], u_thr, sg)
                               : (u_o[u_idx] >= u_thr ? Sc(1) : Sc(0));
      s_prev_o[u_idx] = spike;
      if (trace) {
        run.u_out[static_cast<size_t>(t) * R + u_idx] = u_o[u_idx];
        run.s_out[static_cast<size_t>(t) * R + u_idx] = spike;
      }
      if (!relaxed && spike == Sc(1)) {
        run.out_spikes[static_cast<size_t>(t) * R + u_idx] = 1;
        run.counts[static_cast<size_t>(t) * K + u_idx / h] += 1;
      }
      run.logits[static_cast<size_t>(t) * K + u_idx / h] += spike;
    }
  }
  require(all_finite(std::span<const Sc>(run.logits)),
          "snn_forward: non-finite network state");
}

// Reverse sweep of the unrolled run. The membrane adjoint is carried backward
// with factor beta per step; the Heaviside is replaced by the surrogate
// derivative. `grad_through_reset` routes the reset term -S_{t-1}*U_thr into
// the previous step's spike adjoint (used by the relaxed gradient check; the
// hard training path detaches the reset). Embedding inputs receive no
// gradient. `d_logits` is T x K. Gradients accumulate into `grads`.
template <typename Sc>
void snn_backward(const CnnConfig& arch, const CnnParamsT<Sc>& params,
                  const LifConfig& lif, const SurrogateConfig& sg,
                  const SpikeTrain& spikes, const SnnRunT<Sc>& run,
                  std::span<const Sc> d_logits, bool grad_through_reset,
                  CnnParamsT<Sc>& grads) {
  const int D = arch.dim;
  const int F = arch.feature_maps;
  const int W = arch.num_widths();
  const int K = arch.num_classes;
  const int h = arch.neurons_per_class;
  const int R = arch.fc_rows();
  const int pooled_n = arch.pooled_size();
  const int T = run.T;
  const int L = run.L;
  require(run.traced, "snn_backward: forward run was not traced");
  require(d_logits.size() == static_cast<size_t>(T) * K,
          "snn_backward: d_logits shape mismatch");
  const Sc beta = static_cast<Sc>(lif.beta);
  const Sc u_thr = static_cast<Sc>(lif.u_thr);

  std::vector<Sc> au_out(R, Sc(0)), au_out_next(R, Sc(0));
  std::vector<std::vector<Sc>> au_conv(W), au_conv_next(W);
  for (int i = 0; i < W; ++i) {
    const int P = arch.conv_positions(i, L);
    au_conv[i].assign(static_cast<size_t>(F) * P, Sc(0));
    au_conv_next[i].assign(static_cast<size_t>(F) * P, Sc(0));
  }
  std::vector<Sc> d_pooled(pooled_n);
  std::vector<Sc> xbuf(static_cast<size_t>(L) * D);

  for (int t = T - 1; t >= 0; --t) {
    const auto xt = spikes.step(t);
    for (size_t j = 0; j < xbuf.size(); ++j) xbuf[j] = static_cast<Sc>(xt[j]);
    const Sc* dropped_t = run.dropped.data() + static_cast<size_t>(t) * pooled_n;
    const Sc* u_out_t = run.u_out.data() + static_cast<size_t>(t) * R;

    for (int u_idx = 0; u_idx < R; ++u_idx) {
      Sc ds = d_logits[static_cast<size_t>(t) * K + u_idx / h];
      if (grad_through_reset && t + 1 < T) ds -= u_thr * au_out_next[u_idx];
      au_out[u_idx] = ds * surrogate_grad(u_out_t[u_idx], u_thr, sg) +
                      beta * au_out_next[u_idx];
    }

    std::fill(d_pooled.begin(), d_pooled.end(), Sc(0));
    for (int u_idx = 0; u_idx < R; ++u_idx) {
      const Sc a = au_out[u_idx];
      if (a == Sc(0)) continue;
      axpy(a, dropped_t, grads.fc_w.data() + static_cast<size_t>(u_idx) * pooled_n,
           static_cast<size_t>(pooled_n));
      axpy(a, params.fc_w.data() + static_cast<size_t>(u_idx) * pooled_n,
           d_pooled.data(), static_cast<size_t>(pooled_n));
    }
    if (!run.mask.empty()) {
      for (int j = 0; j < pooled_n; ++j) d_pooled[j] *= run.mask[j];
    }

    for (int i = 0; i < W; ++i) {
      const int w = arch.filter_widths[i];
      const int P = L - w + 1;
      const size_t span_len = static_cast<size_t>(w) * D;
      const Sc* u_conv_t =
          run.u_conv[i].data() + static_cast<size_t>(t) * F * P;
      auto& ac = au_conv[i];
      auto& ac_next = au_conv_next[i];
      for (int f = 0; f < F; ++f) {
        const Sc dp = d_pooled[static_cast<size_t>(i) * F + f] / static_cast<Sc>(P);
        Sc* gw = grads.conv_w[i].data() + static_cast<size_t>(f) * span_len;
        for (int p = 0; p < P; ++p) {
          const size_t fp = static_cast<size_t>(f) * P + p;
          Sc ds = dp;
          if (grad_through_reset && t + 1 < T) ds -= u_thr * ac_next[fp];
          ac[fp] = ds * surrogate_grad(u_conv_t[fp], u_thr, sg) +
                   beta * ac_next[fp];
          if (ac[fp] != Sc(0)) {
            axpy(ac[fp], xbuf.data() + static_cast<size_t>(p) * D, gw, span_len);
          }
        }
      }
    }

    std::swap(au_out, au_out_next);
    for (int i = 0; i < W; ++i) std::swap(au_conv[i], au_conv_next[i]);
  }

  for (int i = 0; i < W; ++i) {
    require(all_finite(std::span<const Sc>(grads.conv_w[i])),
            "snn_backward: non-finite conv gradient at width index " +
                std::to_string(i));
  }
  require(all_finite(std::span<const Sc>(grads.fc_w)),
          "snn_backward: non-finite fc gradient");
}

// Total spike count of each class's h output neurons over all steps; argmax
// with ties to the lowest class index.
int readout(const std::vector<int>& counts, int T, int K);

// Divides each layer's weights by the largest sum of positive incoming
// weights (inputs taken at their maximum of 1), clamped below at 1. Returns
// the per-layer scale factors {conv, fc}.
std::vector<float> normalize_model_based(SnnModel& model);

// Runs the tailored ANN over the training set, records the per-layer maximum
// activation lambda_l (clamped below at 1), and rescales layer l weights by
// lambda_{l-1}/lambda_l. Returns {lambda_1, lambda_2}.
std::vector<float> normalize_data_based(SnnModel& model, const CnnParams& ann,
                                        const Dataset& train,
                                        const EmbeddingTable& table);

}  // namespace spiketext
