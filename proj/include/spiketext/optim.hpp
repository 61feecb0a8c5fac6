#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "spiketext/util.hpp"

namespace spiketext {

struct AdamConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// One first/second moment pair per flat tensor.
struct AdamState {
  std::vector<float> m;
  std::vector<float> v;
  int64_t t = 0;

  void reset(size_t n) {
    m.assign(n, 0.0f);
    v.assign(n, 0.0f);
    t = 0;
  }
};

inline void adam_step(std::span<float> params, std::span<const float> grads,
                      AdamState& state, const AdamConfig& cfg) {
  require(params.size() == grads.size(), "adam_step: size mismatch");
  if (state.m.size() != params.size()) state.reset(params.size());
  state.t += 1;
  const float b1t = 1.0f - std::pow(cfg.beta1, static_cast<float>(state.t));
  const float b2t = 1.0f - std::pow(cfg.beta2, static_cast<float>(state.t));
  for (size_t j = 0; j < params.size(); ++j) {
    const float g = grads[j];
    state.m[j] = cfg.beta1 * state.m[j] + (1.0f - cfg.beta1) * g;
    state.v[j] = cfg.beta2 * state.v[j] + (1.0f - cfg.beta2) * g * g;
    const float mh = state.m[j] / b1t;
    const float vh = state.v[j] / b2t;
    params[j] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
  }
}

}  // namespace spiketext
