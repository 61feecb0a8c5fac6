#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace spiketext {

enum class SurrogateCentering { threshold, raw };

SurrogateCentering surrogate_centering_from_string(const std::string& s);
std::string to_string(SurrogateCentering c);

// Fast-sigmoid surrogate x / (1 + k|x|). The backward pass reads its
// derivative 1 / (1 + k|x|)^2; with threshold centering x = U - U_thr, so the
// derivative peaks at the firing threshold.
struct SurrogateConfig {
  float k = 25.0f;
  SurrogateCentering centering = SurrogateCentering::threshold;

  void validate() const {
    if (!(k >= 0.0f)) throw std::runtime_error("surrogate slope k must be >= 0");
  }
};

template <typename S>
S fast_sigmoid(S x, S k) {
  return x / (S(1) + k * std::abs(x));
}

template <typename S>
S fast_sigmoid_grad(S x, S k) {
  const S d = S(1) + k * std::abs(x);
  return S(1) / (d * d);
}

template <typename S>
S surrogate_center(S u, S u_thr, const SurrogateConfig& sg) {
  return sg.centering == SurrogateCentering::threshold ? u - u_thr : u;
}

template <typename S>
S surrogate_value(S u, S u_thr, const SurrogateConfig& sg) {
  return fast_sigmoid(surrogate_center(u, u_thr, sg), static_cast<S>(sg.k));
}

template <typename S>
S surrogate_grad(S u, S u_thr, const SurrogateConfig& sg) {
  return fast_sigmoid_grad(surrogate_center(u, u_thr, sg), static_cast<S>(sg.k));
}

}  // namespace spiketext
