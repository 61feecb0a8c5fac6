#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace spiketext {

// splitmix64 finalizer. All randomness in the project flows through this so
// results are identical across platforms and standard-library versions
// (std::uniform_real_distribution et al. are implementation-defined).
inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stream identifiers. Every stochastic operation draws from a stream keyed by
// (seed, purpose, ...indices) so regeneration is independent of evaluation
// order, thread count, and which pipeline stages were skipped on resume.
enum class RngUse : uint64_t {
  embedding_oov = 1,
  ann_init = 2,
  ann_dropout = 3,
  ann_shuffle = 4,
  poisson = 5,
  snn_dropout = 6,
  snn_shuffle = 7,
  synth = 8,
  eval_poisson = 9,
  direct_init = 10,
  gradcheck = 11,
  split = 12,
};

class RngStream {
 public:
  explicit RngStream(uint64_t state) : state_(state) {}

  static RngStream keyed(uint64_t seed, RngUse use, uint64_t a = 0,
                         uint64_t b = 0, uint64_t c = 0) {
    uint64_t h = 0x853c49e6748fea9bull;
    for (uint64_t w : {seed, static_cast<uint64_t>(use), a, b, c}) {
      h = mix64(h ^ (w + 0x9e3779b97f4a7c15ull));
    }
    return RngStream(h);
  }

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // Uniform in [0, 1).
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }
  float next_float() { return float(next_u64() >> 40) * 0x1.0p-24f; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Box-Muller; one value per call keeps the draw count predictable.
  double gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Unbiased integer in [0, n) via 128-bit multiply-shift.
  uint64_t next_index(uint64_t n) {
    return uint64_t((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = next_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace spiketext
