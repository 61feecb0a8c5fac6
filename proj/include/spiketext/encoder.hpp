#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spiketext/rng.hpp"

namespace spiketext {

// Binary spike tensor, shape T x L x D, row-major.
struct SpikeTrain {
  int T = 0;
  int L = 0;
  int D = 0;
  std::vector<uint8_t> data;

  uint8_t at(int t, int l, int d) const {
    return data[(static_cast<size_t>(t) * L + l) * D + d];
  }
  std::span<const uint8_t> step(int t) const {
    return {data.data() + static_cast<size_t>(t) * L * D,
            static_cast<size_t>(L) * D};
  }
};

// Per-step Bernoulli draws with success probability equal to the component
// value. Rejects components outside [0,1].
SpikeTrain encode_poisson(std::span<const float> x, int L, int D, int T,
                          RngStream rng);

// Flat bit-packed dump: T, L, D as 32-bit little-endian integers, then the
// T*L*D bits row-major, padded to a byte boundary at the end.
void dump_spike_train(const SpikeTrain& train, const std::string& path);
SpikeTrain load_spike_train(const std::string& path);

}  // namespace spiketext
