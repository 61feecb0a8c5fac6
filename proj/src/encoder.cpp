#include "spiketext/encoder.hpp"

#include <cstdio>
#include <stdexcept>
#include <string>

#include "spiketext/util.hpp"

namespace spiketext {

SpikeTrain encode_poisson(std::span<const float> x, int L, int D, int T,
                          RngStream rng) {
  require(T >= 1, "encode_poisson: T must be >= 1");
  require(x.size() == static_cast<size_t>(L) * D,
          "encode_poisson: input size does not match L*D");
  for (size_t j = 0; j < x.size(); ++j) {
    if (!(x[j] >= 0.0f && x[j] <= 1.0f)) {
      throw std::runtime_error("encode_poisson: component " + std::to_string(j) +
                               " = " + std::to_string(x[j]) +
                               " outside [0,1]");
    }
  }
  SpikeTrain train;
  train.T = T;
  train.L = L;
  train.D = D;
  train.data.resize(static_cast<size_t>(T) * L * D);
  size_t idx = 0;
  for (int t = 0; t < T; ++t) {
    for (size_t j = 0; j < x.size(); ++j) {
      train.data[idx++] = rng.next_double() < x[j] ? 1 : 0;
    }
  }
  return train;
}

namespace {

void put_u32(FILE* f, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  if (std::fwrite(b, 1, 4, f) != 4) {
    throw std::runtime_error("spike train write failed");
  }
}

uint32_t get_u32(FILE* f, const std::string& path) {
  uint8_t b[4];
  if (std::fread(b, 1, 4, f) != 4) {
    throw std::runtime_error(path + ": truncated spike train header");
  }
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void dump_spike_train(const SpikeTrain& train, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  try {
    put_u32(f, static_cast<uint32_t>(train.T));
    put_u32(f, static_cast<uint32_t>(train.L));
    put_u32(f, static_cast<uint32_t>(train.D));
    const size_t n_bits = train.data.size();
    std::vector<uint8_t> packed((n_bits + 7) / 8, 0);
    for (size_t j = 0; j < n_bits; ++j) {
      if (train.data[j]) packed[j / 8] |= static_cast<uint8_t>(1u << (j % 8));
    }
    if (!packed.empty() &&
        std::fwrite(packed.data(), 1, packed.size(), f) != packed.size()) {
      throw std::runtime_error("spike train write failed");
    }
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
}

SpikeTrain load_spike_train(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open " + path);
  SpikeTrain train;
  try {
    train.T = static_cast<int>(get_u32(f, path));
    train.L = static_cast<int>(get_u32(f, path));
    train.D = static_cast<int>(get_u32(f, path));
    const size_t n_bits =
        static_cast<size_t>(train.T) * train.L * train.D;
    std::vector<uint8_t> packed((n_bits + 7) / 8);
    if (!packed.empty() &&
        std::fread(packed.data(), 1, packed.size(), f) != packed.size()) {
      throw std::runtime_error(path + ": truncated spike train data");
    }
    train.data.resize(n_bits);
    for (size_t j = 0; j < n_bits; ++j) {
      train.data[j] = (packed[j / 8] >> (j % 8)) & 1u;
    }
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
  return train;
}

}  // namespace spiketext
