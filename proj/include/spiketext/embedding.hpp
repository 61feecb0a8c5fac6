#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spiketext/corpus.hpp"

namespace spiketext {

// Global mean/std of the raw embedding components (pad row excluded).
struct EmbeddingStats {
  double mu = 0.0;
  double sigma = 0.0;
};

// Vocabulary-indexed embedding matrix. After normalize_shift every entry is
// in [0, 1] and row 0 (pad) is all zeros, so padding never emits spikes.
struct EmbeddingTable {
  int dim = 0;
  int vocab_size = 0;
  std::vector<float> data;  // vocab_size x dim, row-major
  EmbeddingStats stats;
  bool trainable = true;

  std::span<float> row(int32_t id) {
    return {data.data() + static_cast<size_t>(id) * dim, static_cast<size_t>(dim)};
  }
  std::span<const float> row(int32_t id) const {
    return {data.data() + static_cast<size_t>(id) * dim, static_cast<size_t>(dim)};
  }
};

// Raw (pre-normalization) matrix: file rows for in-vocabulary tokens,
// seeded uniform rows over the observed value range for everything else,
// zeros for pad.
std::vector<float> load_embedding_file(const std::string& path,
                                       const Vocabulary& vocab, int dim,
                                       uint64_t seed);

// Raw matrix of seeded standard Gaussians (the random-embedding ablation).
std::vector<float> random_embedding_matrix(const Vocabulary& vocab, int dim,
                                           uint64_t seed);

EmbeddingStats compute_stats(std::span<const float> raw, int vocab_size, int dim);

// clamp to [mu-3s, mu+3s], subtract mu, divide by 6s, shift by 0.5.
EmbeddingTable normalize_shift(std::span<const float> raw, int vocab_size, int dim);

// Clamp every entry into [0, 1]; pad row re-zeroed. Applied after each
// gradient update to the table during ANN training.
void clip01(EmbeddingTable& table);

// Writes the embedded sequence for encoded token ids into out (L x dim),
// resizing it as needed.
void embed_sequence(const EmbeddingTable& table, std::span<const int32_t> tokens,
                    std::vector<float>& out);

}  // namespace spiketext
