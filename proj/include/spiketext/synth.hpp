#pragma once

#include <cstdint>
#include <string>

namespace spiketext {

// Deterministic two-class sentiment corpus with a matching embedding file.
// Each document mixes sentiment-bearing and neutral tokens, so the Bayes
// accuracy is high but not 1.0; token vectors carry a sentiment shift along
// a fixed random direction.
struct SynthConfig {
  int num_examples = 2000;
  int dim = 16;
  int vocab_pos = 80;
  int vocab_neg = 80;
  int vocab_neutral = 40;
  int min_len = 5;
  int max_len = 12;
  double p_correct = 0.45;   // token agrees with the document label
  double p_opposite = 0.25;  // token contradicts it; the rest are neutral
  uint64_t seed = 7;
};

void write_synth_corpus(const SynthConfig& cfg, const std::string& data_path,
                        const std::string& embedding_path);

}  // namespace spiketext
