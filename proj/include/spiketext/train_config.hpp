#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spiketext {

enum class TrainMode { finetune, direct, relaxed_check };

struct TrainConfig {
  float lr = 1e-4f;
  int batch_size = 32;
  int epochs = 10;
  uint64_t seed = 0;
  float dropout_rate = 0.5f;
  TrainMode mode = TrainMode::finetune;

  void validate() const {
    if (!(lr >= 0.0f)) throw std::runtime_error("learning rate must be >= 0");
    if (batch_size < 1) throw std::runtime_error("batch size must be >= 1");
    if (epochs < 0) throw std::runtime_error("epochs must be >= 0");
    if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f)) {
      throw std::runtime_error("dropout rate must be in [0,1)");
    }
  }
};

}  // namespace spiketext
