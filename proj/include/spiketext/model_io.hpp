#pragma once

#include <string>

#include "spiketext/cnn.hpp"
#include "spiketext/embedding.hpp"
#include "spiketext/snn.hpp"

namespace spiketext {

void save_ann(const CnnConfig& arch, const CnnParams& params,
              const std::string& path);
void load_ann(const std::string& path, CnnConfig& arch, CnnParams& params);

void save_snn(const SnnModel& model, const std::string& path);
SnnModel load_snn(const std::string& path);

void save_embedding(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_embedding(const std::string& path);

}  // namespace spiketext
