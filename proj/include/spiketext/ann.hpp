#pragma once

#include <vector>

#include "spiketext/cnn.hpp"
#include "spiketext/corpus.hpp"
#include "spiketext/embedding.hpp"
#include "spiketext/train_config.hpp"

namespace spiketext {

struct AnnTrainResult {
  CnnParams params;
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

// Mini-batch Adam on softmax cross-entropy over class scores. Embedding rows
// of batch tokens are updated and clipped back to [0,1] after every step when
// the table is trainable. The training config's dropout rate is the one
// applied. Aborts on a non-finite loss.
AnnTrainResult train_ann(const CnnConfig& arch, const CnnParams& init,
                         const Dataset& train, EmbeddingTable& table,
                         const TrainConfig& cfg);

double evaluate_ann(const CnnConfig& arch, const CnnParams& params,
                    const Dataset& data, const EmbeddingTable& table);

}  // namespace spiketext
