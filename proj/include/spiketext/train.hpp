#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spiketext/ann.hpp"
#include "spiketext/snn.hpp"
#include "spiketext/train_config.hpp"

namespace spiketext {

// Spike-rate cross-entropy: at each step the per-class pooled outputs are
// softmaxed and the log-likelihood of the target accumulated; the result is
// the mean over the T steps.
template <typename Sc>
Sc loss_rate_ce(std::span<const Sc> logits, int T, int K, int target) {
  require(T >= 1, "loss_rate_ce: T must be >= 1");
  require(logits.size() == static_cast<size_t>(T) * K,
          "loss_rate_ce: shape mismatch");
  Sc acc = 0;
  for (int t = 0; t < T; ++t) {
    acc += cross_entropy<Sc>(
        logits.subspan(static_cast<size_t>(t) * K, static_cast<size_t>(K)),
        target);
  }
  return acc / static_cast<Sc>(T);
}

// Gradient of loss_rate_ce with respect to the per-step logits:
// (softmax - onehot) / T at every step, scaled by `scale`.
template <typename Sc>
void loss_rate_ce_grad(std::span<const Sc> logits, int T, int K, int target,
                       Sc scale, std::vector<Sc>& d_logits) {
  d_logits.assign(static_cast<size_t>(T) * K, Sc(0));
  std::vector<Sc> p(K);
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < K; ++c) p[c] = logits[static_cast<size_t>(t) * K + c];
    softmax<Sc>(p);
    p[target] -= Sc(1);
    for (int c = 0; c < K; ++c) {
      d_logits[static_cast<size_t>(t) * K + c] =
          p[c] * scale / static_cast<Sc>(T);
    }
  }
}

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct FinetuneResult {
  SnnModel model;  // parameters of the best validation epoch
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // -1 when no epoch improved on the initial model
  double initial_val_acc = 0.0;
};

// Algorithm: per mini-batch, fresh Poisson encoding, spiking forward with
// recording, spike-rate cross-entropy, BPTT with the surrogate gradient,
// Adam update. Per-epoch validation accuracy is recorded and the best-epoch
// parameters are retained. Embeddings stay fixed.
FinetuneResult finetune(const SnnModel& init, const Dataset& train,
                        const Dataset& val, const EmbeddingTable& table,
                        const SurrogateConfig& sg, const TrainConfig& cfg);

// Same loop as finetune but starting from seeded random initialization.
FinetuneResult train_direct(const CnnConfig& arch, const LifConfig& lif,
                            const Dataset& train, const Dataset& val,
                            const EmbeddingTable& table,
                            const SurrogateConfig& sg, const TrainConfig& cfg);

// Accuracy of the spiking model on a dataset, Poisson encodings drawn from
// (seed, trial, example). With trials > 1 returns the mean accuracy and
// writes the standard deviation across trials to std_out.
double evaluate_snn(const SnnModel& model, const Dataset& data,
                    const EmbeddingTable& table, uint64_t seed, int trials = 1,
                    double* std_out = nullptr);

// Runs the fully differentiable relaxed network (fast-sigmoid in the forward
// pass) in double precision and compares BPTT gradients against central
// finite differences of the relaxed loss. Returns the maximum relative error
// over all weights.
double grad_check_relaxed(const CnnConfig& arch, const LifConfig& lif,
                          const SurrogateConfig& sg, const SpikeTrain& spikes,
                          int target, uint64_t seed);

}  // namespace spiketext
