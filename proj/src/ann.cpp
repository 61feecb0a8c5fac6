#include "spiketext/ann.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "spiketext/optim.hpp"
#include "spiketext/rng.hpp"
#include "spiketext/util.hpp"

namespace spiketext {

namespace {

void zero_params(CnnParams& g) {
  for (auto& bank : g.conv_w) std::fill(bank.begin(), bank.end(), 0.0f);
  for (auto& bank : g.conv_b) std::fill(bank.begin(), bank.end(), 0.0f);
  std::fill(g.fc_w.begin(), g.fc_w.end(), 0.0f);
  std::fill(g.fc_b.begin(), g.fc_b.end(), 0.0f);
}

}  // namespace

AnnTrainResult train_ann(const CnnConfig& arch_in, const CnnParams& init,
                         const Dataset& train, EmbeddingTable& table,
                         const TrainConfig& cfg) {
  cfg.validate();
  require(!train.examples.empty(), "train_ann: empty dataset");
  CnnConfig arch = arch_in;
  arch.dropout_rate = cfg.dropout_rate;
  arch.validate();

  AnnTrainResult result;
  result.params = init;
  CnnParams grads = make_cnn_params<float>(arch);
  std::vector<float> emb_grad;

  std::vector<AdamState> conv_w_state(arch.num_widths());
  std::vector<AdamState> conv_b_state(arch.num_widths());
  AdamState fc_w_state, fc_b_state, emb_state;
  const AdamConfig adam{cfg.lr, 0.9f, 0.999f, 1e-8f};

  const int N = static_cast<int>(train.examples.size());
  const int B = cfg.batch_size;
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);

  std::vector<float> x;
  std::vector<float> scores(arch.num_classes);
  std::vector<float> d_scores(arch.num_classes);
  std::vector<float> d_input;
  ForwardCache cache;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    RngStream shuffle_rng =
        RngStream::keyed(cfg.seed, RngUse::ann_shuffle, epoch);
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;

    for (int b0 = 0, batch_idx = 0; b0 < N; b0 += B, ++batch_idx) {
      const int batch_n = std::min(B, N - b0);
      zero_params(grads);
      if (table.trainable) emb_grad.assign(table.data.size(), 0.0f);
      double batch_loss = 0.0;

      for (int k = 0; k < batch_n; ++k) {
        const Example& ex = train.examples[order[b0 + k]];
        const int L = static_cast<int>(ex.tokens.size());
        embed_sequence(table, ex.tokens, x);
        RngStream drop_rng =
            RngStream::keyed(cfg.seed, RngUse::ann_dropout, epoch, batch_idx, k);
        cnn_forward<float>(arch, result.params, x, L, true, &drop_rng, scores,
                           cache);
        batch_loss += cross_entropy<float>(scores, ex.label);

        std::copy(scores.begin(), scores.end(), d_scores.begin());
        softmax<float>(d_scores);
        d_scores[ex.label] -= 1.0f;
        for (float& v : d_scores) v /= static_cast<float>(batch_n);
        cnn_backward<float>(arch, result.params, cache, d_scores, grads,
                            table.trainable ? &d_input : nullptr);

        if (table.trainable) {
          for (int l = 0; l < L; ++l) {
            const int32_t id = ex.tokens[l];
            if (id == Vocabulary::pad_id) continue;
            axpy(1.0f, d_input.data() + static_cast<size_t>(l) * arch.dim,
                 emb_grad.data() + static_cast<size_t>(id) * arch.dim,
                 static_cast<size_t>(arch.dim));
          }
        }
      }

      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train_ann: non-finite loss at epoch " +
                                 std::to_string(epoch) + " batch " +
                                 std::to_string(batch_idx));
      }
      epoch_loss += batch_loss;

      for (int i = 0; i < arch.num_widths(); ++i) {
        adam_step(result.params.conv_w[i], grads.conv_w[i], conv_w_state[i],
                  adam);
        if (arch.use_bias) {
          adam_step(result.params.conv_b[i], grads.conv_b[i], conv_b_state[i],
                    adam);
        }
      }
      adam_step(result.params.fc_w, grads.fc_w, fc_w_state, adam);
      if (arch.use_bias) adam_step(result.params.fc_b, grads.fc_b, fc_b_state, adam);
      if (table.trainable) {
        adam_step(table.data, emb_grad, emb_state, adam);
        clip01(table);
      }
    }
    result.epoch_loss.push_back(epoch_loss / N);
  }
  return result;
}

double evaluate_ann(const CnnConfig& arch, const CnnParams& params,
                    const Dataset& data, const EmbeddingTable& table) {
  require(!data.examples.empty(), "evaluate_ann: empty dataset");
  std::vector<float> x;
  int correct = 0;
  for (const Example& ex : data.examples) {
    embed_sequence(table, ex.tokens, x);
    const int pred = cnn_predict<float>(arch, params, x,
                                        static_cast<int>(ex.tokens.size()));
    if (pred == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.examples.size());
}

}  // namespace spiketext
