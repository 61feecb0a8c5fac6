#include "spiketext/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spiketext/encoder.hpp"
#include "spiketext/optim.hpp"
#include "spiketext/rng.hpp"

namespace spiketext {

namespace {

void zero_params(CnnParams& g) {
  for (auto& bank : g.conv_w) std::fill(bank.begin(), bank.end(), 0.0f);
  std::fill(g.fc_w.begin(), g.fc_w.end(), 0.0f);
}

std::vector<float> draw_dropout_mask(int n, float rate, RngStream& rng) {
  std::vector<float> mask(n);
  const float keep_scale = 1.0f / (1.0f - rate);
  for (int j = 0; j < n; ++j) {
    mask[j] = rng.next_double() < rate ? 0.0f : keep_scale;
  }
  return mask;
}

FinetuneResult run_snn_training(SnnModel model, const Dataset& train,
                                const Dataset& val, const EmbeddingTable& table,
                                const SurrogateConfig& sg,
                                const TrainConfig& cfg) {
  cfg.validate();
  sg.validate();
  model.lif.validate();
  require(!train.examples.empty(), "snn training: empty dataset");

  FinetuneResult result;
  result.initial_val_acc = evaluate_snn(model, val, table, cfg.seed);
  CnnParams best = model.params;
  double best_val = result.initial_val_acc;

  CnnParams grads = make_cnn_params<float>(model.arch);
  std::vector<AdamState> conv_state(model.arch.num_widths());
  AdamState fc_state;
  const AdamConfig adam{cfg.lr, 0.9f, 0.999f, 1e-8f};

  const int N = static_cast<int>(train.examples.size());
  const int B = cfg.batch_size;
  const int K = model.arch.num_classes;
  const int T = model.lif.T;
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);

  std::vector<float> x;
  std::vector<float> d_logits;
  SnnRun run;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    RngStream shuffle_rng =
        RngStream::keyed(cfg.seed, RngUse::snn_shuffle, epoch);
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    int train_correct = 0;

    for (int b0 = 0, batch_idx = 0; b0 < N; b0 += B, ++batch_idx) {
      const int batch_n = std::min(B, N - b0);
      zero_params(grads);
      double batch_loss = 0.0;

      for (int k = 0; k < batch_n; ++k) {
        const Example& ex = train.examples[order[b0 + k]];
        const int L = static_cast<int>(ex.tokens.size());
        embed_sequence(table, ex.tokens, x);
        SpikeTrain spikes = encode_poisson(
            x, L, model.arch.dim, T,
            RngStream::keyed(cfg.seed, RngUse::poisson, epoch, batch_idx, k));

        std::vector<float> mask;
        if (cfg.dropout_rate > 0.0f) {
          RngStream drop_rng = RngStream::keyed(cfg.seed, RngUse::snn_dropout,
                                                epoch, batch_idx, k);
          mask = draw_dropout_mask(model.arch.pooled_size(), cfg.dropout_rate,
                                   drop_rng);
        }
        snn_forward<float>(model.arch, model.params, model.lif, sg, spikes,
                           false, true, mask.empty() ? nullptr : &mask, run);
        batch_loss += loss_rate_ce<float>(run.logits, T, K, ex.label);
        if (readout(run.counts, T, K) == ex.label) ++train_correct;

        loss_rate_ce_grad<float>(run.logits, T, K, ex.label,
                                 1.0f / static_cast<float>(batch_n), d_logits);
        snn_backward<float>(model.arch, model.params, model.lif, sg, spikes,
                            run, d_logits, false, grads);
      }

      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("snn training: non-finite loss at epoch " +
                                 std::to_string(epoch) + " batch " +
                                 std::to_string(batch_idx));
      }
      epoch_loss += batch_loss;

      for (int i = 0; i < model.arch.num_widths(); ++i) {
        adam_step(model.params.conv_w[i], grads.conv_w[i], conv_state[i], adam);
      }
      adam_step(model.params.fc_w, grads.fc_w, fc_state, adam);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = epoch_loss / N;
    stats.train_acc = static_cast<double>(train_correct) / N;
    stats.val_acc = evaluate_snn(model, val, table, cfg.seed);
    result.epochs.push_back(stats);
    if (stats.val_acc > best_val) {
      best_val = stats.val_acc;
      best = model.params;
      result.best_epoch = epoch;
    }
  }

  model.params = best;
  result.model = std::move(model);
  return result;
}

}  // namespace

FinetuneResult finetune(const SnnModel& init, const Dataset& train,
                        const Dataset& val, const EmbeddingTable& table,
                        const SurrogateConfig& sg, const TrainConfig& cfg) {
  return run_snn_training(init, train, val, table, sg, cfg);
}

FinetuneResult train_direct(const CnnConfig& arch, const LifConfig& lif,
                            const Dataset& train, const Dataset& val,
                            const EmbeddingTable& table,
                            const SurrogateConfig& sg, const TrainConfig& cfg) {
  CnnParams params = init_cnn_params<float>(
      arch, RngStream::keyed(cfg.seed, RngUse::direct_init));
  SnnModel model = convert(arch, params, lif);
  return run_snn_training(std::move(model), train, val, table, sg, cfg);
}

double evaluate_snn(const SnnModel& model, const Dataset& data,
                    const EmbeddingTable& table, uint64_t seed, int trials,
                    double* std_out) {
  require(!data.examples.empty(), "evaluate_snn: empty dataset");
  require(trials >= 1, "evaluate_snn: trials must be >= 1");
  SurrogateConfig sg;
  sg.k = model.lif.k;
  std::vector<float> x;
  SnnRun run;
  std::vector<double> accs(trials, 0.0);
  for (int trial = 0; trial < trials; ++trial) {
    int correct = 0;
    for (size_t idx = 0; idx < data.examples.size(); ++idx) {
      const Example& ex = data.examples[idx];
      embed_sequence(table, ex.tokens, x);
      SpikeTrain spikes = encode_poisson(
          x, static_cast<int>(ex.tokens.size()), model.arch.dim, model.lif.T,
          RngStream::keyed(seed, RngUse::eval_poisson, trial, idx));
      snn_forward<float>(model.arch, model.params, model.lif, sg, spikes,
                         false, false, nullptr, run);
      if (readout(run.counts, model.lif.T, model.arch.num_classes) == ex.label) {
        ++correct;
      }
    }
    accs[trial] = static_cast<double>(correct) / data.examples.size();
  }
  double mean = 0.0;
  for (double a : accs) mean += a;
  mean /= trials;
  if (std_out) {
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    *std_out = std::sqrt(var / trials);
  }
  return mean;
}

double grad_check_relaxed(const CnnConfig& arch, const LifConfig& lif,
                          const SurrogateConfig& sg, const SpikeTrain& spikes,
                          int target, uint64_t seed) {
  CnnParamsT<double> params = init_cnn_params<double>(
      arch, RngStream::keyed(seed, RngUse::gradcheck));
  const int T = spikes.T;
  const int K = arch.num_classes;

  SnnRunT<double> run;
  snn_forward<double>(arch, params, lif, sg, spikes, true, true, nullptr, run);
  std::vector<double> d_logits;
  loss_rate_ce_grad<double>(run.logits, T, K, target, 1.0, d_logits);
  CnnParamsT<double> grads = make_cnn_params<double>(arch);
  snn_backward<double>(arch, params, lif, sg, spikes, run, d_logits, true,
                       grads);

  auto relaxed_loss = [&]() {
    SnnRunT<double> r;
    snn_forward<double>(arch, params, lif, sg, spikes, true, false, nullptr, r);
    return loss_rate_ce<double>(r.logits, T, K, target);
  };

  const double eps = 1e-5;
  double max_rel = 0.0;
  auto check_tensor = [&](std::vector<double>& theta,
                          const std::vector<double>& analytic) {
    for (size_t j = 0; j < theta.size(); ++j) {
      const double save = theta[j];
      theta[j] = save + eps;
      const double lp = relaxed_loss();
      theta[j] = save - eps;
      const double lm = relaxed_loss();
      theta[j] = save;
      const double numeric = (lp - lm) / (2.0 * eps);
      const double a = analytic[j];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  };
  for (int i = 0; i < arch.num_widths(); ++i) {
    check_tensor(params.conv_w[i], grads.conv_w[i]);
  }
  check_tensor(params.fc_w, grads.fc_w);
  return max_rel;
}

}  // namespace spiketext
