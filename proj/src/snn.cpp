#include "spiketext/snn.hpp"

#include <algorithm>
#include <cmath>

namespace spiketext {

SnnModel convert(const CnnConfig& arch, const CnnParams& params,
                 const LifConfig& lif) {
  arch.validate();
  lif.validate();
  if (arch.use_bias || !params.fc_b.empty()) {
    throw std::runtime_error("not convertible: network has bias terms");
  }
  if (arch.pooling != Pooling::avg) {
    throw std::runtime_error("not convertible: network uses max pooling");
  }
  SnnModel model;
  model.arch = arch;
  model.params = params;
  model.lif = lif;
  return model;
}

int readout(const std::vector<int>& counts, int T, int K) {
  require(counts.size() == static_cast<size_t>(T) * K, "readout: shape mismatch");
  std::vector<int64_t> totals(K, 0);
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < K; ++c) totals[c] += counts[static_cast<size_t>(t) * K + c];
  }
  return argmax<int64_t>(totals);
}

std::vector<float> normalize_model_based(SnnModel& model) {
  const CnnConfig& arch = model.arch;
  double lambda_conv = 0.0;
  for (int i = 0; i < arch.num_widths(); ++i) {
    const size_t span_len =
        static_cast<size_t>(arch.filter_widths[i]) * arch.dim;
    for (int f = 0; f < arch.feature_maps; ++f) {
      double pos = 0.0;
      const float* wf =
          model.params.conv_w[i].data() + static_cast<size_t>(f) * span_len;
      for (size_t j = 0; j < span_len; ++j) {
        if (wf[j] > 0.0f) pos += wf[j];
      }
      lambda_conv = std::max(lambda_conv, pos);
    }
  }
  double lambda_fc = 0.0;
  const int pooled_n = arch.pooled_size();
  for (int u = 0; u < arch.fc_rows(); ++u) {
    double pos = 0.0;
    const float* wu = model.params.fc_w.data() + static_cast<size_t>(u) * pooled_n;
    for (int j = 0; j < pooled_n; ++j) {
      if (wu[j] > 0.0f) pos += wu[j];
    }
    lambda_fc = std::max(lambda_fc, pos);
  }

  const float s_conv = static_cast<float>(std::max(lambda_conv, 1.0));
  const float s_fc = static_cast<float>(std::max(lambda_fc, 1.0));
  for (auto& bank : model.params.conv_w) {
    for (float& w : bank) w /= s_conv;
  }
  for (float& w : model.params.fc_w) w /= s_fc;
  return {s_conv, s_fc};
}

std::vector<float> normalize_data_based(SnnModel& model, const CnnParams& ann,
                                        const Dataset& train,
                                        const EmbeddingTable& table) {
  const CnnConfig& arch = model.arch;
  require(!train.examples.empty(), "normalize_data_based: empty training set");

  double max_act = 0.0;
  double max_out = 0.0;
  std::vector<float> x;
  std::vector<float> scores(arch.num_classes);
  ForwardCache cache;
  for (const Example& ex : train.examples) {
    const int L = static_cast<int>(ex.tokens.size());
    if (L < arch.max_width()) continue;
    embed_sequence(table, ex.tokens, x);
    cnn_forward<float>(arch, ann, x, L, false, nullptr, scores, cache);
    for (const auto& act : cache.act) {
      for (float a : act) max_act = std::max(max_act, static_cast<double>(a));
    }
    for (float o : cache.fc_out) max_out = std::max(max_out, static_cast<double>(o));
  }

  const float lambda1 = static_cast<float>(std::max(max_act, 1.0));
  const float lambda2 = static_cast<float>(std::max(max_out, 1.0));
  for (auto& bank : model.params.conv_w) {
    for (float& w : bank) w /= lambda1;
  }
  const float fc_scale = lambda1 / lambda2;
  for (float& w : model.params.fc_w) w *= fc_scale;
  return {lambda1, lambda2};
}

}  // namespace spiketext
