#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "spiketext/ann.hpp"
#include "spiketext/cnn.hpp"
#include "spiketext/corpus.hpp"
#include "spiketext/embedding.hpp"
#include "spiketext/optim.hpp"
#include "spiketext/rng.hpp"
#include "spiketext/train_config.hpp"
#include "spiketext/util.hpp"

using namespace spiketext;

namespace {

CnnConfig tiny_arch(std::vector<int> widths, int F, int K, int h, int D,
                    Pooling pool = Pooling::avg,
                    Activation act = Activation::relu, bool bias = false) {
  CnnConfig arch;
  arch.filter_widths = std::move(widths);
  arch.feature_maps = F;
  arch.num_classes = K;
  arch.neurons_per_class = h;
  arch.pooling = pool;
  arch.activation = act;
  arch.use_bias = bias;
  arch.dropout_rate = 0.0f;
  arch.dim = D;
  return arch;
}

template <typename S>
std::vector<S*> param_entries(CnnParamsT<S>& p) {
  std::vector<S*> out;
  for (auto& bank : p.conv_w)
    for (auto& v : bank) out.push_back(&v);
  for (auto& bank : p.conv_b)
    for (auto& v : bank) out.push_back(&v);
  for (auto& v : p.fc_w) out.push_back(&v);
  for (auto& v : p.fc_b) out.push_back(&v);
  return out;
}

// Loss = softmax cross-entropy of `target` given the class scores.
double loss_of(const CnnConfig& arch, const CnnParamsT<double>& params,
               const std::vector<double>& x, int L, int target) {
  std::vector<double> scores(arch.num_classes);
  ForwardCacheT<double> cache;
  cnn_forward<double>(arch, params, x, L, false, nullptr, scores, cache);
  return cross_entropy<double>(scores, target);
}

// Central-difference check of every parameter and the input gradient.
double max_grad_rel_err(const CnnConfig& arch, uint64_t seed) {
  CnnParamsT<double> params = init_cnn_params<double>(
      arch, RngStream::keyed(seed, RngUse::gradcheck, 1));
  const int L = arch.max_width() + 2;
  RngStream xin = RngStream::keyed(seed, RngUse::gradcheck, 2);
  std::vector<double> x(static_cast<size_t>(L) * arch.dim);
  for (auto& v : x) v = xin.uniform(-1.0, 1.0);
  const int target = 1 % arch.num_classes;

  std::vector<double> scores(arch.num_classes);
  ForwardCacheT<double> cache;
  cnn_forward<double>(arch, params, x, L, false, nullptr, scores, cache);
  std::vector<double> d_scores(scores);
  softmax<double>(d_scores);
  d_scores[target] -= 1.0;
  CnnParamsT<double> grads = make_cnn_params<double>(arch);
  if (arch.use_bias) {
    grads.conv_b.resize(arch.num_widths());
    for (int i = 0; i < arch.num_widths(); ++i)
      grads.conv_b[i].assign(arch.feature_maps, 0.0);
    grads.fc_b.assign(arch.fc_rows(), 0.0);
  }
  std::vector<double> d_input;
  cnn_backward<double>(arch, params, cache, d_scores, grads, &d_input);

  const double eps = 1e-5;
  double worst = 0.0;
  auto probe = [&](double* slot, double analytic) {
    const double keep = *slot;
    *slot = keep + eps;
    const double up = loss_of(arch, params, x, L, target);
    *slot = keep - eps;
    const double dn = loss_of(arch, params, x, L, target);
    *slot = keep;
    const double numeric = (up - dn) / (2 * eps);
    const double denom =
        std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
    worst = std::max(worst, std::fabs(analytic - numeric) / denom);
  };

  auto pslots = param_entries(params);
  auto gslots = param_entries(grads);
  REQUIRE(pslots.size() == gslots.size());
  for (size_t i = 0; i < pslots.size(); ++i) probe(pslots[i], *gslots[i]);
  for (size_t i = 0; i < x.size(); ++i) probe(&x[i], d_input[i]);
  return worst;
}

}  // namespace

TEST_CASE("all-zero parameters give zero scores and a uniform softmax") {
  CnnConfig arch = tiny_arch({2, 3}, 3, 4, 2, 3);
  CnnParams params = make_cnn_params<float>(arch);
  std::vector<float> x(5 * 3, 0.7f);
  std::vector<float> scores(4);
  ForwardCache cache;
  cnn_forward<float>(arch, params, x, 5, false, nullptr, scores, cache);
  for (float s : scores) CHECK(s == 0.0f);
  std::vector<float> probs(scores.begin(), scores.end());
  softmax<float>(probs);
  for (float p : probs) CHECK(p == doctest::Approx(0.25f));
}

TEST_CASE("hand convolution: filter [1,1] over [1,0,1] pools to 1") {
  CnnConfig arch = tiny_arch({2}, 1, 1, 1, 1);
  CnnParams params = make_cnn_params<float>(arch);
  params.conv_w[0] = {1.0f, 1.0f};
  params.fc_w = {1.0f};
  std::vector<float> x = {1.0f, 0.0f, 1.0f};
  std::vector<float> scores(1);
  ForwardCache cache;
  cnn_forward<float>(arch, params, x, 3, false, nullptr, scores, cache);
  REQUIRE(cache.pre[0].size() == 2);
  CHECK(cache.pre[0][0] == 1.0f);
  CHECK(cache.pre[0][1] == 1.0f);
  CHECK(cache.pooled[0] == 1.0f);
  CHECK(scores[0] == 1.0f);
}

TEST_CASE("zero input with no bias gives exactly zero scores") {
  CnnConfig arch = tiny_arch({3, 4, 5}, 6, 2, 3, 4);
  CnnParams params =
      init_cnn_params<float>(arch, RngStream::keyed(2, RngUse::ann_init));
  std::vector<float> x(8 * 4, 0.0f);
  std::vector<float> scores(2);
  ForwardCache cache;
  cnn_forward<float>(arch, params, x, 8, false, nullptr, scores, cache);
  CHECK(scores[0] == 0.0f);
  CHECK(scores[1] == 0.0f);
}

TEST_CASE("sequences shorter than the widest filter are rejected") {
  CnnConfig arch = tiny_arch({3, 5}, 2, 2, 1, 3);
  CnnParams params = make_cnn_params<float>(arch);
  std::vector<float> x(4 * 3, 0.1f);
  std::vector<float> scores(2);
  ForwardCache cache;
  CHECK_THROWS_WITH_AS(
      cnn_forward<float>(arch, params, x, 4, false, nullptr, scores, cache),
      doctest::Contains("shorter than"), std::runtime_error);
}

TEST_CASE("eval mode is deterministic; train mode draws a scaled mask") {
  CnnConfig arch = tiny_arch({2}, 5, 2, 2, 3);
  arch.dropout_rate = 0.5f;
  CnnParams params =
      init_cnn_params<float>(arch, RngStream::keyed(3, RngUse::ann_init));
  std::vector<float> x(6 * 3);
  RngStream xin = RngStream::keyed(4, RngUse::synth);
  for (auto& v : x) v = xin.next_float();

  std::vector<float> s1(2), s2(2);
  ForwardCache c1, c2;
  cnn_forward<float>(arch, params, x, 6, false, nullptr, s1, c1);
  cnn_forward<float>(arch, params, x, 6, false, nullptr, s2, c2);
  CHECK(s1 == s2);
  CHECK(c1.mask.empty());

  RngStream drop = RngStream::keyed(5, RngUse::ann_dropout);
  ForwardCache ct;
  std::vector<float> st(2);
  cnn_forward<float>(arch, params, x, 6, true, &drop, st, ct);
  REQUIRE(ct.mask.size() == 5);
  for (float m : ct.mask) CHECK((m == 0.0f || m == 2.0f));
}

TEST_CASE("max pooling keeps the first maximal position on ties") {
  CnnConfig arch = tiny_arch({1}, 1, 1, 1, 1, Pooling::max);
  CnnParams params = make_cnn_params<float>(arch);
  params.conv_w[0] = {1.0f};
  params.fc_w = {1.0f};
  std::vector<float> x = {0.5f, 0.9f, 0.9f, 0.2f};
  std::vector<float> scores(1);
  ForwardCache cache;
  cnn_forward<float>(arch, params, x, 4, false, nullptr, scores, cache);
  CHECK(cache.arg[0][0] == 1);
  CHECK(scores[0] == doctest::Approx(0.9f));
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  CnnConfig arch = tiny_arch({2, 3}, 3, 2, 2, 3);
  CnnParams params =
      init_cnn_params<float>(arch, RngStream::keyed(6, RngUse::ann_init));
  std::vector<float> x(5 * 3, 0.4f);
  std::vector<float> scores(2);
  ForwardCache cache;
  cnn_forward<float>(arch, params, x, 5, false, nullptr, scores, cache);
  CnnParams grads = make_cnn_params<float>(arch);
  std::vector<float> d_scores(2, 0.0f);
  std::vector<float> d_input;
  cnn_backward<float>(arch, params, cache, d_scores, grads, &d_input);
  for (const auto& bank : grads.conv_w)
    for (float g : bank) CHECK(g == 0.0f);
  for (float g : grads.fc_w) CHECK(g == 0.0f);
  for (float g : d_input) CHECK(g == 0.0f);
}

TEST_CASE("avg pooling spreads the input gradient evenly across positions") {
  CnnConfig arch = tiny_arch({1}, 1, 1, 1, 2);
  CnnParams params = make_cnn_params<float>(arch);
  params.conv_w[0] = {0.3f, 0.7f};
  params.fc_w = {1.0f};
  const int L = 4;
  std::vector<float> x(L * 2, 0.5f);
  std::vector<float> scores(1);
  ForwardCache cache;
  cnn_forward<float>(arch, params, x, L, false, nullptr, scores, cache);
  CnnParams grads = make_cnn_params<float>(arch);
  std::vector<float> d_input;
  cnn_backward<float>(arch, params, cache, {std::vector<float>{1.0f}}, grads,
                      &d_input);
  for (int p = 1; p < L; ++p) {
    CHECK(d_input[p * 2 + 0] == d_input[0]);
    CHECK(d_input[p * 2 + 1] == d_input[1]);
  }
  CHECK(d_input[0] == doctest::Approx(0.3f / L));
  CHECK(d_input[1] == doctest::Approx(0.7f / L));
}

TEST_CASE("analytic gradients match central differences on random tiny nets") {
  std::vector<CnnConfig> cases;
  cases.push_back(tiny_arch({2}, 1, 2, 1, 2));
  cases.push_back(tiny_arch({2, 3}, 3, 2, 2, 4));
  cases.push_back(tiny_arch({3}, 2, 3, 2, 3));
  cases.push_back(tiny_arch({2, 3}, 2, 2, 1, 4, Pooling::max));
  cases.push_back(tiny_arch({2}, 3, 2, 2, 3, Pooling::avg, Activation::sigmoid));
  cases.push_back(
      tiny_arch({2, 4}, 2, 3, 2, 3, Pooling::max, Activation::sigmoid, true));
  cases.push_back(tiny_arch({3}, 3, 2, 3, 2, Pooling::avg, Activation::relu, true));
  uint64_t seed = 100;
  for (const auto& arch : cases) {
    for (int rep = 0; rep < 3; ++rep) {
      const double err = max_grad_rel_err(arch, seed++);
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("relu-then-avg-pool commutes only for one-signed pre-activations") {
  CnnConfig arch = tiny_arch({2}, 1, 1, 1, 1);
  CnnParams params = make_cnn_params<float>(arch);
  params.conv_w[0] = {1.0f, 1.0f};
  params.fc_w = {1.0f};

  auto pooled_of = [&](const std::vector<float>& x) {
    std::vector<float> scores(1);
    ForwardCache cache;
    cnn_forward<float>(arch, params, x, static_cast<int>(x.size()), false,
                       nullptr, scores, cache);
    float mean_pre = 0.0f;
    for (float v : cache.pre[0]) mean_pre += v;
    mean_pre /= static_cast<float>(cache.pre[0].size());
    const float relu_of_mean = mean_pre > 0 ? mean_pre : 0.0f;
    return std::pair<float, float>(cache.pooled[0], relu_of_mean);
  };

  auto [pos_pool, pos_swap] = pooled_of({0.2f, 0.4f, 0.1f, 0.6f});
  CHECK(pos_pool == doctest::Approx(pos_swap));

  // windows of [2,-1,-1,2] give pre-activations [1,-2,1]: relu-then-pool
  // keeps 2/3 while pool-then-relu collapses to 0.
  auto [mix_pool, mix_swap] = pooled_of({2.0f, -1.0f, -1.0f, 2.0f});
  CHECK(mix_pool > mix_swap);
  CHECK(mix_pool == doctest::Approx(2.0f / 3.0f));
  CHECK(mix_swap == 0.0f);
}

TEST_CASE("cross entropy of the true class is nonnegative and matches -log softmax") {
  std::vector<float> scores = {0.2f, 1.7f, -0.4f};
  std::vector<float> probs = scores;
  softmax<float>(probs);
  for (int target = 0; target < 3; ++target) {
    const float ce = cross_entropy<float>(scores, target);
    CHECK(ce >= 0.0f);
    CHECK(ce == doctest::Approx(-std::log(probs[target])));
  }
}

TEST_CASE("prediction takes the argmax with ties to the lowest class") {
  CHECK(argmax<float>(std::vector<float>{0.1f, 0.9f}) == 1);
  CHECK(argmax<float>(std::vector<float>{0.5f, 0.5f}) == 0);
  CHECK(argmax<float>(std::vector<float>{0.0f, 0.0f, 0.0f}) == 0);

  CnnConfig arch = tiny_arch({2}, 2, 3, 2, 2);
  CnnParams zero = make_cnn_params<float>(arch);
  std::vector<float> x(4 * 2, 0.3f);
  CHECK(cnn_predict<float>(arch, zero, x, 4) == 0);
}

TEST_CASE("adam with zero learning rate leaves parameters unchanged") {
  std::vector<float> params = {0.5f, -1.0f, 2.0f};
  std::vector<float> before = params;
  std::vector<float> grads = {1.0f, -2.0f, 0.25f};
  AdamState state;
  AdamConfig cfg;
  cfg.lr = 0.0f;
  for (int i = 0; i < 10; ++i) adam_step(params, grads, state, cfg);
  CHECK(params == before);
}

TEST_CASE("adam moves parameters against the gradient") {
  std::vector<float> params = {1.0f};
  std::vector<float> grads = {2.0f};
  AdamState state;
  AdamConfig cfg;
  cfg.lr = 0.1f;
  adam_step(params, grads, state, cfg);
  CHECK(params[0] < 1.0f);
  CHECK(params[0] == doctest::Approx(0.9f).epsilon(1e-4));
}

namespace {

// Two classes with disjoint token sets; any vocabulary-separating rule
// classifies it perfectly.
Dataset separable_toy(int per_class, int doc_len) {
  Dataset d;
  d.num_classes = 2;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < per_class; ++i) {
      Example ex;
      ex.label = c;
      for (int k = 0; k < doc_len; ++k) {
        if (!ex.text.empty()) ex.text += ' ';
        ex.text += (c == 0 ? "neg" : "pos") + std::to_string((i + k) % 7);
      }
      d.examples.push_back(ex);
    }
  }
  return d;
}

}  // namespace

TEST_CASE("a linearly separable toy set reaches full training accuracy") {
  Dataset train = separable_toy(10, 6);
  Vocabulary vocab = build_vocab(train, 1);
  encode_examples(train, vocab, 6);

  const int D = 8;
  EmbeddingTable table;
  table.dim = D;
  table.vocab_size = vocab.size();
  table.data.assign(static_cast<size_t>(vocab.size()) * D, 0.0f);
  RngStream emb = RngStream::keyed(1, RngUse::embedding_oov);
  for (int r = 1; r < vocab.size(); ++r)
    for (int d = 0; d < D; ++d)
      table.data[static_cast<size_t>(r) * D + d] = emb.next_float();
  table.trainable = true;

  CnnConfig arch = tiny_arch({2, 3}, 8, 2, 2, D);
  CnnParams init =
      init_cnn_params<float>(arch, RngStream::keyed(9, RngUse::ann_init));

  TrainConfig cfg;
  cfg.lr = 5e-3f;
  cfg.batch_size = 5;
  cfg.epochs = 50;
  cfg.seed = 9;
  cfg.dropout_rate = 0.0f;
  AnnTrainResult result = train_ann(arch, init, train, table, cfg);
  CHECK(evaluate_ann(arch, result.params, train, table) == 1.0);
  CHECK(result.epoch_loss.front() > result.epoch_loss.back());
}

TEST_CASE("zero learning rate leaves training parameters untouched") {
  Dataset train = separable_toy(4, 5);
  Vocabulary vocab = build_vocab(train, 1);
  encode_examples(train, vocab, 5);
  EmbeddingTable table;
  table.dim = 4;
  table.vocab_size = vocab.size();
  table.data.assign(static_cast<size_t>(vocab.size()) * 4, 0.25f);
  for (int d = 0; d < 4; ++d) table.data[d] = 0.0f;
  table.trainable = false;

  CnnConfig arch = tiny_arch({2}, 3, 2, 2, 4);
  CnnParams init =
      init_cnn_params<float>(arch, RngStream::keyed(10, RngUse::ann_init));
  TrainConfig cfg;
  cfg.lr = 0.0f;
  cfg.batch_size = 4;
  cfg.epochs = 3;
  cfg.seed = 10;
  cfg.dropout_rate = 0.0f;
  AnnTrainResult result = train_ann(arch, init, train, table, cfg);
  for (size_t i = 0; i < init.conv_w.size(); ++i)
    CHECK(result.params.conv_w[i] == init.conv_w[i]);
  CHECK(result.params.fc_w == init.fc_w);
}

TEST_CASE("training is bit-identical across runs with the same seed") {
  Dataset train = separable_toy(6, 5);
  Vocabulary vocab = build_vocab(train, 1);
  encode_examples(train, vocab, 5);
  auto make_table = [&] {
    EmbeddingTable table;
    table.dim = 4;
    table.vocab_size = vocab.size();
    table.data.assign(static_cast<size_t>(vocab.size()) * 4, 0.0f);
    RngStream emb = RngStream::keyed(2, RngUse::embedding_oov);
    for (size_t i = 4; i < table.data.size(); ++i)
      table.data[i] = emb.next_float();
    return table;
  };

  CnnConfig arch = tiny_arch({2, 3}, 4, 2, 2, 4);
  arch.dropout_rate = 0.5f;
  CnnParams init =
      init_cnn_params<float>(arch, RngStream::keyed(11, RngUse::ann_init));
  TrainConfig cfg;
  cfg.lr = 1e-3f;
  cfg.batch_size = 4;
  cfg.epochs = 5;
  cfg.seed = 11;
  cfg.dropout_rate = 0.5f;

  EmbeddingTable t1 = make_table();
  EmbeddingTable t2 = make_table();
  AnnTrainResult r1 = train_ann(arch, init, train, t1, cfg);
  AnnTrainResult r2 = train_ann(arch, init, train, t2, cfg);
  CHECK(r1.epoch_loss == r2.epoch_loss);
  for (size_t i = 0; i < r1.params.conv_w.size(); ++i)
    CHECK(r1.params.conv_w[i] == r2.params.conv_w[i]);
  CHECK(r1.params.fc_w == r2.params.fc_w);
  CHECK(t1.data == t2.data);
}

TEST_CASE("embedding rows stay inside the unit interval during training") {
  Dataset train = separable_toy(6, 5);
  Vocabulary vocab = build_vocab(train, 1);
  encode_examples(train, vocab, 5);
  EmbeddingTable table;
  table.dim = 4;
  table.vocab_size = vocab.size();
  table.data.assign(static_cast<size_t>(vocab.size()) * 4, 0.5f);
  for (int d = 0; d < 4; ++d) table.data[d] = 0.0f;
  table.trainable = true;

  CnnConfig arch = tiny_arch({2}, 4, 2, 2, 4);
  CnnParams init =
      init_cnn_params<float>(arch, RngStream::keyed(12, RngUse::ann_init));
  TrainConfig cfg;
  cfg.lr = 0.05f;
  cfg.batch_size = 6;
  cfg.epochs = 10;
  cfg.seed = 12;
  cfg.dropout_rate = 0.0f;
  train_ann(arch, init, train, table, cfg);
  for (float v : table.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  for (int d = 0; d < 4; ++d) CHECK(table.data[d] == 0.0f);
}
