#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "spiketext/corpus.hpp"
#include "spiketext/embedding.hpp"
#include "spiketext/rng.hpp"

using namespace spiketext;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p.string();
}

Vocabulary vocab_of(const std::vector<std::string>& words) {
  Dataset d;
  d.num_classes = 1;
  Example ex;
  ex.label = 0;
  for (const auto& w : words) {
    if (!ex.text.empty()) ex.text += ' ';
    ex.text += w;
  }
  d.examples.push_back(ex);
  return build_vocab(d, 1);
}

}  // namespace

TEST_CASE("embedding file rows land at the vocab ids") {
  auto path = write_temp("emb_basic.txt", "good 0.1 -0.2\n");
  Vocabulary v = vocab_of({"good"});
  auto raw = load_embedding_file(path, v, 2, 0);
  const int32_t id = v.lookup("good");
  CHECK(raw[id * 2 + 0] == doctest::Approx(0.1f));
  CHECK(raw[id * 2 + 1] == doctest::Approx(-0.2f));
  for (int d = 0; d < 2; ++d) CHECK(raw[Vocabulary::pad_id * 2 + d] == 0.0f);
}

TEST_CASE("embedding file with wrong column count is rejected") {
  auto path = write_temp("emb_short.txt", "good 0.1\n");
  Vocabulary v = vocab_of({"good"});
  CHECK_THROWS(load_embedding_file(path, v, 2, 0));
}

TEST_CASE("embedding file with unreadable float is rejected") {
  auto path = write_temp("emb_badfloat.txt", "good 0.1 zzz\n");
  Vocabulary v = vocab_of({"good"});
  CHECK_THROWS(load_embedding_file(path, v, 2, 0));
}

TEST_CASE("out-of-file tokens get seeded rows in the observed range") {
  auto path = write_temp("emb_oov.txt", "good 0.5 -0.5\n");
  Vocabulary v = vocab_of({"good", "mystery"});
  auto a = load_embedding_file(path, v, 2, 17);
  auto b = load_embedding_file(path, v, 2, 17);
  CHECK(a == b);
  const int32_t id = v.lookup("mystery");
  for (int d = 0; d < 2; ++d) {
    CHECK(a[id * 2 + d] >= -0.5f);
    CHECK(a[id * 2 + d] <= 0.5f);
  }
  auto c = load_embedding_file(path, v, 2, 18);
  CHECK(a != c);
}

TEST_CASE("normalization maps mean and clip boundaries exactly") {
  // Rows (pad excluded) hold {3, -3, 0 x 16}: mu = 0 and sigma = 1 exactly,
  // so mu -> 0.5, mu+3s -> 1, mu-3s -> 0 with no rounding slack.
  const int dim = 2;
  const int vocab_size = 10;
  std::vector<float> raw(vocab_size * dim, 0.0f);
  raw[1 * dim + 0] = 3.0f;
  raw[1 * dim + 1] = -3.0f;

  EmbeddingStats stats = compute_stats(raw, vocab_size, dim);
  CHECK(stats.mu == 0.0);
  CHECK(stats.sigma == 1.0);

  EmbeddingTable table = normalize_shift(raw, vocab_size, dim);
  CHECK(table.data[1 * dim + 0] == 1.0f);
  CHECK(table.data[1 * dim + 1] == 0.0f);
  CHECK(table.data[2 * dim + 0] == 0.5f);
  CHECK(table.data[2 * dim + 1] == 0.5f);
}

TEST_CASE("values beyond three sigma clip to the boundary") {
  const int dim = 2;
  const int vocab_size = 10;
  std::vector<float> raw(vocab_size * dim, 0.0f);
  raw[1 * dim + 0] = 3.0f;
  raw[1 * dim + 1] = -3.0f;
  std::vector<float> extreme = raw;
  extreme[2 * dim + 0] = -5.0f;
  EmbeddingStats st = compute_stats(raw, vocab_size, dim);
  EmbeddingTable table = normalize_shift(extreme, vocab_size, dim);
  // mu/sigma move slightly once the -5 entry joins, but the output must
  // still sit exactly on the lower boundary after clipping.
  CHECK(table.data[2 * dim + 0] == 0.0f);
  (void)st;
}

TEST_CASE("normalized entries always land inside the unit interval") {
  RngStream rng = RngStream::keyed(3, RngUse::synth, 50);
  const int vocab_size = 40;
  const int dim = 7;
  std::vector<float> raw(vocab_size * dim);
  for (auto& v : raw) v = static_cast<float>(rng.uniform(-8.0, 8.0));
  for (int d = 0; d < dim; ++d) raw[d] = 0.0f;
  EmbeddingTable table = normalize_shift(raw, vocab_size, dim);
  for (float v : table.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  for (int d = 0; d < dim; ++d) CHECK(table.data[d] == 0.0f);
}

TEST_CASE("normalization preserves the component order") {
  RngStream rng = RngStream::keyed(9, RngUse::synth, 51);
  const int vocab_size = 30;
  const int dim = 5;
  std::vector<float> raw(vocab_size * dim);
  for (auto& v : raw) v = static_cast<float>(rng.gaussian() * 2.0);
  for (int d = 0; d < dim; ++d) raw[d] = 0.0f;
  EmbeddingTable table = normalize_shift(raw, vocab_size, dim);
  for (size_t i = dim; i < raw.size(); ++i) {
    for (size_t j = dim; j < raw.size(); ++j) {
      if (raw[i] <= raw[j]) CHECK(table.data[i] <= table.data[j]);
    }
  }
}

TEST_CASE("a constant matrix is rejected") {
  std::vector<float> raw(20, 0.7f);
  for (int d = 0; d < 2; ++d) raw[d] = 0.0f;
  std::vector<float> flat(20, 0.0f);
  CHECK_THROWS(normalize_shift(raw, 10, 2));
  CHECK_THROWS(normalize_shift(flat, 10, 2));
}

TEST_CASE("Gaussian matrices keep at least 99 percent strictly inside (0,1)") {
  RngStream rng = RngStream::keyed(7, RngUse::synth, 52);
  const int vocab_size = 1001;
  const int dim = 20;
  std::vector<float> raw(vocab_size * dim);
  for (auto& v : raw) v = static_cast<float>(rng.gaussian());
  for (int d = 0; d < dim; ++d) raw[d] = 0.0f;
  EmbeddingTable table = normalize_shift(raw, vocab_size, dim);
  int inside = 0;
  int total = 0;
  for (int r = 1; r < vocab_size; ++r) {
    for (int d = 0; d < dim; ++d) {
      const float v = table.data[r * dim + d];
      ++total;
      if (v > 0.0f && v < 1.0f) ++inside;
    }
  }
  CHECK(static_cast<double>(inside) / total >= 0.99);
}

TEST_CASE("clip01 clamps entries and is idempotent") {
  EmbeddingTable table;
  table.dim = 2;
  table.vocab_size = 3;
  table.data = {0.0f, 0.0f, 1.2f, -0.1f, 0.37f, 0.9f};
  clip01(table);
  CHECK(table.data[2] == 1.0f);
  CHECK(table.data[3] == 0.0f);
  CHECK(table.data[4] == 0.37f);
  CHECK(table.data[5] == 0.9f);
  std::vector<float> once = table.data;
  clip01(table);
  CHECK(table.data == once);
}

TEST_CASE("clip01 re-zeros the pad row") {
  EmbeddingTable table;
  table.dim = 2;
  table.vocab_size = 2;
  table.data = {0.4f, -0.2f, 0.5f, 0.5f};
  clip01(table);
  CHECK(table.data[0] == 0.0f);
  CHECK(table.data[1] == 0.0f);
}

TEST_CASE("random embedding matrices are seed-deterministic") {
  Vocabulary v = vocab_of({"a", "b", "c"});
  auto m1 = random_embedding_matrix(v, 4, 11);
  auto m2 = random_embedding_matrix(v, 4, 11);
  auto m3 = random_embedding_matrix(v, 4, 12);
  CHECK(m1 == m2);
  CHECK(m1 != m3);
  for (int d = 0; d < 4; ++d) CHECK(m1[d] == 0.0f);
}

TEST_CASE("embed_sequence lays rows out in token order") {
  EmbeddingTable table;
  table.dim = 2;
  table.vocab_size = 3;
  table.data = {0.0f, 0.0f, 0.1f, 0.2f, 0.3f, 0.4f};
  std::vector<int32_t> tokens = {2, 0, 1};
  std::vector<float> x;
  embed_sequence(table, tokens, x);
  REQUIRE(x.size() == 6);
  CHECK(x[0] == 0.3f);
  CHECK(x[1] == 0.4f);
  CHECK(x[2] == 0.0f);
  CHECK(x[3] == 0.0f);
  CHECK(x[4] == 0.1f);
  CHECK(x[5] == 0.2f);
}
