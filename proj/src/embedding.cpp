#include "spiketext/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "spiketext/rng.hpp"
#include "spiketext/util.hpp"

namespace spiketext {

std::vector<float> load_embedding_file(const std::string& path,
                                       const Vocabulary& vocab, int dim,
                                       uint64_t seed) {
  require(dim >= 1, "embedding dimension must be positive");
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open embedding file: " + path);

  const size_t v = static_cast<size_t>(vocab.size());
  std::vector<float> raw(v * static_cast<size_t>(dim), 0.0f);
  std::vector<bool> filled(v, false);
  filled[Vocabulary::pad_id] = true;  // pad stays zero

  float lo = std::numeric_limits<float>::max();
  float hi = std::numeric_limits<float>::lowest();
  bool any_loaded = false;

  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    int32_t id = vocab.lookup(token);
    const bool wanted = id != Vocabulary::unk_id && !filled[id];

    int count = 0;
    std::string field;
    float* dst = wanted ? raw.data() + static_cast<size_t>(id) * dim : nullptr;
    while (ss >> field) {
      require(count < dim, path + ":" + std::to_string(lineno) +
                               ": dimension mismatch (more than " +
                               std::to_string(dim) + " values)");
      float value = 0.0f;
      auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      require(ec == std::errc() && p == field.data() + field.size(),
              path + ":" + std::to_string(lineno) + ": unreadable float '" +
                  field + "'");
      if (dst) dst[count] = value;
      lo = std::min(lo, value);
      hi = std::max(hi, value);
      any_loaded = true;
      ++count;
    }
    require(count == dim, path + ":" + std::to_string(lineno) +
                              ": dimension mismatch (got " +
                              std::to_string(count) + ", expected " +
                              std::to_string(dim) + ")");
    if (wanted) filled[id] = true;
  }

  if (!any_loaded) {
    lo = -0.5f;
    hi = 0.5f;
  }
  for (size_t id = 0; id < v; ++id) {
    if (filled[id]) continue;
    RngStream rng = RngStream::keyed(seed, RngUse::embedding_oov, id);
    float* dst = raw.data() + id * static_cast<size_t>(dim);
    for (int d = 0; d < dim; ++d) {
      dst[d] = static_cast<float>(rng.uniform(lo, hi));
    }
  }
  return raw;
}

std::vector<float> random_embedding_matrix(const Vocabulary& vocab, int dim,
                                           uint64_t seed) {
  const size_t v = static_cast<size_t>(vocab.size());
  std::vector<float> raw(v * static_cast<size_t>(dim), 0.0f);
  for (size_t id = 1; id < v; ++id) {  // row 0 = pad = zero
    RngStream rng = RngStream::keyed(seed, RngUse::embedding_oov, id);
    float* dst = raw.data() + id * static_cast<size_t>(dim);
    for (int d = 0; d < dim; ++d) dst[d] = static_cast<float>(rng.gaussian());
  }
  return raw;
}

EmbeddingStats compute_stats(std::span<const float> raw, int vocab_size, int dim) {
  require(vocab_size >= 2 && dim >= 1, "embedding matrix too small");
  const size_t begin = static_cast<size_t>(dim);  // skip pad row
  const size_t n = raw.size() - begin;
  double sum = 0.0;
  for (size_t i = begin; i < raw.size(); ++i) sum += raw[i];
  const double mu = sum / static_cast<double>(n);
  double ss = 0.0;
  for (size_t i = begin; i < raw.size(); ++i) {
    double d = raw[i] - mu;
    ss += d * d;
  }
  EmbeddingStats stats;
  stats.mu = mu;
  stats.sigma = std::sqrt(ss / static_cast<double>(n));
  return stats;
}

EmbeddingTable normalize_shift(std::span<const float> raw, int vocab_size, int dim) {
  require(raw.size() == static_cast<size_t>(vocab_size) * dim,
          "raw embedding matrix has wrong size");
  EmbeddingStats stats = compute_stats(raw, vocab_size, dim);
  require(stats.sigma > 0.0, "embedding matrix is constant (sigma = 0)");

  const double lo = stats.mu - 3.0 * stats.sigma;
  const double hi = stats.mu + 3.0 * stats.sigma;
  const double inv = 1.0 / (6.0 * stats.sigma);

  EmbeddingTable table;
  table.dim = dim;
  table.vocab_size = vocab_size;
  table.stats = stats;
  table.data.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    double v = std::clamp(static_cast<double>(raw[i]), lo, hi);
    table.data[i] = static_cast<float>((v - stats.mu) * inv + 0.5);
  }
  for (int d = 0; d < dim; ++d) table.data[d] = 0.0f;  // pad row
  return table;
}

void clip01(EmbeddingTable& table) {
  for (float& v : table.data) v = std::clamp(v, 0.0f, 1.0f);
  for (int d = 0; d < table.dim; ++d) table.data[d] = 0.0f;
}

void embed_sequence(const EmbeddingTable& table, std::span<const int32_t> tokens,
                    std::vector<float>& out) {
  out.resize(tokens.size() * static_cast<size_t>(table.dim));
  for (size_t l = 0; l < tokens.size(); ++l) {
    auto src = table.row(tokens[l]);
    std::copy(src.begin(), src.end(), out.begin() + l * table.dim);
  }
}

}  // namespace spiketext
