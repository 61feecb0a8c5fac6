#include "spiketext/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "spiketext/rng.hpp"
#include "spiketext/util.hpp"

namespace spiketext {

LangMode lang_mode_from_string(const std::string& s) {
  if (s == "en" || s == "whitespace") return LangMode::whitespace;
  if (s == "zh" || s == "character") return LangMode::character;
  throw std::runtime_error("unknown language mode '" + s + "' (expected en|zh)");
}

std::string to_string(LangMode m) {
  return m == LangMode::whitespace ? "en" : "zh";
}

int32_t Vocabulary::lookup(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? unk_id : it->second;
}

namespace {

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Length in bytes of the UTF-8 sequence starting at `c`. Malformed lead bytes
// are treated as single-byte tokens rather than rejected.
size_t utf8_len(unsigned char c) {
  if ((c & 0x80) == 0x00) return 1;
  if ((c & 0xE0) == 0xC0) return 2;
  if ((c & 0xF0) == 0xE0) return 3;
  if ((c & 0xF8) == 0xF0) return 4;
  return 1;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text, LangMode mode) {
  std::vector<std::string> out;
  if (mode == LangMode::whitespace) {
    std::string cur;
    for (unsigned char c : text) {
      if (is_ascii_space(c)) {
        if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
      } else {
        cur.push_back(static_cast<char>(std::tolower(c)));
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
  } else {
    size_t i = 0;
    while (i < text.size()) {
      unsigned char c = text[i];
      if (is_ascii_space(c)) {
        ++i;
        continue;
      }
      size_t n = std::min(utf8_len(c), text.size() - i);
      out.push_back(text.substr(i, n));
      i += n;
    }
  }
  return out;
}

Dataset load_dataset(const std::string& path, LangMode lang) {
  std::ifstream in(path);
  require(in.good(), "cannot open dataset file: " + path);

  Dataset data;
  data.lang = lang;
  std::string line;
  size_t lineno = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    require(tab != std::string::npos,
            path + ":" + std::to_string(lineno) + ": missing tab separator");
    std::string label_str = line.substr(0, tab);
    size_t pos = 0;
    int label = 0;
    try {
      label = std::stoi(label_str, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    require(pos == label_str.size() && !label_str.empty(),
            path + ":" + std::to_string(lineno) + ": non-integer label '" +
                label_str + "'");
    require(label >= 0,
            path + ":" + std::to_string(lineno) + ": negative label");
    Example ex;
    ex.label = label;
    ex.text = line.substr(tab + 1);
    max_label = std::max(max_label, label);
    data.examples.push_back(std::move(ex));
  }
  require(!data.examples.empty(), "empty dataset: " + path);
  data.num_classes = max_label + 1;
  return data;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                          double test_fraction, uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0,
          "test fraction must be in (0, 1)");
  const size_t n = data.size();
  const size_t n_test = static_cast<size_t>(
      std::llround(test_fraction * static_cast<double>(n)));

  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  RngStream rng = RngStream::keyed(seed, RngUse::split);
  rng.shuffle(idx);

  std::vector<bool> in_test(n, false);
  for (size_t i = 0; i < n_test; ++i) in_test[idx[i]] = true;

  Dataset train, test;
  train.num_classes = test.num_classes = data.num_classes;
  train.lang = test.lang = data.lang;
  for (size_t i = 0; i < n; ++i) {
    (in_test[i] ? test : train).examples.push_back(data.examples[i]);
  }
  return {std::move(train), std::move(test)};
}

Vocabulary build_vocab(const Dataset& train, int min_freq) {
  require(!train.examples.empty(), "cannot build vocabulary from empty dataset");

  std::unordered_map<std::string, int64_t> freq;
  for (const auto& ex : train.examples) {
    for (auto& tok : tokenize(ex.text, train.lang)) ++freq[tok];
  }

  std::vector<std::pair<std::string, int64_t>> kept;
  kept.reserve(freq.size());
  for (auto& [tok, f] : freq) {
    if (f >= min_freq) kept.emplace_back(tok, f);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.min_freq = min_freq;
  vocab.id_to_token = {"<pad>", "<unk>"};
  vocab.id_to_token.reserve(kept.size() + 2);
  for (auto& [tok, f] : kept) {
    vocab.token_to_id.emplace(tok, static_cast<int32_t>(vocab.id_to_token.size()));
    vocab.id_to_token.push_back(tok);
  }
  return vocab;
}

void encode_examples(Dataset& data, const Vocabulary& vocab, int max_len) {
  require(max_len >= 1, "max_len must be positive");
  for (auto& ex : data.examples) {
    auto toks = tokenize(ex.text, data.lang);
    ex.tokens.assign(static_cast<size_t>(max_len), Vocabulary::pad_id);
    size_t n = std::min(toks.size(), static_cast<size_t>(max_len));
    for (size_t i = 0; i < n; ++i) ex.tokens[i] = vocab.lookup(toks[i]);
  }
}

int default_max_len(const Dataset& train, int cap) {
  std::vector<size_t> lens;
  lens.reserve(train.size());
  for (const auto& ex : train.examples) {
    lens.push_back(tokenize(ex.text, train.lang).size());
  }
  require(!lens.empty(), "cannot size max_len from empty dataset");
  std::sort(lens.begin(), lens.end());
  size_t rank = static_cast<size_t>(
      std::ceil(0.95 * static_cast<double>(lens.size())));
  rank = std::min(std::max<size_t>(rank, 1), lens.size());
  int len = static_cast<int>(lens[rank - 1]);
  return std::clamp(len, 1, cap);
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write vocabulary file: " + path);
  out << "min_freq\t" << vocab.min_freq << "\n";
  for (int32_t id = 2; id < vocab.size(); ++id) {
    out << id << "\t" << vocab.id_to_token[id] << "\n";
  }
  require(out.good(), "failed writing vocabulary file: " + path);
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open vocabulary file: " + path);
  Vocabulary vocab;
  vocab.id_to_token = {"<pad>", "<unk>"};
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    require(tab != std::string::npos,
            path + ":" + std::to_string(lineno) + ": malformed vocabulary line");
    std::string key = line.substr(0, tab);
    std::string val = line.substr(tab + 1);
    if (key == "min_freq") {
      vocab.min_freq = std::stoi(val);
      continue;
    }
    int32_t id = std::stoi(key);
    require(id == vocab.size(),
            path + ":" + std::to_string(lineno) + ": non-dense vocabulary id");
    vocab.token_to_id.emplace(val, id);
    vocab.id_to_token.push_back(val);
  }
  return vocab;
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write dataset file: " + path);
  for (const auto& ex : data.examples) {
    out << ex.label << "\t" << ex.text << "\n";
  }
  require(out.good(), "failed writing dataset file: " + path);
}

}  // namespace spiketext
