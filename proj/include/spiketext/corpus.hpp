#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace spiketext {

enum class LangMode { whitespace, character };

LangMode lang_mode_from_string(const std::string& s);
std::string to_string(LangMode m);

struct Example {
  int label = 0;
  std::string text;
  std::vector<int32_t> tokens;  // filled by encode_examples; length == max_len
};

struct Dataset {
  std::vector<Example> examples;
  int num_classes = 0;
  LangMode lang = LangMode::whitespace;

  size_t size() const { return examples.size(); }
};

struct Vocabulary {
  static constexpr int32_t pad_id = 0;
  static constexpr int32_t unk_id = 1;

  std::unordered_map<std::string, int32_t> token_to_id;
  std::vector<std::string> id_to_token;  // ids 0/1 hold "<pad>"/"<unk>"
  int min_freq = 1;

  int32_t size() const { return static_cast<int32_t>(id_to_token.size()); }
  int32_t lookup(const std::string& token) const;
  const std::string& decode(int32_t id) const { return id_to_token.at(id); }
};

// Each line of the file is "<integer label>\t<text>". K is max label + 1.
Dataset load_dataset(const std::string& path, LangMode lang);

// whitespace: split on whitespace runs, lowercased (ASCII).
// character: one token per non-whitespace UTF-8 code point.
std::vector<std::string> tokenize(const std::string& text, LangMode mode);

// Disjoint partition with |test| = round(test_fraction * N); both halves keep
// the original corpus order.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                          double test_fraction, uint64_t seed);

// Tokens with train-set frequency >= min_freq get ids >= 2, assigned in
// descending frequency then lexicographic order.
Vocabulary build_vocab(const Dataset& train, int min_freq);

// Fills Example::tokens: prefix-truncate or pad with pad_id to max_len.
void encode_examples(Dataset& data, const Vocabulary& vocab, int max_len);

// 95th percentile of train token counts, capped.
int default_max_len(const Dataset& train, int cap = 64);

void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

void save_dataset(const Dataset& data, const std::string& path);

}  // namespace spiketext
