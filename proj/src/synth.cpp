#include "spiketext/synth.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "spiketext/rng.hpp"
#include "spiketext/util.hpp"

namespace spiketext {

void write_synth_corpus(const SynthConfig& cfg, const std::string& data_path,
                        const std::string& embedding_path) {
  require(cfg.num_examples >= 2, "synth: need at least 2 examples");
  require(cfg.dim >= 1, "synth: dim must be >= 1");
  require(cfg.min_len >= 1 && cfg.max_len >= cfg.min_len, "synth: bad lengths");
  require(cfg.p_correct >= 0.0 && cfg.p_opposite >= 0.0 &&
              cfg.p_correct + cfg.p_opposite <= 1.0,
          "synth: token probabilities must be a sub-distribution");

  std::vector<std::string> pos_tokens, neg_tokens, neutral_tokens;
  for (int i = 0; i < cfg.vocab_pos; ++i) {
    pos_tokens.push_back("pos" + std::to_string(i));
  }
  for (int i = 0; i < cfg.vocab_neg; ++i) {
    neg_tokens.push_back("neg" + std::to_string(i));
  }
  for (int i = 0; i < cfg.vocab_neutral; ++i) {
    neutral_tokens.push_back("fill" + std::to_string(i));
  }

  {
    RngStream rng = RngStream::keyed(cfg.seed, RngUse::synth, 1);
    FILE* f = std::fopen(data_path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + data_path + " for writing");
    for (int n = 0; n < cfg.num_examples; ++n) {
      const int label = rng.next_double() < 0.5 ? 0 : 1;
      const int len =
          cfg.min_len + static_cast<int>(rng.next_index(
                            static_cast<uint64_t>(cfg.max_len - cfg.min_len + 1)));
      std::string line = std::to_string(label) + "\t";
      for (int j = 0; j < len; ++j) {
        const double u = rng.next_double();
        const std::vector<std::string>* pool;
        if (u < cfg.p_correct) {
          pool = label == 1 ? &pos_tokens : &neg_tokens;
        } else if (u < cfg.p_correct + cfg.p_opposite) {
          pool = label == 1 ? &neg_tokens : &pos_tokens;
        } else {
          pool = &neutral_tokens;
        }
        if (j) line += " ";
        line += (*pool)[rng.next_index(pool->size())];
      }
      line += "\n";
      if (std::fwrite(line.data(), 1, line.size(), f) != line.size()) {
        std::fclose(f);
        throw std::runtime_error("write failed: " + data_path);
      }
    }
    std::fclose(f);
  }

  {
    RngStream rng = RngStream::keyed(cfg.seed, RngUse::synth, 2);
    std::vector<double> shift_dir(cfg.dim);
    double norm = 0.0;
    for (double& v : shift_dir) {
      v = rng.gaussian();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : shift_dir) v /= norm;

    FILE* f = std::fopen(embedding_path.c_str(), "wb");
    if (!f) {
      throw std::runtime_error("cannot open " + embedding_path + " for writing");
    }
    auto write_vectors = [&](const std::vector<std::string>& tokens,
                             double shift) {
      for (const std::string& tok : tokens) {
        std::string line = tok;
        char buf[32];
        for (int d = 0; d < cfg.dim; ++d) {
          const double v = 0.5 * rng.gaussian() + shift * shift_dir[d];
          std::snprintf(buf, sizeof(buf), " %.6f", v);
          line += buf;
        }
        line += "\n";
        if (std::fwrite(line.data(), 1, line.size(), f) != line.size()) {
          std::fclose(f);
          throw std::runtime_error("write failed: " + embedding_path);
        }
      }
    };
    write_vectors(pos_tokens, 1.0);
    write_vectors(neg_tokens, -1.0);
    write_vectors(neutral_tokens, 0.0);
    std::fclose(f);
  }
}

}  // namespace spiketext
