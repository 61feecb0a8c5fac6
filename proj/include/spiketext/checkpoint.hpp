#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace spiketext {

// Versioned tensor container: 8-byte magic, a key=value text header, then
// named blobs of little-endian float32, row-major, each prefixed by name and
// shape. Shared by ANN checkpoints, SNN checkpoints, and prepared embeddings.
struct NamedTensor {
  std::string name;
  std::vector<uint32_t> dims;
  std::vector<float> data;

  size_t element_count() const {
    size_t n = 1;
    for (uint32_t d : dims) n *= d;
    return n;
  }
};

struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<NamedTensor> tensors;

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  bool has(const std::string& key) const;

  void add_tensor(const std::string& name, std::vector<uint32_t> dims,
                  std::vector<float> data);
  const NamedTensor& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

// Deterministic numeric formatting for header values (round-trips exactly).
std::string format_double(double v);
std::string format_float(float v);

}  // namespace spiketext
