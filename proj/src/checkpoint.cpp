#include "spiketext/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "spiketext/util.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace spiketext {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'K', 'T', 'X', 'T', '0', '1'};

void write_u32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::ifstream& in, const std::string& path) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  require(in.good(), "truncated checkpoint: " + path);
  return v;
}

}  // namespace

void Checkpoint::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : header) {
    if (k == key) {
      v = value;
      return;
    }
  }
  header.emplace_back(key, value);
}

const std::string& Checkpoint::get(const std::string& key) const {
  for (const auto& [k, v] : header) {
    if (k == key) return v;
  }
  throw std::runtime_error("checkpoint header missing key '" + key + "'");
}

std::string Checkpoint::get_or(const std::string& key,
                               const std::string& fallback) const {
  for (const auto& [k, v] : header) {
    if (k == key) return v;
  }
  return fallback;
}

bool Checkpoint::has(const std::string& key) const {
  for (const auto& [k, v] : header) {
    if (k == key) return true;
  }
  return false;
}

void Checkpoint::add_tensor(const std::string& name, std::vector<uint32_t> dims,
                            std::vector<float> data) {
  NamedTensor t;
  t.name = name;
  t.dims = std::move(dims);
  t.data = std::move(data);
  require(t.data.size() == t.element_count(),
          "tensor '" + name + "' data does not match its shape");
  tensors.push_back(std::move(t));
}

const NamedTensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw std::runtime_error("checkpoint missing tensor '" + name + "'");
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));

  std::string header;
  for (const auto& [k, v] : ckpt.header) {
    header += k;
    header += '=';
    header += v;
    header += '\n';
  }
  write_u32(out, static_cast<uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  write_u32(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    write_u32(out, static_cast<uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_u32(out, static_cast<uint32_t>(t.dims.size()));
    for (uint32_t d : t.dims) write_u32(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  require(out.good(), "failed writing checkpoint: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open checkpoint: " + path);

  char magic[8] = {};
  in.read(magic, sizeof(magic));
  require(in.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
          "not a spiketext checkpoint: " + path);

  Checkpoint ckpt;
  uint32_t header_len = read_u32(in, path);
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  require(in.good(), "truncated checkpoint header: " + path);

  size_t pos = 0;
  while (pos < header.size()) {
    size_t nl = header.find('\n', pos);
    if (nl == std::string::npos) nl = header.size();
    std::string line = header.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    size_t eq = line.find('=');
    require(eq != std::string::npos, "malformed checkpoint header line: " + line);
    ckpt.header.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }

  uint32_t n_tensors = read_u32(in, path);
  for (uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    uint32_t name_len = read_u32(in, path);
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    uint32_t ndims = read_u32(in, path);
    t.dims.resize(ndims);
    for (uint32_t d = 0; d < ndims; ++d) t.dims[d] = read_u32(in, path);
    t.data.resize(t.element_count());
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    require(in.good(), "truncated tensor '" + t.name + "' in " + path);
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_float(float v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

}  // namespace spiketext
