#include "spiketext/model_io.hpp"

#include <cstdlib>
#include <sstream>

#include "spiketext/checkpoint.hpp"
#include "spiketext/util.hpp"

namespace spiketext {

namespace {

std::string join_widths(const std::vector<int>& widths) {
  std::string out;
  for (size_t i = 0; i < widths.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(widths[i]);
  }
  return out;
}

std::vector<int> parse_widths(const std::string& s) {
  std::vector<int> widths;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    widths.push_back(std::stoi(item));
  }
  return widths;
}

void put_arch(Checkpoint& ckpt, const CnnConfig& arch) {
  ckpt.set("widths", join_widths(arch.filter_widths));
  ckpt.set("feature_maps", std::to_string(arch.feature_maps));
  ckpt.set("num_classes", std::to_string(arch.num_classes));
  ckpt.set("neurons_per_class", std::to_string(arch.neurons_per_class));
  ckpt.set("pooling", to_string(arch.pooling));
  ckpt.set("activation", to_string(arch.activation));
  ckpt.set("use_bias", arch.use_bias ? "1" : "0");
  ckpt.set("dropout", format_float(arch.dropout_rate));
  ckpt.set("dim", std::to_string(arch.dim));
}

CnnConfig get_arch(const Checkpoint& ckpt) {
  CnnConfig arch;
  arch.filter_widths = parse_widths(ckpt.get("widths"));
  arch.feature_maps = std::stoi(ckpt.get("feature_maps"));
  arch.num_classes = std::stoi(ckpt.get("num_classes"));
  arch.neurons_per_class = std::stoi(ckpt.get("neurons_per_class"));
  arch.pooling = pooling_from_string(ckpt.get("pooling"));
  arch.activation = activation_from_string(ckpt.get("activation"));
  arch.use_bias = ckpt.get("use_bias") == "1";
  arch.dropout_rate = std::strtof(ckpt.get("dropout").c_str(), nullptr);
  arch.dim = std::stoi(ckpt.get("dim"));
  arch.validate();
  return arch;
}

void put_params(Checkpoint& ckpt, const CnnConfig& arch,
                const CnnParams& params) {
  for (int i = 0; i < arch.num_widths(); ++i) {
    ckpt.add_tensor("conv_w." + std::to_string(i),
                    {static_cast<uint32_t>(arch.feature_maps),
                     static_cast<uint32_t>(arch.filter_widths[i]),
                     static_cast<uint32_t>(arch.dim)},
                    params.conv_w[i]);
    if (arch.use_bias) {
      ckpt.add_tensor("conv_b." + std::to_string(i),
                      {static_cast<uint32_t>(arch.feature_maps)},
                      params.conv_b[i]);
    }
  }
  ckpt.add_tensor("fc_w",
                  {static_cast<uint32_t>(arch.fc_rows()),
                   static_cast<uint32_t>(arch.pooled_size())},
                  params.fc_w);
  if (arch.use_bias) {
    ckpt.add_tensor("fc_b", {static_cast<uint32_t>(arch.fc_rows())},
                    params.fc_b);
  }
}

CnnParams get_params(const Checkpoint& ckpt, const CnnConfig& arch) {
  CnnParams params = make_cnn_params<float>(arch);
  for (int i = 0; i < arch.num_widths(); ++i) {
    const NamedTensor& w = ckpt.tensor("conv_w." + std::to_string(i));
    require(w.data.size() == params.conv_w[i].size(),
            "checkpoint conv tensor size mismatch");
    params.conv_w[i] = w.data;
    if (arch.use_bias) {
      params.conv_b[i] = ckpt.tensor("conv_b." + std::to_string(i)).data;
    }
  }
  const NamedTensor& fw = ckpt.tensor("fc_w");
  require(fw.data.size() == params.fc_w.size(),
          "checkpoint fc tensor size mismatch");
  params.fc_w = fw.data;
  if (arch.use_bias) params.fc_b = ckpt.tensor("fc_b").data;
  return params;
}

}  // namespace

void save_ann(const CnnConfig& arch, const CnnParams& params,
              const std::string& path) {
  Checkpoint ckpt;
  ckpt.set("kind", "ann");
  put_arch(ckpt, arch);
  put_params(ckpt, arch, params);
  write_checkpoint(path, ckpt);
}

void load_ann(const std::string& path, CnnConfig& arch, CnnParams& params) {
  Checkpoint ckpt = read_checkpoint(path);
  require(ckpt.get("kind") == "ann", path + ": not an ann checkpoint");
  arch = get_arch(ckpt);
  params = get_params(ckpt, arch);
}

void save_snn(const SnnModel& model, const std::string& path) {
  Checkpoint ckpt;
  ckpt.set("kind", "snn");
  put_arch(ckpt, model.arch);
  ckpt.set("beta", format_float(model.lif.beta));
  ckpt.set("u_thr", format_float(model.lif.u_thr));
  ckpt.set("T", std::to_string(model.lif.T));
  ckpt.set("k", format_float(model.lif.k));
  put_params(ckpt, model.arch, model.params);
  write_checkpoint(path, ckpt);
}

SnnModel load_snn(const std::string& path) {
  Checkpoint ckpt = read_checkpoint(path);
  require(ckpt.get("kind") == "snn", path + ": not an snn checkpoint");
  SnnModel model;
  model.arch = get_arch(ckpt);
  model.lif.beta = std::strtof(ckpt.get("beta").c_str(), nullptr);
  model.lif.u_thr = std::strtof(ckpt.get("u_thr").c_str(), nullptr);
  model.lif.T = std::stoi(ckpt.get("T"));
  model.lif.k = std::strtof(ckpt.get("k").c_str(), nullptr);
  model.lif.validate();
  model.params = get_params(ckpt, model.arch);
  return model;
}

void save_embedding(const EmbeddingTable& table, const std::string& path) {
  Checkpoint ckpt;
  ckpt.set("kind", "embedding");
  ckpt.set("mu", format_double(table.stats.mu));
  ckpt.set("sigma", format_double(table.stats.sigma));
  ckpt.add_tensor("table",
                  {static_cast<uint32_t>(table.vocab_size),
                   static_cast<uint32_t>(table.dim)},
                  table.data);
  write_checkpoint(path, ckpt);
}

EmbeddingTable load_embedding(const std::string& path) {
  Checkpoint ckpt = read_checkpoint(path);
  require(ckpt.get("kind") == "embedding", path + ": not an embedding checkpoint");
  const NamedTensor& t = ckpt.tensor("table");
  require(t.dims.size() == 2, path + ": embedding tensor must be 2-D");
  EmbeddingTable table;
  table.vocab_size = static_cast<int>(t.dims[0]);
  table.dim = static_cast<int>(t.dims[1]);
  table.data = t.data;
  table.stats.mu = std::strtod(ckpt.get("mu").c_str(), nullptr);
  table.stats.sigma = std::strtod(ckpt.get("sigma").c_str(), nullptr);
  return table;
}

}  // namespace spiketext
