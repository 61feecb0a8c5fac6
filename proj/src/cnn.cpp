#include "spiketext/cnn.hpp"

namespace spiketext {

Pooling pooling_from_string(const std::string& s) {
  if (s == "avg") return Pooling::avg;
  if (s == "max") return Pooling::max;
  throw std::runtime_error("unknown pooling '" + s + "' (expected avg or max)");
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw std::runtime_error("unknown activation '" + s +
                           "' (expected relu or sigmoid)");
}

std::string to_string(Pooling p) { return p == Pooling::avg ? "avg" : "max"; }

std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "sigmoid";
}

void CnnConfig::validate() const {
  if (filter_widths.empty()) {
    throw std::runtime_error("filter widths must be non-empty");
  }
  for (int w : filter_widths) {
    if (w < 1) throw std::runtime_error("filter widths must be >= 1");
  }
  if (feature_maps < 1) throw std::runtime_error("feature_maps must be >= 1");
  if (num_classes < 1) throw std::runtime_error("num_classes must be >= 1");
  if (neurons_per_class < 1) {
    throw std::runtime_error("neurons_per_class must be >= 1");
  }
  if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f)) {
    throw std::runtime_error("dropout rate must be in [0,1)");
  }
  if (dim < 1) throw std::runtime_error("embedding dim must be >= 1");
}

}  // namespace spiketext
