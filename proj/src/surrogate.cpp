#include "spiketext/surrogate.hpp"

namespace spiketext {

SurrogateCentering surrogate_centering_from_string(const std::string& s) {
  if (s == "threshold") return SurrogateCentering::threshold;
  if (s == "raw") return SurrogateCentering::raw;
  throw std::runtime_error("unknown surrogate centering '" + s +
                           "' (expected threshold or raw)");
}

std::string to_string(SurrogateCentering c) {
  return c == SurrogateCentering::threshold ? "threshold" : "raw";
}

}  // namespace spiketext
