#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spiketext/corpus.hpp"
#include "spiketext/embedding.hpp"
#include "spiketext/snn.hpp"

namespace spiketext {

struct EnergyModel {
  double e_sop = 77e-15;    // J per synaptic operation
  double e_flop = 12.5e-12; // J per floating-point operation
};

// Per-example FLOPs of the network, one MAC counted as 2 FLOPs.
struct FlopsReport {
  std::vector<int64_t> conv_per_width;  // (L-w+1) * F * 2wD
  std::vector<int64_t> pool_per_width;  // (L-w+1) * F
  int64_t fc = 0;                       // 2 * (F*|widths|) * (h*K)

  int64_t conv_total() const {
    int64_t s = 0;
    for (int64_t v : conv_per_width) s += v;
    return s;
  }
  int64_t pool_total() const {
    int64_t s = 0;
    for (int64_t v : pool_per_width) s += v;
    return s;
  }
  int64_t total() const { return conv_total() + pool_total() + fc; }
};

FlopsReport count_flops(const CnnConfig& config, int L);

// Mean binary activity of the spikes entering each layer, plus the
// active-neuron proportions behind the threshold sweeps. An active neuron
// emits at least one spike during the full T-step run; the per-step variant
// is the mean per-step spike probability of the layer's own neurons.
struct FiringRates {
  double gamma_input = 0.0;   // encoded train entering the conv banks
  double gamma_hidden = 0.0;  // conv spikes entering pooling / FC
  double gamma_output = 0.0;  // output-layer spike activity
  double active_conv_run = 0.0;
  double active_out_run = 0.0;
  double active_conv_step = 0.0;
  double active_out_step = 0.0;
};

FiringRates measure_firing_rates(const SnnModel& model, const Dataset& data,
                                 const EmbeddingTable& table, uint64_t seed,
                                 int trials = 1);

struct EnergyReport {
  struct Row {
    std::string layer;
    double flops = 0.0;
    double gamma = 0.0;
    double sops = 0.0;
  };
  std::vector<Row> rows;
  double total_flops = 0.0;
  double total_sops = 0.0;
  double ann_mj = 0.0;
  double snn_mj = 0.0;
  double reduction = 0.0;  // ann_mj / snn_mj
};

// The FLOPs -> mJ and SOPs -> mJ mappings.
double ann_energy_mj(double flops, const EnergyModel& model);
double snn_energy_mj(double sops, const EnergyModel& model);

// Totals-only report: SNN power = e_sop * SOPs, ANN power = e_flop * FLOPs.
EnergyReport estimate_energy(double total_flops, double total_sops,
                             const EnergyModel& model);

// Per-layer report with SOPs(layer) = T * gamma(layer) * FLOPs(layer).
EnergyReport build_energy_report(const FlopsReport& flops,
                                 const FiringRates& rates, int T,
                                 const EnergyModel& model);

std::string format_energy_report(const EnergyReport& report);

}  // namespace spiketext
