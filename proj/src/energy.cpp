#include "spiketext/energy.hpp"

#include <cmath>
#include <cstdio>

#include "spiketext/encoder.hpp"
#include "spiketext/rng.hpp"
#include "spiketext/util.hpp"

namespace spiketext {

FlopsReport count_flops(const CnnConfig& config, int L) {
  config.validate();
  if (L < config.max_width()) {
    throw std::runtime_error("count_flops: sequence length " +
                             std::to_string(L) + " below max filter width " +
                             std::to_string(config.max_width()));
  }
  FlopsReport report;
  const int64_t F = config.feature_maps;
  const int64_t D = config.dim;
  for (int w : config.filter_widths) {
    const int64_t P = L - w + 1;
    report.conv_per_width.push_back(P * F * 2 * w * D);
    report.pool_per_width.push_back(P * F);
  }
  report.fc = 2 * (F * config.num_widths()) *
              static_cast<int64_t>(config.fc_rows());
  return report;
}

FiringRates measure_firing_rates(const SnnModel& model, const Dataset& data,
                                 const EmbeddingTable& table, uint64_t seed,
                                 int trials) {
  require(!data.examples.empty(), "measure_firing_rates: empty dataset");
  require(trials >= 1, "measure_firing_rates: trials must be >= 1");
  SurrogateConfig sg;
  sg.k = model.lif.k;
  const int T = model.lif.T;
  const int R = model.arch.fc_rows();

  double input_sum = 0.0, input_n = 0.0;
  double hidden_sum = 0.0, hidden_n = 0.0;
  double out_sum = 0.0, out_n = 0.0;
  double active_conv = 0.0, active_out = 0.0, runs = 0.0;

  std::vector<float> x;
  SnnRun run;
  for (int trial = 0; trial < trials; ++trial) {
    for (size_t idx = 0; idx < data.examples.size(); ++idx) {
      const Example& ex = data.examples[idx];
      embed_sequence(table, ex.tokens, x);
      SpikeTrain spikes = encode_poisson(
          x, static_cast<int>(ex.tokens.size()), model.arch.dim, T,
          RngStream::keyed(seed, RngUse::eval_poisson, trial, idx));
      snn_forward<float>(model.arch, model.params, model.lif, sg, spikes,
                         false, true, nullptr, run);

      for (uint8_t b : spikes.data) input_sum += b;
      input_n += static_cast<double>(spikes.data.size());

      int conv_neurons = 0;
      int conv_active = 0;
      for (int i = 0; i < model.arch.num_widths(); ++i) {
        const int P = model.arch.conv_positions(i, run.L);
        const int n = model.arch.feature_maps * P;
        conv_neurons += n;
        for (float s : run.s_conv[i]) hidden_sum += s;
        hidden_n += static_cast<double>(run.s_conv[i].size());
        for (int j = 0; j < n; ++j) {
          for (int t = 0; t < T; ++t) {
            if (run.s_conv[i][static_cast<size_t>(t) * n + j] != 0.0f) {
              ++conv_active;
              break;
            }
          }
        }
      }
      active_conv += static_cast<double>(conv_active) / conv_neurons;

      int out_active = 0;
      for (int j = 0; j < R; ++j) {
        for (int t = 0; t < T; ++t) {
          if (run.s_out[static_cast<size_t>(t) * R + j] != 0.0f) {
            ++out_active;
            break;
          }
        }
      }
      for (float s : run.s_out) out_sum += s;
      out_n += static_cast<double>(run.s_out.size());
      active_out += static_cast<double>(out_active) / R;
      runs += 1.0;
    }
  }

  FiringRates rates;
  rates.gamma_input = input_sum / input_n;
  rates.gamma_hidden = hidden_sum / hidden_n;
  rates.gamma_output = out_sum / out_n;
  rates.active_conv_run = active_conv / runs;
  rates.active_out_run = active_out / runs;
  rates.active_conv_step = rates.gamma_hidden;
  rates.active_out_step = rates.gamma_output;
  return rates;
}

double ann_energy_mj(double flops, const EnergyModel& model) {
  return model.e_flop * flops * 1e3;
}

double snn_energy_mj(double sops, const EnergyModel& model) {
  return model.e_sop * sops * 1e3;
}

EnergyReport estimate_energy(double total_flops, double total_sops,
                             const EnergyModel& model) {
  require(total_flops >= 0.0 && total_sops >= 0.0,
          "estimate_energy: negative operation count");
  EnergyReport report;
  report.total_flops = total_flops;
  report.total_sops = total_sops;
  report.ann_mj = ann_energy_mj(total_flops, model);
  report.snn_mj = snn_energy_mj(total_sops, model);
  report.reduction = report.snn_mj > 0.0 ? report.ann_mj / report.snn_mj : 0.0;
  return report;
}

EnergyReport build_energy_report(const FlopsReport& flops,
                                 const FiringRates& rates, int T,
                                 const EnergyModel& model) {
  EnergyReport report;
  for (size_t i = 0; i < flops.conv_per_width.size(); ++i) {
    EnergyReport::Row row;
    row.layer = "conv." + std::to_string(i);
    row.flops = static_cast<double>(flops.conv_per_width[i]);
    row.gamma = rates.gamma_input;
    row.sops = T * row.gamma * row.flops;
    report.rows.push_back(row);
  }
  for (size_t i = 0; i < flops.pool_per_width.size(); ++i) {
    EnergyReport::Row row;
    row.layer = "pool." + std::to_string(i);
    row.flops = static_cast<double>(flops.pool_per_width[i]);
    row.gamma = rates.gamma_hidden;
    row.sops = T * row.gamma * row.flops;
    report.rows.push_back(row);
  }
  {
    EnergyReport::Row row;
    row.layer = "fc";
    row.flops = static_cast<double>(flops.fc);
    row.gamma = rates.gamma_hidden;
    row.sops = T * row.gamma * row.flops;
    report.rows.push_back(row);
  }
  for (const auto& row : report.rows) {
    report.total_flops += row.flops;
    report.total_sops += row.sops;
  }
  report.ann_mj = ann_energy_mj(report.total_flops, model);
  report.snn_mj = snn_energy_mj(report.total_sops, model);
  report.reduction = report.snn_mj > 0.0 ? report.ann_mj / report.snn_mj : 0.0;
  return report;
}

std::string format_energy_report(const EnergyReport& report) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-8s %14s %8s %14s\n", "layer", "flops",
                "gamma", "sops");
  out += buf;
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%-8s %14.0f %8.4f %14.1f\n",
                  row.layer.c_str(), row.flops, row.gamma, row.sops);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "total_flops=%.0f\n", report.total_flops);
  out += buf;
  std::snprintf(buf, sizeof(buf), "total_sops=%.1f\n", report.total_sops);
  out += buf;
  std::snprintf(buf, sizeof(buf), "ann_mj=%.6g\n", report.ann_mj);
  out += buf;
  std::snprintf(buf, sizeof(buf), "snn_mj=%.6g\n", report.snn_mj);
  out += buf;
  std::snprintf(buf, sizeof(buf), "reduction=%.4g\n", report.reduction);
  out += buf;
  return out;
}

}  // namespace spiketext
