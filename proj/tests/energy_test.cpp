#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "spiketext/cnn.hpp"
#include "spiketext/corpus.hpp"
#include "spiketext/embedding.hpp"
#include "spiketext/energy.hpp"
#include "spiketext/rng.hpp"
#include "spiketext/snn.hpp"

using namespace spiketext;

namespace {

CnnConfig arch_of(std::vector<int> widths, int F, int K, int h, int D) {
  CnnConfig arch;
  arch.filter_widths = std::move(widths);
  arch.feature_maps = F;
  arch.num_classes = K;
  arch.neurons_per_class = h;
  arch.pooling = Pooling::avg;
  arch.activation = Activation::relu;
  arch.use_bias = false;
  arch.dropout_rate = 0.0f;
  arch.dim = D;
  return arch;
}

struct EnergyTableRow {
  double flops_g;
  double ann_mj;
  double sops_g;
  double snn_mj;
  double reduction;
};

// The six benchmark rows: printed gigaops and the power/reduction columns.
const std::vector<EnergyTableRow> kBenchmarkRows = {
    {0.36, 4.498, 5.49, 0.422, 10.66},
    {0.25, 3.140, 4.51, 0.347, 9.05},
    {0.36, 4.478, 6.06, 0.467, 9.59},
    {0.25, 3.108, 4.41, 0.340, 9.14},
    {0.33, 4.144, 7.37, 0.567, 7.31},
    {0.33, 4.132, 3.72, 0.287, 14.40},
};

struct RatesData {
  SnnModel model;
  Dataset data;
  EmbeddingTable table;
};

RatesData toy_rates_model(float embedding_value, float weight_scale) {
  RatesData rd;
  CnnConfig arch = arch_of({2}, 2, 2, 1, 2);
  CnnParams params =
      init_cnn_params<float>(arch, RngStream::keyed(90, RngUse::ann_init));
  for (auto& bank : params.conv_w)
    for (auto& w : bank) w = std::fabs(w) * weight_scale;
  for (auto& w : params.fc_w) w = std::fabs(w) * weight_scale;
  LifConfig lif;
  lif.T = 20;
  rd.model = convert(arch, params, lif);

  rd.data.num_classes = 2;
  Example ex;
  ex.label = 0;
  ex.text = "a a a a";
  ex.tokens = {2, 2, 2, 2};
  rd.data.examples.push_back(ex);
  ex.label = 1;
  rd.data.examples.push_back(ex);

  rd.table.dim = 2;
  rd.table.vocab_size = 3;
  rd.table.data = {0, 0, 0, 0, embedding_value, embedding_value};
  return rd;
}

}  // namespace

TEST_CASE("hand-counted convolution flops") {
  CnnConfig arch = arch_of({2}, 1, 1, 1, 3);
  FlopsReport report = count_flops(arch, 4);
  REQUIRE(report.conv_per_width.size() == 1);
  CHECK(report.conv_per_width[0] == 36);
  CHECK(report.pool_per_width[0] == 3);
  CHECK(report.fc == 2 * 1 * 1);
}

TEST_CASE("flops counting rejects too-short sequences") {
  CnnConfig arch = arch_of({3, 5}, 2, 2, 1, 3);
  CHECK_THROWS(count_flops(arch, 4));
  CHECK_NOTHROW(count_flops(arch, 5));
}

TEST_CASE("conv flops are linear in the feature map count") {
  CnnConfig small = arch_of({3, 4}, 5, 2, 2, 6);
  CnnConfig big = small;
  big.feature_maps = 10;
  FlopsReport a = count_flops(small, 12);
  FlopsReport b = count_flops(big, 12);
  CHECK(b.conv_total() == 2 * a.conv_total());
  CHECK(b.pool_total() == 2 * a.pool_total());
  CHECK(b.fc == 2 * a.fc);
}

TEST_CASE("default architecture flops match the closed form") {
  CnnConfig arch;
  arch.dim = 300;
  const int L = 40;
  FlopsReport report = count_flops(arch, L);
  int64_t conv = 0, pool = 0;
  for (int w : {3, 4, 5}) {
    conv += static_cast<int64_t>(L - w + 1) * 100 * 2 * w * 300;
    pool += static_cast<int64_t>(L - w + 1) * 100;
  }
  CHECK(report.conv_total() == conv);
  CHECK(report.pool_total() == pool);
  CHECK(report.fc == 2LL * 300 * 20);
  CHECK(report.total() == conv + pool + 2LL * 300 * 20);
}

TEST_CASE("published energy table rows reproduce within one percent") {
  EnergyModel model;
  for (const auto& row : kBenchmarkRows) {
    const double ann = ann_energy_mj(row.flops_g * 1e9, model);
    const double snn = snn_energy_mj(row.sops_g * 1e9, model);
    CHECK(std::fabs(ann - row.ann_mj) / row.ann_mj < 0.01);
    CHECK(std::fabs(snn - row.snn_mj) / row.snn_mj < 0.01);
    EnergyReport report =
        estimate_energy(row.flops_g * 1e9, row.sops_g * 1e9, model);
    CHECK(report.ann_mj == ann);
    CHECK(report.snn_mj == snn);
    CHECK(std::fabs(report.reduction - row.reduction) / row.reduction < 0.01);
  }
}

TEST_CASE("spec spot values for the Waimai row") {
  EnergyModel model;
  CHECK(ann_energy_mj(0.33e9, model) == doctest::Approx(4.125));
  CHECK(snn_energy_mj(3.72e9, model) == doctest::Approx(0.28644));
  CHECK(snn_energy_mj(0.0, model) == 0.0);
}

TEST_CASE("sops scale linearly in T") {
  CnnConfig arch = arch_of({2, 3}, 3, 2, 2, 4);
  FlopsReport flops = count_flops(arch, 8);
  FiringRates rates;
  rates.gamma_input = 0.4;
  rates.gamma_hidden = 0.1;
  rates.gamma_output = 0.05;
  EnergyModel model;
  EnergyReport r1 = build_energy_report(flops, rates, 25, model);
  EnergyReport r2 = build_energy_report(flops, rates, 50, model);
  CHECK(r2.total_sops == doctest::Approx(2.0 * r1.total_sops));
  CHECK(r2.snn_mj == doctest::Approx(2.0 * r1.snn_mj));
  CHECK(r2.ann_mj == r1.ann_mj);
  for (size_t i = 0; i < r1.rows.size(); ++i) {
    CHECK(r2.rows[i].sops == doctest::Approx(2.0 * r1.rows[i].sops));
    CHECK(r2.rows[i].flops == r1.rows[i].flops);
  }
}

TEST_CASE("per-layer sops follow T times gamma times flops") {
  CnnConfig arch = arch_of({2}, 2, 2, 1, 3);
  FlopsReport flops = count_flops(arch, 5);
  FiringRates rates;
  rates.gamma_input = 0.5;
  rates.gamma_hidden = 0.25;
  EnergyModel model;
  const int T = 10;
  EnergyReport report = build_energy_report(flops, rates, T, model);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].sops ==
        doctest::Approx(T * 0.5 * static_cast<double>(flops.conv_per_width[0])));
  CHECK(report.rows[1].sops ==
        doctest::Approx(T * 0.25 * static_cast<double>(flops.pool_per_width[0])));
  CHECK(report.rows[2].sops ==
        doctest::Approx(T * 0.25 * static_cast<double>(flops.fc)));
  double total = 0.0;
  for (const auto& row : report.rows) total += row.sops;
  CHECK(report.total_sops == doctest::Approx(total));
}

TEST_CASE("zero inputs give zero firing everywhere") {
  RatesData rd = toy_rates_model(0.0f, 1.0f);
  FiringRates rates = measure_firing_rates(rd.model, rd.data, rd.table, 3);
  CHECK(rates.gamma_input == 0.0);
  CHECK(rates.gamma_hidden == 0.0);
  CHECK(rates.gamma_output == 0.0);
  CHECK(rates.active_conv_run == 0.0);
  CHECK(rates.active_out_run == 0.0);
}

TEST_CASE("saturated inputs give gamma one at the input layer") {
  RatesData rd = toy_rates_model(1.0f, 4.0f);
  FiringRates rates = measure_firing_rates(rd.model, rd.data, rd.table, 3);
  CHECK(rates.gamma_input == 1.0);
  CHECK(rates.gamma_hidden > 0.0);
  CHECK(rates.active_conv_run > 0.0);
}

TEST_CASE("raising the threshold does not raise active proportions") {
  RatesData rd = toy_rates_model(0.8f, 1.5f);
  double prev_conv = 1.1, prev_out = 1.1;
  for (float theta : {1.0f, 2.0f}) {
    rd.model.lif.u_thr = theta;
    FiringRates rates = measure_firing_rates(rd.model, rd.data, rd.table, 3);
    CHECK(rates.active_conv_run <= prev_conv);
    CHECK(rates.active_out_run <= prev_out);
    prev_conv = rates.active_conv_run;
    prev_out = rates.active_out_run;
  }
}

TEST_CASE("empty datasets are rejected") {
  RatesData rd = toy_rates_model(0.5f, 1.0f);
  Dataset empty;
  empty.num_classes = 2;
  CHECK_THROWS(measure_firing_rates(rd.model, empty, rd.table, 3));
}

TEST_CASE("firing rate measurements are seed-deterministic") {
  RatesData rd = toy_rates_model(0.6f, 2.0f);
  FiringRates a = measure_firing_rates(rd.model, rd.data, rd.table, 7);
  FiringRates b = measure_firing_rates(rd.model, rd.data, rd.table, 7);
  CHECK(a.gamma_input == b.gamma_input);
  CHECK(a.gamma_hidden == b.gamma_hidden);
  CHECK(a.gamma_output == b.gamma_output);
  CHECK(a.active_conv_run == b.active_conv_run);
}

TEST_CASE("gammas stay inside the unit interval") {
  RatesData rd = toy_rates_model(0.7f, 2.0f);
  FiringRates rates = measure_firing_rates(rd.model, rd.data, rd.table, 11);
  for (double g : {rates.gamma_input, rates.gamma_hidden, rates.gamma_output,
                   rates.active_conv_run, rates.active_out_run,
                   rates.active_conv_step, rates.active_out_step}) {
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
  }
}

TEST_CASE("the formatted report names every layer and the totals") {
  CnnConfig arch = arch_of({2, 3}, 2, 2, 1, 3);
  FlopsReport flops = count_flops(arch, 6);
  FiringRates rates;
  rates.gamma_input = 0.5;
  rates.gamma_hidden = 0.1;
  EnergyModel model;
  EnergyReport report = build_energy_report(flops, rates, 20, model);
  const std::string text = format_energy_report(report);
  CHECK(text.find("conv") != std::string::npos);
  CHECK(text.find("fc") != std::string::npos);
  CHECK(text.find("total_flops=") != std::string::npos);
  CHECK(text.find("total_sops=") != std::string::npos);
  CHECK(text.find("ann_mj=") != std::string::npos);
  CHECK(text.find("snn_mj=") != std::string::npos);
  CHECK(text.find("reduction=") != std::string::npos);
}
