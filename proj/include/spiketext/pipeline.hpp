#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spiketext/cnn.hpp"
#include "spiketext/snn.hpp"
#include "spiketext/surrogate.hpp"

namespace spiketext {

enum class Normalization { none, model, data };

Normalization normalization_from_string(const std::string& s);
std::string to_string(Normalization n);

// Every default equals the experiment constants the engine encodes: T=50,
// U_thr=1, beta=1, k=25, h=10, F=100, widths {3,4,5}, dropout 0.5, ANN lr
// 1e-4 / batch 32, SNN lr 5e-5 / batch 50, D=300, test fraction 0.1, 5
// inference trials.
struct PipelineConfig {
  std::string data_path;
  std::string embedding_path;
  std::string out_dir;
  std::string lang = "en";
  double test_frac = 0.1;
  int min_freq = 1;
  int max_len = 0;  // 0 = derive from the training set

  std::vector<int> widths{3, 4, 5};
  int feature_maps = 100;
  int neurons_per_class = 10;
  Pooling pooling = Pooling::avg;
  Activation activation = Activation::relu;
  bool use_bias = false;
  float dropout = 0.5f;
  int dim = 300;

  float beta = 1.0f;
  float u_thr = 1.0f;
  int T = 50;
  float k = 25.0f;
  SurrogateCentering centering = SurrogateCentering::threshold;

  float ann_lr = 1e-4f;
  int ann_batch = 32;
  int ann_epochs = 10;
  float snn_lr = 5e-5f;
  int snn_batch = 50;
  int snn_epochs = 5;

  Normalization normalize = Normalization::none;
  int trials = 5;
  uint64_t seed = 0;
  bool skip_finetune = false;

  CnnConfig arch() const;
  LifConfig lif() const;
  SurrogateConfig surrogate() const;
  void validate() const;
};

// Flat key=value text mirroring the CLI flag names one-to-one ('#' starts a
// comment). Values set here are later overridable by flags.
void apply_config_file(PipelineConfig& cfg, const std::string& path);

struct PipelineResult {
  double ann_acc = 0.0;
  double conv_acc = 0.0, conv_std = 0.0;
  double ft_acc = 0.0, ft_std = 0.0;
  int ft_best_epoch = -1;
  double energy_reduction = 0.0;
  std::string metrics_text;
};

struct PreparedData {
  Dataset train;
  Dataset test;
  Vocabulary vocab;
  int max_len = 0;
};

// The prepare stage alone: split, vocabulary, encoding, embedding
// normalization, all persisted under <out_dir>/prepared.
void pipeline_prepare(const PipelineConfig& cfg);

// Reloads and re-encodes the persisted prepare artifacts.
PreparedData load_prepared_dir(const std::string& out_dir,
                               const std::string& lang);

// Stage-level entry points; each ensures its predecessors ran and skips work
// whose artifacts already exist.
void pipeline_ann_train(const PipelineConfig& cfg);
void pipeline_convert(const PipelineConfig& cfg);
void pipeline_finetune(const PipelineConfig& cfg);

// prepare -> ann-train -> convert (+ optional normalization) -> finetune ->
// eval -> energy-report. Each stage persists its artifacts under out_dir and
// is skipped when they already exist, so deleting downstream artifacts and
// rerunning reproduces them. A stage failure halts with the stage name.
PipelineResult run_pipeline(const PipelineConfig& cfg);

// Directly-trained baseline over the same prepared artifacts; writes
// snn_direct.ckpt and direct_metrics.txt, returns the test accuracy.
double run_train_direct(const PipelineConfig& cfg);

struct SweepRow {
  double value = 0.0;
  double accuracy = 0.0;
  double active_run = 0.0;
  double active_step = 0.0;
};

// parameter in {h, beta, u_thr, T}. h retrains the full pipeline per value;
// the LIF parameters re-evaluate the fine-tuned model. Writes
// sweep_<parameter>.txt under out_dir.
std::vector<SweepRow> sweep(const PipelineConfig& cfg,
                            const std::string& parameter,
                            const std::vector<double>& values);

}  // namespace spiketext
