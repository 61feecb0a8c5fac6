#include "spiketext/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spiketext/ann.hpp"
#include "spiketext/checkpoint.hpp"
#include "spiketext/corpus.hpp"
#include "spiketext/embedding.hpp"
#include "spiketext/energy.hpp"
#include "spiketext/model_io.hpp"
#include "spiketext/train.hpp"
#include "spiketext/util.hpp"

namespace fs = std::filesystem;

namespace spiketext {

Normalization normalization_from_string(const std::string& s) {
  if (s == "none") return Normalization::none;
  if (s == "model") return Normalization::model;
  if (s == "data") return Normalization::data;
  throw std::runtime_error("unknown normalization '" + s +
                           "' (expected none, model or data)");
}

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::none: return "none";
    case Normalization::model: return "model";
    default: return "data";
  }
}

CnnConfig PipelineConfig::arch() const {
  CnnConfig a;
  a.filter_widths = widths;
  a.feature_maps = feature_maps;
  a.neurons_per_class = neurons_per_class;
  a.pooling = pooling;
  a.activation = activation;
  a.use_bias = use_bias;
  a.dropout_rate = dropout;
  a.dim = dim;
  return a;
}

LifConfig PipelineConfig::lif() const {
  LifConfig l;
  l.beta = beta;
  l.u_thr = u_thr;
  l.T = T;
  l.k = k;
  return l;
}

SurrogateConfig PipelineConfig::surrogate() const {
  SurrogateConfig s;
  s.k = k;
  s.centering = centering;
  return s;
}

void PipelineConfig::validate() const {
  require(!data_path.empty(), "config: data path is required");
  require(!out_dir.empty(), "config: output directory is required");
  require(test_frac > 0.0 && test_frac < 1.0,
          "config: test-frac must be in (0,1)");
  require(min_freq >= 1, "config: min-freq must be >= 1");
  require(trials >= 1, "config: trials must be >= 1");
  require(ann_lr >= 0.0f && snn_lr >= 0.0f,
          "config: learning rates must be >= 0");
  require(ann_batch >= 1 && snn_batch >= 1, "config: batch sizes must be >= 1");
  require(ann_epochs >= 0 && snn_epochs >= 0, "config: epochs must be >= 0");
  CnnConfig a = arch();
  a.validate();
  lif().validate();
  surrogate().validate();
  if (max_len > 0) {
    require(max_len >= a.max_width(),
            "config: max-len must cover the largest filter width");
  }
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stoi(trim(item)));
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw std::runtime_error("config key '" + key + "': expected a boolean, got '" +
                           v + "'");
}

}  // namespace

void apply_config_file(PipelineConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "data") cfg.data_path = val;
      else if (key == "embedding") cfg.embedding_path = val;
      else if (key == "out") cfg.out_dir = val;
      else if (key == "lang") cfg.lang = val;
      else if (key == "test-frac") cfg.test_frac = std::stod(val);
      else if (key == "min-freq") cfg.min_freq = std::stoi(val);
      else if (key == "max-len") cfg.max_len = std::stoi(val);
      else if (key == "widths") cfg.widths = parse_int_list(val);
      else if (key == "feature-maps") cfg.feature_maps = std::stoi(val);
      else if (key == "neurons-per-class") cfg.neurons_per_class = std::stoi(val);
      else if (key == "pooling") cfg.pooling = pooling_from_string(val);
      else if (key == "activation") cfg.activation = activation_from_string(val);
      else if (key == "use-bias") cfg.use_bias = parse_bool(val, key);
      else if (key == "dropout") cfg.dropout = std::stof(val);
      else if (key == "dim") cfg.dim = std::stoi(val);
      else if (key == "beta") cfg.beta = std::stof(val);
      else if (key == "u-thr") cfg.u_thr = std::stof(val);
      else if (key == "T") cfg.T = std::stoi(val);
      else if (key == "k") cfg.k = std::stof(val);
      else if (key == "surrogate-centering") {
        cfg.centering = surrogate_centering_from_string(val);
      } else if (key == "ann-lr") cfg.ann_lr = std::stof(val);
      else if (key == "ann-batch") cfg.ann_batch = std::stoi(val);
      else if (key == "ann-epochs") cfg.ann_epochs = std::stoi(val);
      else if (key == "snn-lr") cfg.snn_lr = std::stof(val);
      else if (key == "snn-batch") cfg.snn_batch = std::stoi(val);
      else if (key == "snn-epochs") cfg.snn_epochs = std::stoi(val);
      else if (key == "normalize") cfg.normalize = normalization_from_string(val);
      else if (key == "trials") cfg.trials = std::stoi(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "skip-finetune") cfg.skip_finetune = parse_bool(val, key);
      else {
        throw std::runtime_error("unknown key '" + key + "'");
      }
    } catch (const std::runtime_error&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
}

namespace {

std::string pjoin(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_meta_value(const std::string& path, const std::string& key) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    const size_t eq = line.find('=');
    if (eq != std::string::npos && line.substr(0, eq) == key) {
      return line.substr(eq + 1);
    }
  }
  throw std::runtime_error(path + ": missing key " + key);
}

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error("stage " + name + " failed: " + e.what());
  }
}

std::string format_epoch_log(const std::vector<EpochStats>& epochs,
                             int best_epoch, double initial_val_acc) {
  std::string out = "initial_val_acc=" + format_double(initial_val_acc) + "\n";
  for (const EpochStats& e : epochs) {
    out += "epoch=" + std::to_string(e.epoch) +
           " loss=" + format_double(e.loss) +
           " train_acc=" + format_double(e.train_acc) +
           " val_acc=" + format_double(e.val_acc) + "\n";
  }
  out += "best_epoch=" + std::to_string(best_epoch) + "\n";
  return out;
}

CnnConfig sized_arch(const PipelineConfig& cfg, const PreparedData& prep) {
  CnnConfig arch = cfg.arch();
  arch.num_classes = prep.train.num_classes;
  return arch;
}

TrainConfig snn_train_config(const PipelineConfig& cfg, TrainMode mode) {
  TrainConfig tc;
  tc.lr = cfg.snn_lr;
  tc.batch_size = cfg.snn_batch;
  tc.epochs = cfg.snn_epochs;
  tc.seed = cfg.seed;
  tc.dropout_rate = cfg.dropout;
  tc.mode = mode;
  return tc;
}

void do_ann_train(const PipelineConfig& cfg) {
  const std::string ann_path = pjoin(cfg.out_dir, "ann.ckpt");
  const std::string emb_path = pjoin(cfg.out_dir, "embedding_trained.ckpt");
  if (fs::exists(ann_path) && fs::exists(emb_path)) return;
  PreparedData prep = load_prepared_dir(cfg.out_dir, cfg.lang);
  const CnnConfig arch = sized_arch(cfg, prep);
  EmbeddingTable table =
      load_embedding(pjoin(cfg.out_dir, "prepared/embedding.ckpt"));
  CnnParams init =
      init_cnn_params<float>(arch, RngStream::keyed(cfg.seed, RngUse::ann_init));
  TrainConfig tc;
  tc.lr = cfg.ann_lr;
  tc.batch_size = cfg.ann_batch;
  tc.epochs = cfg.ann_epochs;
  tc.seed = cfg.seed;
  tc.dropout_rate = cfg.dropout;
  AnnTrainResult trained = train_ann(arch, init, prep.train, table, tc);
  save_ann(arch, trained.params, ann_path);
  save_embedding(table, emb_path);
  std::string log;
  for (size_t e = 0; e < trained.epoch_loss.size(); ++e) {
    log += "epoch=" + std::to_string(e) +
           " loss=" + format_double(trained.epoch_loss[e]) + "\n";
  }
  write_text_file(pjoin(cfg.out_dir, "ann_train.log"), log);
}

void do_convert(const PipelineConfig& cfg) {
  const std::string snn_path = pjoin(cfg.out_dir, "snn.ckpt");
  if (fs::exists(snn_path)) return;
  CnnConfig arch;
  CnnParams params;
  load_ann(pjoin(cfg.out_dir, "ann.ckpt"), arch, params);
  SnnModel model = convert(arch, params, cfg.lif());
  std::string note = "normalize=" + to_string(cfg.normalize) + "\n";
  if (cfg.normalize == Normalization::model) {
    const std::vector<float> scales = normalize_model_based(model);
    note += "lambda_conv=" + format_float(scales[0]) + "\n";
    note += "lambda_fc=" + format_float(scales[1]) + "\n";
  } else if (cfg.normalize == Normalization::data) {
    PreparedData prep = load_prepared_dir(cfg.out_dir, cfg.lang);
    EmbeddingTable table =
        load_embedding(pjoin(cfg.out_dir, "embedding_trained.ckpt"));
    const std::vector<float> scales =
        normalize_data_based(model, params, prep.train, table);
    note += "lambda_conv=" + format_float(scales[0]) + "\n";
    note += "lambda_fc=" + format_float(scales[1]) + "\n";
  }
  save_snn(model, snn_path);
  write_text_file(pjoin(cfg.out_dir, "convert.log"), note);
}

void do_finetune(const PipelineConfig& cfg) {
  const std::string ft_path = pjoin(cfg.out_dir, "snn_ft.ckpt");
  if (fs::exists(ft_path)) return;
  PreparedData prep = load_prepared_dir(cfg.out_dir, cfg.lang);
  SnnModel model = load_snn(pjoin(cfg.out_dir, "snn.ckpt"));
  EmbeddingTable table =
      load_embedding(pjoin(cfg.out_dir, "embedding_trained.ckpt"));
  table.trainable = false;
  FinetuneResult ft =
      finetune(model, prep.train, prep.test, table, cfg.surrogate(),
               snn_train_config(cfg, TrainMode::finetune));
  save_snn(ft.model, ft_path);
  write_text_file(pjoin(cfg.out_dir, "finetune.log"),
                  format_epoch_log(ft.epochs, ft.best_epoch, ft.initial_val_acc));
}

}  // namespace

void pipeline_prepare(const PipelineConfig& cfg) {
  const std::string dir = pjoin(cfg.out_dir, "prepared");
  const std::string train_path = pjoin(dir, "train.tsv");
  const std::string test_path = pjoin(dir, "test.tsv");
  const std::string vocab_path = pjoin(dir, "vocab.tsv");
  const std::string emb_path = pjoin(dir, "embedding.ckpt");
  const std::string meta_path = pjoin(dir, "meta.txt");
  if (fs::exists(train_path) && fs::exists(test_path) &&
      fs::exists(vocab_path) && fs::exists(emb_path) && fs::exists(meta_path)) {
    return;
  }
  fs::create_directories(dir);

  const LangMode lang = lang_mode_from_string(cfg.lang);
  Dataset all = load_dataset(cfg.data_path, lang);
  auto [train, test] = split_dataset(all, cfg.test_frac, cfg.seed);
  Vocabulary vocab = build_vocab(train, cfg.min_freq);
  const CnnConfig arch = cfg.arch();
  int max_len = cfg.max_len > 0 ? cfg.max_len : default_max_len(train);
  max_len = std::max(max_len, arch.max_width());

  require(!cfg.embedding_path.empty(), "config: embedding path is required");
  std::vector<float> raw =
      load_embedding_file(cfg.embedding_path, vocab, cfg.dim, cfg.seed);
  EmbeddingTable table =
      normalize_shift(raw, static_cast<int>(vocab.size()), cfg.dim);

  save_dataset(train, train_path);
  save_dataset(test, test_path);
  save_vocab(vocab, vocab_path);
  save_embedding(table, emb_path);
  write_text_file(meta_path, "max_len=" + std::to_string(max_len) +
                                 "\nnum_classes=" +
                                 std::to_string(train.num_classes) +
                                 "\nlang=" + cfg.lang + "\n");
}

PreparedData load_prepared_dir(const std::string& out_dir,
                               const std::string& lang_name) {
  const std::string dir = pjoin(out_dir, "prepared");
  PreparedData prep;
  const LangMode lang = lang_mode_from_string(lang_name);
  prep.train = load_dataset(pjoin(dir, "train.tsv"), lang);
  prep.test = load_dataset(pjoin(dir, "test.tsv"), lang);
  prep.vocab = load_vocab(pjoin(dir, "vocab.tsv"));
  prep.max_len = std::stoi(read_meta_value(pjoin(dir, "meta.txt"), "max_len"));
  const int num_classes =
      std::stoi(read_meta_value(pjoin(dir, "meta.txt"), "num_classes"));
  prep.train.num_classes = std::max(prep.train.num_classes, num_classes);
  prep.test.num_classes = std::max(prep.test.num_classes, num_classes);
  encode_examples(prep.train, prep.vocab, prep.max_len);
  encode_examples(prep.test, prep.vocab, prep.max_len);
  return prep;
}

void pipeline_ann_train(const PipelineConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  stage("prepare", [&] { pipeline_prepare(cfg); });
  stage("ann-train", [&] { do_ann_train(cfg); });
}

void pipeline_convert(const PipelineConfig& cfg) {
  pipeline_ann_train(cfg);
  stage("convert", [&] { do_convert(cfg); });
}

void pipeline_finetune(const PipelineConfig& cfg) {
  pipeline_convert(cfg);
  stage("finetune", [&] { do_finetune(cfg); });
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);

  PreparedData prep = stage("prepare", [&] {
    pipeline_prepare(cfg);
    return load_prepared_dir(cfg.out_dir, cfg.lang);
  });
  stage("ann-train", [&] { do_ann_train(cfg); });
  stage("convert", [&] { do_convert(cfg); });
  if (!cfg.skip_finetune) {
    stage("finetune", [&] { do_finetune(cfg); });
  }

  const std::string ann_path = pjoin(cfg.out_dir, "ann.ckpt");
  const std::string emb_trained_path =
      pjoin(cfg.out_dir, "embedding_trained.ckpt");
  const std::string snn_path = pjoin(cfg.out_dir, "snn.ckpt");
  const std::string ft_path = pjoin(cfg.out_dir, "snn_ft.ckpt");

  PipelineResult result;
  stage("eval", [&] {
    EmbeddingTable table = load_embedding(emb_trained_path);
    CnnConfig arch;
    CnnParams params;
    load_ann(ann_path, arch, params);
    result.ann_acc = evaluate_ann(arch, params, prep.test, table);
    SnnModel conv_model = load_snn(snn_path);
    result.conv_acc = evaluate_snn(conv_model, prep.test, table, cfg.seed,
                                   cfg.trials, &result.conv_std);
    if (!cfg.skip_finetune) {
      SnnModel ft_model = load_snn(ft_path);
      result.ft_acc = evaluate_snn(ft_model, prep.test, table, cfg.seed,
                                   cfg.trials, &result.ft_std);
      result.ft_best_epoch = std::stoi(
          read_meta_value(pjoin(cfg.out_dir, "finetune.log"), "best_epoch"));
    }
  });

  stage("energy-report", [&] {
    EmbeddingTable table = load_embedding(emb_trained_path);
    SnnModel model = load_snn(cfg.skip_finetune ? snn_path : ft_path);
    const FlopsReport flops = count_flops(model.arch, prep.max_len);
    const FiringRates rates =
        measure_firing_rates(model, prep.test, table, cfg.seed);
    const EnergyReport report =
        build_energy_report(flops, rates, model.lif.T, EnergyModel{});
    result.energy_reduction = report.reduction;
    std::string text = format_energy_report(report);
    text += "active_conv_run=" + format_double(rates.active_conv_run) + "\n";
    text += "active_out_run=" + format_double(rates.active_out_run) + "\n";
    write_text_file(pjoin(cfg.out_dir, "energy.txt"), text);
  });

  stage("metrics", [&] {
    std::string m;
    m += "seed=" + std::to_string(cfg.seed) + "\n";
    m += "trials=" + std::to_string(cfg.trials) + "\n";
    m += "ann_test_acc=" + format_double(result.ann_acc) + "\n";
    m += "conv_test_acc_mean=" + format_double(result.conv_acc) + "\n";
    m += "conv_test_acc_std=" + format_double(result.conv_std) + "\n";
    if (!cfg.skip_finetune) {
      m += "ft_test_acc_mean=" + format_double(result.ft_acc) + "\n";
      m += "ft_test_acc_std=" + format_double(result.ft_std) + "\n";
      m += "ft_best_epoch=" + std::to_string(result.ft_best_epoch) + "\n";
    }
    m += "energy_reduction=" + format_double(result.energy_reduction) + "\n";
    m += "\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-16s %s\n", "model", "accuracy");
    m += buf;
    std::snprintf(buf, sizeof(buf), "%-16s %.4f\n", "ann", result.ann_acc);
    m += buf;
    std::snprintf(buf, sizeof(buf), "%-16s %.4f +/- %.4f\n", "snn_converted",
                  result.conv_acc, result.conv_std);
    m += buf;
    if (!cfg.skip_finetune) {
      std::snprintf(buf, sizeof(buf), "%-16s %.4f +/- %.4f\n", "snn_finetuned",
                    result.ft_acc, result.ft_std);
      m += buf;
    }
    result.metrics_text = m;
    write_text_file(pjoin(cfg.out_dir, "metrics.txt"), m);
  });

  return result;
}

double run_train_direct(const PipelineConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  stage("prepare", [&] { pipeline_prepare(cfg); });
  PreparedData prep =
      stage("prepare", [&] { return load_prepared_dir(cfg.out_dir, cfg.lang); });
  const CnnConfig arch = sized_arch(cfg, prep);

  const std::string direct_path = pjoin(cfg.out_dir, "snn_direct.ckpt");
  double acc = 0.0;
  stage("train-direct", [&] {
    EmbeddingTable table;
    const std::string emb_trained_path =
        pjoin(cfg.out_dir, "embedding_trained.ckpt");
    if (fs::exists(emb_trained_path)) {
      table = load_embedding(emb_trained_path);
    } else {
      table = load_embedding(pjoin(cfg.out_dir, "prepared/embedding.ckpt"));
    }
    table.trainable = false;
    FinetuneResult res =
        train_direct(arch, cfg.lif(), prep.train, prep.test, table,
                     cfg.surrogate(), snn_train_config(cfg, TrainMode::direct));
    save_snn(res.model, direct_path);
    write_text_file(pjoin(cfg.out_dir, "direct_train.log"),
                    format_epoch_log(res.epochs, res.best_epoch,
                                     res.initial_val_acc));
    double std_out = 0.0;
    acc = evaluate_snn(res.model, prep.test, table, cfg.seed, cfg.trials,
                       &std_out);
    write_text_file(pjoin(cfg.out_dir, "direct_metrics.txt"),
                    "direct_test_acc_mean=" + format_double(acc) +
                        "\ndirect_test_acc_std=" + format_double(std_out) +
                        "\n");
  });
  return acc;
}

std::vector<SweepRow> sweep(const PipelineConfig& cfg,
                            const std::string& parameter,
                            const std::vector<double>& values) {
  require(!values.empty(), "sweep: empty values list");
  require(parameter == "h" || parameter == "beta" || parameter == "u_thr" ||
              parameter == "T",
          "sweep: parameter must be one of h, beta, u_thr, T");
  std::vector<SweepRow> rows;

  if (parameter == "h") {
    for (double v : values) {
      PipelineConfig sub = cfg;
      sub.neurons_per_class = static_cast<int>(v);
      sub.out_dir =
          pjoin(cfg.out_dir, "sweep_h_" + std::to_string(sub.neurons_per_class));
      PipelineResult res = run_pipeline(sub);
      SweepRow row;
      row.value = v;
      row.accuracy = cfg.skip_finetune ? res.conv_acc : res.ft_acc;
      PreparedData prep = load_prepared_dir(sub.out_dir, sub.lang);
      EmbeddingTable table =
          load_embedding(pjoin(sub.out_dir, "embedding_trained.ckpt"));
      SnnModel model = load_snn(
          pjoin(sub.out_dir, cfg.skip_finetune ? "snn.ckpt" : "snn_ft.ckpt"));
      FiringRates rates = measure_firing_rates(model, prep.test, table, cfg.seed);
      row.active_run = rates.active_conv_run;
      row.active_step = rates.active_conv_step;
      rows.push_back(row);
    }
  } else {
    run_pipeline(cfg);
    PreparedData prep = load_prepared_dir(cfg.out_dir, cfg.lang);
    EmbeddingTable table =
        load_embedding(pjoin(cfg.out_dir, "embedding_trained.ckpt"));
    SnnModel model = load_snn(
        pjoin(cfg.out_dir, cfg.skip_finetune ? "snn.ckpt" : "snn_ft.ckpt"));
    for (double v : values) {
      SnnModel variant = model;
      if (parameter == "beta") variant.lif.beta = static_cast<float>(v);
      if (parameter == "u_thr") variant.lif.u_thr = static_cast<float>(v);
      if (parameter == "T") variant.lif.T = static_cast<int>(v);
      variant.lif.validate();
      SweepRow row;
      row.value = v;
      row.accuracy = evaluate_snn(variant, prep.test, table, cfg.seed, cfg.trials);
      FiringRates rates =
          measure_firing_rates(variant, prep.test, table, cfg.seed);
      row.active_run = rates.active_conv_run;
      row.active_step = rates.active_conv_step;
      rows.push_back(row);
    }
  }

  std::string text = "value\taccuracy\tactive_run\tactive_step\n";
  for (const SweepRow& row : rows) {
    text += format_double(row.value) + "\t" + format_double(row.accuracy) +
            "\t" + format_double(row.active_run) + "\t" +
            format_double(row.active_step) + "\n";
  }
  write_text_file(pjoin(cfg.out_dir, "sweep_" + parameter + ".txt"), text);
  return rows;
}

}  // namespace spiketext
