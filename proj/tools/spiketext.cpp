#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spiketext/encoder.hpp"
#include "spiketext/energy.hpp"
#include "spiketext/model_io.hpp"
#include "spiketext/pipeline.hpp"
#include "spiketext/synth.hpp"
#include "spiketext/train.hpp"
#include "spiketext/util.hpp"

namespace fs = std::filesystem;
using namespace spiketext;

namespace {

struct EnumFlags {
  std::string pooling;
  std::string activation;
  std::string centering;
  std::string normalize;
};

// Pipeline knobs shared by the staged subcommands. Typed enum values are
// parsed after CLI11 fills the string holders, so a --config file value
// survives unless the flag is actually given.
void add_pipeline_flags(CLI::App* sub, PipelineConfig& cfg, EnumFlags& enums,
                        std::string& config_path) {
  sub->add_option("--config", config_path,
                  "key=value config file; flags override it");
  sub->add_option("--data", cfg.data_path, "labeled dataset (<label>\\t<text>)");
  sub->add_option("--embedding", cfg.embedding_path,
                  "word vector file (token v1 .. vD per line)");
  sub->add_option("--out", cfg.out_dir, "pipeline output directory");
  sub->add_option("--lang", cfg.lang, "tokenization mode: en or zh");
  sub->add_option("--test-frac", cfg.test_frac, "held-out test fraction");
  sub->add_option("--min-freq", cfg.min_freq, "vocabulary frequency cutoff");
  sub->add_option("--max-len", cfg.max_len, "sequence length (0 = derive)");
  sub->add_option("--widths", cfg.widths, "filter widths")->delimiter(',');
  sub->add_option("--feature-maps", cfg.feature_maps, "feature maps per width");
  sub->add_option("--neurons-per-class", cfg.neurons_per_class,
                  "output neurons per class");
  sub->add_option("--pooling", enums.pooling, "avg or max");
  sub->add_option("--activation", enums.activation, "relu or sigmoid");
  sub->add_flag("--use-bias", cfg.use_bias, "add bias terms");
  sub->add_option("--dropout", cfg.dropout, "dropout rate");
  sub->add_option("--dim", cfg.dim, "embedding dimension");
  sub->add_option("--beta", cfg.beta, "membrane decay rate");
  sub->add_option("--u-thr", cfg.u_thr, "membrane threshold");
  sub->add_option("--T", cfg.T, "simulation time steps");
  sub->add_option("--k", cfg.k, "surrogate slope");
  sub->add_option("--surrogate-centering", enums.centering,
                  "threshold or raw");
  sub->add_option("--ann-lr", cfg.ann_lr, "ANN learning rate");
  sub->add_option("--ann-batch", cfg.ann_batch, "ANN batch size");
  sub->add_option("--ann-epochs", cfg.ann_epochs, "ANN training epochs");
  sub->add_option("--snn-lr", cfg.snn_lr, "SNN learning rate");
  sub->add_option("--snn-batch", cfg.snn_batch, "SNN batch size");
  sub->add_option("--snn-epochs", cfg.snn_epochs, "SNN training epochs");
  sub->add_option("--normalize", enums.normalize,
                  "weight normalization: none, model or data");
  sub->add_option("--trials", cfg.trials, "inference repetitions");
  sub->add_option("--seed", cfg.seed, "global seed");
  sub->add_flag("--skip-finetune", cfg.skip_finetune,
                "stop after conversion (converted-SNN baseline)");
}

void finalize_config(CLI::App* sub, PipelineConfig& cfg, EnumFlags& enums) {
  if (sub->count("--pooling")) cfg.pooling = pooling_from_string(enums.pooling);
  if (sub->count("--activation")) {
    cfg.activation = activation_from_string(enums.activation);
  }
  if (sub->count("--surrogate-centering")) {
    cfg.centering = surrogate_centering_from_string(enums.centering);
  }
  if (sub->count("--normalize")) {
    cfg.normalize = normalization_from_string(enums.normalize);
  }
  if (!sub->count("--seed")) {
    if (const char* env = std::getenv("SPIKETEXT_SEED")) {
      cfg.seed = std::strtoull(env, nullptr, 10);
    }
  }
}

// The --config file must apply before flags so flags can override it; CLI11
// assigns bound variables only for flags actually present, so loading the
// file first gives exactly that layering.
void preload_config(int argc, char** argv, PipelineConfig& cfg) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      apply_config_file(cfg, argv[i + 1]);
      return;
    }
    if (arg.rfind("--config=", 0) == 0) {
      apply_config_file(cfg, arg.substr(9));
      return;
    }
  }
}

std::string default_snn_ckpt(const std::string& out_dir) {
  const std::string ft = (fs::path(out_dir) / "snn_ft.ckpt").string();
  if (fs::exists(ft)) return ft;
  return (fs::path(out_dir) / "snn.ckpt").string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiking text classification: tailored CNN training, SNN "
               "conversion, surrogate-gradient fine-tuning, energy accounting"};
  app.require_subcommand(1);

  PipelineConfig cfg;
  EnumFlags enums;
  std::string config_path;

  SynthConfig synth_cfg;
  std::string synth_data = "synth_data.tsv";
  std::string synth_emb = "synth_embedding.txt";

  std::string in_ckpt, ann_ckpt, snn_ckpt, report_path;
  std::string record_spikes_path;
  int eval_T = 0;
  std::string gradcheck_dims = "3,6,2,5";
  std::vector<int> gradcheck_widths{2, 3};
  int gradcheck_target = 0;
  std::string sweep_param;
  std::vector<double> sweep_values;

  CLI::App* c_synth = app.add_subcommand(
      "synth", "write the bundled synthetic corpus and embedding file");
  c_synth->add_option("--out-data", synth_data, "dataset output path");
  c_synth->add_option("--out-embedding", synth_emb, "embedding output path");
  c_synth->add_option("--examples", synth_cfg.num_examples, "corpus size");
  c_synth->add_option("--dim", synth_cfg.dim, "embedding dimension");
  c_synth->add_option("--min-len", synth_cfg.min_len, "shortest document");
  c_synth->add_option("--max-len", synth_cfg.max_len, "longest document");
  c_synth->add_option("--seed", synth_cfg.seed, "generator seed");

  CLI::App* c_prepare = app.add_subcommand(
      "prepare", "split, build vocabulary, normalize embeddings");
  CLI::App* c_ann = app.add_subcommand(
      "ann-train", "train the tailored CNN (runs prepare if needed)");
  CLI::App* c_convert = app.add_subcommand(
      "convert", "copy tailored CNN weights into a spiking model");
  CLI::App* c_finetune = app.add_subcommand(
      "finetune", "surrogate-gradient BPTT fine-tuning of the converted SNN");
  CLI::App* c_direct = app.add_subcommand(
      "train-direct", "train an SNN from scratch (no conversion)");
  CLI::App* c_eval = app.add_subcommand("eval", "evaluate a spiking checkpoint");
  CLI::App* c_energy = app.add_subcommand(
      "energy-report", "FLOPs/SOPs accounting and energy estimate");
  CLI::App* c_gradcheck = app.add_subcommand(
      "gradcheck", "BPTT vs central finite differences on a tiny relaxed net");
  CLI::App* c_sweep =
      app.add_subcommand("sweep", "evaluate across h, beta, u_thr or T values");
  CLI::App* c_run = app.add_subcommand("run", "full pipeline end to end");

  for (CLI::App* sub : {c_prepare, c_ann, c_convert, c_finetune, c_direct,
                        c_eval, c_energy, c_sweep, c_run}) {
    add_pipeline_flags(sub, cfg, enums, config_path);
  }
  c_convert->add_option("--in", in_ckpt,
                        "ANN checkpoint; with --in, --out names the SNN "
                        "checkpoint file instead of a directory");
  c_eval->add_option("--ckpt", snn_ckpt,
                     "spiking checkpoint (default: snn_ft.ckpt, else snn.ckpt)");
  c_eval->add_option("--eval-T", eval_T, "override simulation steps");
  c_eval->add_option("--record-spikes", record_spikes_path,
                     "dump the first test example's spike train here");
  c_energy->add_option("--ann", ann_ckpt, "ANN checkpoint to cross-check");
  c_energy->add_option("--snn", snn_ckpt, "spiking checkpoint to account");
  c_energy->add_option("--report", report_path, "report output path");
  c_gradcheck->add_option("--dims", gradcheck_dims,
                          "D,L,F,T of the random tiny net");
  c_gradcheck->add_option("--gc-widths", gradcheck_widths, "filter widths")
      ->delimiter(',');
  c_gradcheck->add_option("--target", gradcheck_target, "target class");
  c_gradcheck->add_option("--seed", cfg.seed, "seed");
  c_gradcheck->add_option("--beta", cfg.beta, "membrane decay rate");
  c_gradcheck->add_option("--u-thr", cfg.u_thr, "membrane threshold");
  c_gradcheck->add_option("--k", cfg.k, "surrogate slope");
  c_gradcheck->add_option("--surrogate-centering", enums.centering,
                          "threshold or raw");
  c_sweep->add_option("--param", sweep_param, "h, beta, u_thr or T")
      ->required();
  c_sweep->add_option("--values", sweep_values, "values to evaluate")
      ->delimiter(',')
      ->required();

  try {
    preload_config(argc, argv, cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  CLI11_PARSE(app, argc, argv);

  try {
    if (c_synth->parsed()) {
      write_synth_corpus(synth_cfg, synth_data, synth_emb);
      std::printf("wrote %s and %s\n", synth_data.c_str(), synth_emb.c_str());
      return 0;
    }

    CLI::App* active = app.get_subcommands().front();
    if (active != c_gradcheck) finalize_config(active, cfg, enums);

    if (c_prepare->parsed()) {
      cfg.validate();
      pipeline_prepare(cfg);
      std::printf("prepared artifacts in %s/prepared\n", cfg.out_dir.c_str());
    } else if (c_ann->parsed()) {
      pipeline_ann_train(cfg);
      std::printf("wrote %s/ann.ckpt\n", cfg.out_dir.c_str());
    } else if (c_convert->parsed()) {
      if (!in_ckpt.empty()) {
        require(!cfg.out_dir.empty(),
                "file mode needs --out for the SNN checkpoint path");
        require(cfg.normalize != Normalization::data,
                "data-based normalization needs the pipeline form "
                "(it propagates the training set)");
        CnnConfig arch;
        CnnParams params;
        load_ann(in_ckpt, arch, params);
        SnnModel model = convert(arch, params, cfg.lif());
        if (cfg.normalize == Normalization::model) {
          normalize_model_based(model);
        }
        save_snn(model, cfg.out_dir);
        std::printf("wrote %s\n", cfg.out_dir.c_str());
      } else {
        pipeline_convert(cfg);
        std::printf("wrote %s/snn.ckpt\n", cfg.out_dir.c_str());
      }
    } else if (c_finetune->parsed()) {
      pipeline_finetune(cfg);
      std::printf("wrote %s/snn_ft.ckpt\n", cfg.out_dir.c_str());
    } else if (c_direct->parsed()) {
      const double acc = run_train_direct(cfg);
      std::printf("direct_test_acc=%.4f\n", acc);
    } else if (c_eval->parsed()) {
      if (snn_ckpt.empty()) snn_ckpt = default_snn_ckpt(cfg.out_dir);
      SnnModel model = load_snn(snn_ckpt);
      if (eval_T > 0) model.lif.T = eval_T;
      PreparedData prep = load_prepared_dir(cfg.out_dir, cfg.lang);
      EmbeddingTable table = load_embedding(
          (fs::path(cfg.out_dir) / "embedding_trained.ckpt").string());
      if (!record_spikes_path.empty()) {
        require(!prep.test.examples.empty(), "empty test set");
        std::vector<float> x;
        embed_sequence(table, prep.test.examples[0].tokens, x);
        SpikeTrain train = encode_poisson(
            x, static_cast<int>(prep.test.examples[0].tokens.size()),
            model.arch.dim, model.lif.T,
            RngStream::keyed(cfg.seed, RngUse::eval_poisson, 0, 0));
        dump_spike_train(train, record_spikes_path);
      }
      double stddev = 0.0;
      const double acc =
          evaluate_snn(model, prep.test, table, cfg.seed, cfg.trials, &stddev);
      std::printf("accuracy_mean=%.6f\naccuracy_std=%.6f\n", acc, stddev);
    } else if (c_energy->parsed()) {
      if (snn_ckpt.empty()) snn_ckpt = default_snn_ckpt(cfg.out_dir);
      SnnModel model = load_snn(snn_ckpt);
      if (!ann_ckpt.empty()) {
        CnnConfig arch;
        CnnParams params;
        load_ann(ann_ckpt, arch, params);
        require(arch.filter_widths == model.arch.filter_widths &&
                    arch.feature_maps == model.arch.feature_maps &&
                    arch.dim == model.arch.dim,
                "ANN and SNN checkpoints describe different architectures");
      }
      PreparedData prep = load_prepared_dir(cfg.out_dir, cfg.lang);
      EmbeddingTable table = load_embedding(
          (fs::path(cfg.out_dir) / "embedding_trained.ckpt").string());
      const FlopsReport flops = count_flops(model.arch, prep.max_len);
      const FiringRates rates =
          measure_firing_rates(model, prep.test, table, cfg.seed);
      const EnergyReport report =
          build_energy_report(flops, rates, model.lif.T, EnergyModel{});
      const std::string text = format_energy_report(report);
      if (report_path.empty()) {
        report_path = (fs::path(cfg.out_dir) / "energy.txt").string();
      }
      std::ofstream out(report_path, std::ios::binary);
      out << text;
      std::printf("%s", text.c_str());
    } else if (c_gradcheck->parsed()) {
      if (!c_gradcheck->count("--seed")) {
        if (const char* env = std::getenv("SPIKETEXT_SEED")) {
          cfg.seed = std::strtoull(env, nullptr, 10);
        }
      }
      if (c_gradcheck->count("--surrogate-centering")) {
        cfg.centering = surrogate_centering_from_string(enums.centering);
      }
      std::vector<int> dims;
      {
        std::istringstream in(gradcheck_dims);
        std::string item;
        while (std::getline(in, item, ',')) dims.push_back(std::stoi(item));
      }
      require(dims.size() == 4, "--dims expects D,L,F,T");
      CnnConfig arch;
      arch.dim = dims[0];
      arch.filter_widths = gradcheck_widths;
      arch.feature_maps = dims[2];
      arch.num_classes = 2;
      arch.neurons_per_class = 2;
      arch.use_bias = false;
      arch.pooling = Pooling::avg;
      arch.dropout_rate = 0.0f;
      LifConfig lif = cfg.lif();
      lif.T = dims[3];
      SurrogateConfig sg = cfg.surrogate();
      const int L = dims[1];
      RngStream rng = RngStream::keyed(cfg.seed, RngUse::gradcheck, 999);
      SpikeTrain spikes;
      spikes.T = lif.T;
      spikes.L = L;
      spikes.D = arch.dim;
      spikes.data.resize(static_cast<size_t>(lif.T) * L * arch.dim);
      for (auto& b : spikes.data) b = rng.next_double() < 0.5 ? 1 : 0;
      const double err =
          grad_check_relaxed(arch, lif, sg, spikes, gradcheck_target, cfg.seed);
      std::printf("max_rel_err=%.6g\n", err);
    } else if (c_sweep->parsed()) {
      const std::vector<SweepRow> rows = sweep(cfg, sweep_param, sweep_values);
      std::printf("value\taccuracy\tactive_run\tactive_step\n");
      for (const SweepRow& row : rows) {
        std::printf("%g\t%.6f\t%.6f\t%.6f\n", row.value, row.accuracy,
                    row.active_run, row.active_step);
      }
    } else if (c_run->parsed()) {
      const PipelineResult res = run_pipeline(cfg);
      std::printf("%s", res.metrics_text.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
