// SPDX-License-Identifier: Apache-2.0
//
// prosodet CLI: the pipeline stages as subcommands.
//
//   make-toy-corpus   synthesize the two-class toy corpus
//   extract-labels    build per-utterance F0/V-UV label caches
//   train-stage1      prosody-only fine-tuning on real speech
//   train-stage2      joint spoof + prosody training
//   score             score utterances (unlabeled allowed)
//   evaluate          score a labeled manifest and report EER
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure,
// 1 anything else.
#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "prosodet/checkpoint.hpp"
#include "prosodet/errors.hpp"
#include "prosodet/eval.hpp"
#include "prosodet/log.hpp"
#include "prosodet/pitch.hpp"
#include "prosodet/toy.hpp"
#include "prosodet/trainer.hpp"

namespace fs = std::filesystem;
using namespace prosodet;

namespace {

fs::path default_cache_dir() {
  if (const char* env = std::getenv("PROSODET_CACHE_DIR")) return fs::path(env);
  return fs::path("label_cache");
}

void write_resolved_config(CLI::App* cmd, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "config_used.cfg", std::ios::trunc);
  out << cmd->config_to_str(true, false);
}

// --- shared option bundles -------------------------------------------------

struct ModelOptions {
  int n_layers = 4;
  int d_model = 64;
  int n_heads = 4;
  int proj_dim = 256;
  int recurrent_hidden = 256;
  double lambda_vuv = 0.3;
  double alpha = 0.4;
  double beta = 0.2;

  void attach(CLI::App* cmd) {
    cmd->add_option("--n-layers", n_layers, "Encoder transformer layers")->check(CLI::PositiveNumber);
    cmd->add_option("--d-model", d_model, "Encoder embedding dimension");
    cmd->add_option("--n-heads", n_heads, "Attention heads");
    cmd->add_option("--proj-dim", proj_dim, "Prosody head projection dim");
    cmd->add_option("--recurrent-hidden", recurrent_hidden, "Prosody head GRU hidden size");
    cmd->add_option("--lambda-vuv", lambda_vuv, "Stage-1 V/UV loss weight");
    cmd->add_option("--alpha", alpha, "Stage-2 auxiliary prosody weight");
    cmd->add_option("--beta", beta, "Stage-2 V/UV weight inside the auxiliary term");
  }

  ModelConfig to_config() const {
    ModelConfig cfg;
    cfg.encoder.n_layers = n_layers;
    cfg.encoder.d_model = d_model;
    cfg.encoder.n_heads = n_heads;
    cfg.promtl.in_dim = d_model;
    cfg.promtl.proj_dim = proj_dim;
    cfg.promtl.recurrent_hidden = recurrent_hidden;
    cfg.promtl.lambda_vuv = lambda_vuv;
    cfg.classifier.in_dim = d_model;
    cfg.classifier.alpha = alpha;
    cfg.classifier.beta = beta;
    return cfg;
  }
};

struct TrainOptions {
  std::string train_manifest;
  std::string dev_manifest;
  std::string cache_dir = default_cache_dir().string();
  std::string out_dir = "run";
  int epochs = -1;        // -1: stage default (or toy default under --toy)
  int batch_size = 5;
  double lr_backbone = -1.0;
  double lr_promtl = -1.0;
  double weight_decay = -1.0;
  uint64_t seed = 1;
  std::string backend = "acf";
  bool mask_unvoiced_mse = false;
  std::string stats_scope = "all";
  bool toy = false;
  std::string toy_dir;

  void attach(CLI::App* cmd) {
    cmd->add_option("--train-manifest", train_manifest, "Training manifest (TSV)");
    cmd->add_option("--dev-manifest", dev_manifest, "Dev manifest (TSV)");
    cmd->add_option("--cache-dir", cache_dir,
                    "Label cache directory (env PROSODET_CACHE_DIR overrides the default)");
    cmd->add_option("--out-dir", out_dir, "Output directory for checkpoints and logs");
    cmd->add_option("--epochs", epochs, "Training epochs");
    cmd->add_option("--batch-size", batch_size, "Batch size");
    cmd->add_option("--lr-backbone", lr_backbone, "Backbone learning rate");
    cmd->add_option("--lr-promtl", lr_promtl, "Prosody-head learning rate");
    cmd->add_option("--weight-decay", weight_decay, "Decoupled weight decay");
    cmd->add_option("--seed", seed, "Run seed (init, shuffling, augmentation)");
    cmd->add_option("--backend", backend, "Pitch backend: acf | external:<tag>:<dir>");
    cmd->add_flag("--mask-unvoiced-mse", mask_unvoiced_mse,
                  "Ablation: average the F0 MSE over voiced frames only");
    cmd->add_option("--stats-scope", stats_scope,
                    "Speaker stats pool: all | bonafide-only")
        ->check(CLI::IsMember({"all", "bonafide-only"}));
    cmd->add_flag("--toy", toy,
                  "Provision the built-in synthetic corpus (desk-scale profile)");
    cmd->add_option("--toy-dir", toy_dir, "Toy corpus location (default <out-dir>/toy)");
  }

  StatsScope scope() const {
    return stats_scope == "bonafide-only" ? StatsScope::BonafideOnly : StatsScope::All;
  }
};

// Desk-scale profile used by --toy: a from-scratch tiny backbone cannot move
// at pretrained-fine-tuning rates, so the toy profile raises them and
// shortens the schedule. Explicit flags always win.
struct ToyProfile {
  int epochs_stage1 = 8;
  int epochs_stage2 = 8;
  double lr_backbone = 3e-4;
  double lr_promtl = 1e-3;
  double lr_classifier = 1e-3;
};

ToyCorpusPaths ensure_toy_corpus(const TrainOptions& opts, uint64_t seed) {
  ToyCorpusConfig cfg;
  cfg.out_dir = opts.toy_dir.empty() ? fs::path(opts.out_dir) / "toy" : fs::path(opts.toy_dir);
  cfg.seed = seed;
  ToyCorpusPaths paths;
  paths.train_manifest = cfg.out_dir / "train.tsv";
  paths.dev_manifest = cfg.out_dir / "dev.tsv";
  paths.eval_manifest = cfg.out_dir / "eval.tsv";
  paths.stage1_train_manifest = cfg.out_dir / "stage1_train.tsv";
  paths.stage1_dev_manifest = cfg.out_dir / "stage1_dev.tsv";
  if (!fs::exists(paths.train_manifest)) {
    log_info("generating toy corpus under " + cfg.out_dir.string());
    return make_toy_corpus(cfg);
  }
  return paths;
}

int run_and_report(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prosody-aware anti-spoofing trainer and scorer"};
  app.require_subcommand(1);

  // --- make-toy-corpus ------------------------------------------------------
  auto* cmd_toy = app.add_subcommand("make-toy-corpus", "Synthesize the two-class toy corpus");
  cmd_toy->set_config("--config");
  struct {
    std::string out_dir = "toy_corpus";
    int n_train = 200, n_dev = 60, n_eval = 100, n_speakers = 20;
    uint64_t seed = 7;
    bool confusable = false;
  } toy_opts;
  cmd_toy->add_option("--out-dir", toy_opts.out_dir, "Corpus output directory");
  cmd_toy->add_option("--train", toy_opts.n_train, "Train utterances (split across classes)");
  cmd_toy->add_option("--dev", toy_opts.n_dev, "Dev utterances");
  cmd_toy->add_option("--eval", toy_opts.n_eval, "Eval utterances");
  cmd_toy->add_option("--speakers", toy_opts.n_speakers, "Speaker count");
  cmd_toy->add_option("--seed", toy_opts.seed, "Corpus seed");
  cmd_toy->add_flag("--confusable", toy_opts.confusable,
                    "Match mean pitch across classes (micro-dynamics only)");

  // --- extract-labels -------------------------------------------------------
  auto* cmd_extract = app.add_subcommand("extract-labels",
                                         "Extract F0/V-UV reference labels into a cache");
  cmd_extract->set_config("--config");
  struct {
    std::string manifest;
    std::string out_dir = default_cache_dir().string();
    std::string backend = "acf";
    int workers = 0;  // 0: hardware concurrency
  } ex_opts;
  cmd_extract->add_option("--manifest", ex_opts.manifest, "Input manifest")->required();
  cmd_extract->add_option("--out-dir", ex_opts.out_dir, "Cache directory");
  cmd_extract->add_option("--backend", ex_opts.backend, "Pitch backend id");
  cmd_extract->add_option("--workers", ex_opts.workers, "Worker threads (0 = all cores)");

  // --- train-stage1 ----------------------------------------------------------
  auto* cmd_s1 = app.add_subcommand("train-stage1",
                                    "Prosody multi-task fine-tuning on real speech");
  cmd_s1->set_config("--config");
  TrainOptions s1_opts;
  ModelOptions s1_model;
  s1_opts.attach(cmd_s1);
  s1_model.attach(cmd_s1);

  // --- train-stage2 ----------------------------------------------------------
  auto* cmd_s2 = app.add_subcommand("train-stage2",
                                    "Joint spoof detection + prosody training");
  cmd_s2->set_config("--config");
  TrainOptions s2_opts;
  ModelOptions s2_model;
  s2_opts.attach(cmd_s2);
  s2_model.attach(cmd_s2);
  struct {
    std::string stage1_checkpoint;
    bool no_pretrain = false;
    bool reset_promtl = false;
    double lr_classifier = -1.0;
    bool no_rawboost = false;
    double rawboost_snr_low = 10.0;
    double rawboost_snr_high = 40.0;
    int rawboost_bands = 5;
    std::vector<double> class_weights;
  } s2_extra;
  cmd_s2->add_option("--stage1-checkpoint", s2_extra.stage1_checkpoint,
                     "Stage-1 checkpoint to restore");
  cmd_s2->add_flag("--no-pretrain", s2_extra.no_pretrain,
                   "Train from a random backbone (one-stage ablation)");
  cmd_s2->add_flag("--reset-promtl", s2_extra.reset_promtl,
                   "Re-initialize the prosody head instead of continuing from stage 1");
  cmd_s2->add_option("--lr-classifier", s2_extra.lr_classifier, "Classifier learning rate");
  cmd_s2->add_flag("--no-rawboost", s2_extra.no_rawboost, "Disable waveform augmentation");
  cmd_s2->add_option("--rawboost-snr-low", s2_extra.rawboost_snr_low, "Augmentation SNR low (dB)");
  cmd_s2->add_option("--rawboost-snr-high", s2_extra.rawboost_snr_high,
                     "Augmentation SNR high (dB)");
  cmd_s2->add_option("--rawboost-bands", s2_extra.rawboost_bands, "Random filter bands");
  cmd_s2->add_option("--class-weights", s2_extra.class_weights,
                     "Override bonafide,spoof CE weights (default: inverse frequency)")
      ->expected(2);

  // --- score ------------------------------------------------------------------
  auto* cmd_score = app.add_subcommand("score", "Score utterances (labels not required)");
  cmd_score->set_config("--config");
  struct {
    std::string checkpoint;
    std::string manifest;
    std::string audio;
    std::string out = "scores.tsv";
    int workers = 0;
  } sc_opts;
  cmd_score->add_option("--checkpoint", sc_opts.checkpoint, "Model checkpoint")->required();
  cmd_score->add_option("--manifest", sc_opts.manifest, "Manifest to score");
  cmd_score->add_option("--audio", sc_opts.audio, "Single audio file to score");
  cmd_score->add_option("--out", sc_opts.out, "Score file path");
  cmd_score->add_option("--workers", sc_opts.workers, "Worker threads (0 = all cores)");

  // --- evaluate ---------------------------------------------------------------
  auto* cmd_eval = app.add_subcommand("evaluate", "Score a labeled manifest and compute EER");
  cmd_eval->set_config("--config");
  struct {
    std::string checkpoint;
    std::string manifest;
    std::string out_dir = "eval_out";
    int workers = 0;
  } ev_opts;
  cmd_eval->add_option("--checkpoint", ev_opts.checkpoint, "Model checkpoint")->required();
  cmd_eval->add_option("--manifest", ev_opts.manifest, "Labeled manifest")->required();
  cmd_eval->add_option("--out-dir", ev_opts.out_dir, "Output directory");
  cmd_eval->add_option("--workers", ev_opts.workers, "Worker threads (0 = all cores)");

  CLI11_PARSE(app, argc, argv);

  const auto resolve_workers = [](int w) {
    if (w > 0) return w;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
  };

  if (cmd_toy->parsed()) {
    return run_and_report([&] {
      ToyCorpusConfig cfg;
      cfg.out_dir = toy_opts.out_dir;
      cfg.n_train = toy_opts.n_train;
      cfg.n_dev = toy_opts.n_dev;
      cfg.n_eval = toy_opts.n_eval;
      cfg.n_speakers = toy_opts.n_speakers;
      cfg.seed = toy_opts.seed;
      cfg.confusable = toy_opts.confusable;
      const auto paths = make_toy_corpus(cfg);
      write_resolved_config(cmd_toy, cfg.out_dir);
      std::cout << "toy corpus ready:\n"
                << "  train:        " << paths.train_manifest.string() << "\n"
                << "  dev:          " << paths.dev_manifest.string() << "\n"
                << "  eval:         " << paths.eval_manifest.string() << "\n"
                << "  stage1 train: " << paths.stage1_train_manifest.string() << "\n"
                << "  stage1 dev:   " << paths.stage1_dev_manifest.string() << "\n";
    });
  }

  if (cmd_extract->parsed()) {
    return run_and_report([&] {
      const Manifest manifest = load_manifest(ex_opts.manifest);
      const auto backend = make_pitch_backend(ex_opts.backend);
      const fs::path cache_dir(ex_opts.out_dir);
      fs::create_directories(cache_dir);
      write_resolved_config(cmd_extract, cache_dir);

      const int workers = resolve_workers(ex_opts.workers);
      std::vector<int> status(manifest.size(), 0);  // 0 fresh, 1 cached, 2 failed
      std::vector<std::string> errors(manifest.size());
      std::vector<double> voiced_ratio(manifest.size(), 0.0);

      std::atomic<size_t> next{0};
      auto work = [&]() {
        while (true) {
          const size_t i = next.fetch_add(1);
          if (i >= manifest.size()) break;
          const auto& entry = manifest.entries[i];
          try {
            if (label_cache_exists(entry.utt_id, cache_dir)) {
              try {
                const LabelCache cached =
                    read_label_cache(entry.utt_id, cache_dir, backend->id());
                status[i] = 1;
                size_t voiced = 0;
                for (uint8_t v : cached.vuv) voiced += v;
                voiced_ratio[i] =
                    cached.vuv.empty() ? 0.0
                                       : static_cast<double>(voiced) / cached.vuv.size();
                continue;
              } catch (const DataError&) {
                // stale cache: re-extract below
              }
            }
            const Utterance utt = load_utterance(entry);
            const F0Reference ref = backend->extract(utt);
            write_label_cache(cache_from_reference(entry.utt_id, ref, backend->id()),
                              cache_dir);
            size_t voiced = 0;
            for (uint8_t v : ref.vuv) voiced += v;
            voiced_ratio[i] =
                ref.vuv.empty() ? 0.0 : static_cast<double>(voiced) / ref.vuv.size();
          } catch (const std::exception& e) {
            status[i] = 2;
            errors[i] = e.what();
          }
        }
      };
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();

      size_t fresh = 0, cached = 0, failed = 0;
      double ratio_sum = 0.0;
      for (size_t i = 0; i < manifest.size(); ++i) {
        if (status[i] == 0) ++fresh;
        if (status[i] == 1) ++cached;
        if (status[i] == 2) {
          ++failed;
          std::cerr << "  failed: " << manifest.entries[i].utt_id << ": " << errors[i] << "\n";
        }
        ratio_sum += voiced_ratio[i];
      }
      std::cout << "extracted: " << fresh << "\ncached: " << cached << "\nfailed: " << failed
                << "\nmean voiced ratio: "
                << (manifest.empty() ? 0.0 : ratio_sum / static_cast<double>(manifest.size()))
                << "\n";
      if (failed > 0) throw DataError(std::to_string(failed) + " utterance(s) failed");
    });
  }

  if (cmd_s1->parsed()) {
    return run_and_report([&] {
      const ToyProfile toy_profile;
      StagePlan plan = StagePlan::stage1_defaults();
      Manifest train, dev;
      if (s1_opts.toy) {
        const auto paths = ensure_toy_corpus(s1_opts, s1_opts.seed);
        train = load_manifest(paths.stage1_train_manifest);
        dev = load_manifest(paths.stage1_dev_manifest);
        plan.epochs = toy_profile.epochs_stage1;
        plan.lr_backbone = toy_profile.lr_backbone;
        plan.lr_promtl = toy_profile.lr_promtl;
      } else {
        if (s1_opts.train_manifest.empty()) {
          throw ConfigError("--train-manifest is required (or pass --toy)");
        }
        train = load_manifest(s1_opts.train_manifest);
        if (!s1_opts.dev_manifest.empty()) dev = load_manifest(s1_opts.dev_manifest);
      }
      if (s1_opts.epochs > 0) plan.epochs = s1_opts.epochs;
      if (s1_opts.lr_backbone > 0) plan.lr_backbone = s1_opts.lr_backbone;
      if (s1_opts.lr_promtl > 0) plan.lr_promtl = s1_opts.lr_promtl;
      if (s1_opts.weight_decay >= 0) plan.weight_decay = s1_opts.weight_decay;
      plan.batch_size = s1_opts.batch_size;
      plan.seed = s1_opts.seed;
      plan.pitch_backend = s1_opts.backend;
      plan.mask_unvoiced_mse = s1_opts.mask_unvoiced_mse;
      plan.stats_scope = s1_opts.scope();

      Model model(s1_model.to_config(), rng::derive(plan.seed, "model/init"));
      TrainData data{std::move(train), std::move(dev), fs::path(s1_opts.cache_dir),
                     fs::path(s1_opts.out_dir)};
      write_resolved_config(cmd_s1, data.out_dir);
      const TrainResult result = run_stage1(model, plan, data);
      std::cout << "stage 1 done: best epoch " << result.best_epoch << " (dev loss "
                << result.best_metric << ")\nbest checkpoint: "
                << result.best_checkpoint.string() << "\n";
    });
  }

  if (cmd_s2->parsed()) {
    return run_and_report([&] {
      const ToyProfile toy_profile;
      StagePlan plan = StagePlan::stage2_defaults();
      Manifest train, dev;
      if (s2_opts.toy) {
        const auto paths = ensure_toy_corpus(s2_opts, s2_opts.seed);
        train = load_manifest(paths.train_manifest);
        dev = load_manifest(paths.dev_manifest);
        plan.epochs = toy_profile.epochs_stage2;
        plan.lr_backbone = toy_profile.lr_backbone;
        plan.lr_promtl = toy_profile.lr_promtl;
        plan.lr_classifier = toy_profile.lr_classifier;
      } else {
        if (s2_opts.train_manifest.empty()) {
          throw ConfigError("--train-manifest is required (or pass --toy)");
        }
        train = load_manifest(s2_opts.train_manifest);
        if (!s2_opts.dev_manifest.empty()) dev = load_manifest(s2_opts.dev_manifest);
      }
      if (s2_opts.epochs > 0) plan.epochs = s2_opts.epochs;
      if (s2_opts.lr_backbone > 0) plan.lr_backbone = s2_opts.lr_backbone;
      if (s2_opts.lr_promtl > 0) plan.lr_promtl = s2_opts.lr_promtl;
      if (s2_extra.lr_classifier > 0) plan.lr_classifier = s2_extra.lr_classifier;
      if (s2_opts.weight_decay >= 0) plan.weight_decay = s2_opts.weight_decay;
      plan.batch_size = s2_opts.batch_size;
      plan.seed = s2_opts.seed;
      plan.pitch_backend = s2_opts.backend;
      plan.mask_unvoiced_mse = s2_opts.mask_unvoiced_mse;
      plan.stats_scope = s2_opts.scope();
      if (s2_extra.no_rawboost) {
        plan.rawboost = RawBoostConfig::disabled_sentinel();
      } else {
        plan.rawboost.snr_low_db = s2_extra.rawboost_snr_low;
        plan.rawboost.snr_high_db = s2_extra.rawboost_snr_high;
        plan.rawboost.noise_bands = s2_extra.rawboost_bands;
      }
      if (!s2_extra.class_weights.empty()) {
        plan.class_weights_override = {s2_extra.class_weights[0], s2_extra.class_weights[1]};
      }

      Model model;
      if (s2_extra.no_pretrain) {
        model.init(s2_model.to_config(), rng::derive(plan.seed, "model/init"));
      } else {
        if (s2_extra.stage1_checkpoint.empty()) {
          throw ConfigError(
              "--stage1-checkpoint is required unless --no-pretrain is given "
              "(stage 2 continues from stage 1 by default)");
        }
        const Checkpoint ckpt = Checkpoint::load(s2_extra.stage1_checkpoint);
        ModelConfig cfg = ckpt.config;
        // classification-loss weights come from flags, not the stage-1 file
        cfg.classifier.alpha = s2_model.alpha;
        cfg.classifier.beta = s2_model.beta;
        model.init(cfg, rng::derive(plan.seed, "model/init"));
        Checkpoint adjusted = ckpt;
        adjusted.config = cfg;
        adjusted.restore_into(model);
      }
      if (s2_extra.reset_promtl) {
        model.reinit_promtl(rng::derive(plan.seed, "model/reset_promtl"));
      }

      TrainData data{std::move(train), std::move(dev), fs::path(s2_opts.cache_dir),
                     fs::path(s2_opts.out_dir)};
      write_resolved_config(cmd_s2, data.out_dir);
      const TrainResult result = run_stage2(model, plan, data);
      std::cout << "stage 2 done: best epoch " << result.best_epoch << " (dev EER "
                << result.best_metric << "%)\nbest checkpoint: "
                << result.best_checkpoint.string() << "\n";
    });
  }

  if (cmd_score->parsed()) {
    return run_and_report([&] {
      if (sc_opts.manifest.empty() == sc_opts.audio.empty()) {
        throw ConfigError("pass exactly one of --manifest or --audio");
      }
      const Checkpoint ckpt = Checkpoint::load(sc_opts.checkpoint);
      Model model(ckpt.config, 0);
      ckpt.restore_into(model);

      Manifest manifest;
      if (!sc_opts.audio.empty()) {
        ManifestEntry entry;
        entry.utt_id = fs::path(sc_opts.audio).stem().string();
        entry.audio_path = sc_opts.audio;
        entry.label = Label::Unlabeled;
        entry.dataset_tag = "single";
        if (!fs::exists(entry.audio_path)) {
          throw DataError("missing audio file: " + entry.audio_path.string());
        }
        manifest.entries.push_back(std::move(entry));
      } else {
        manifest = load_manifest(sc_opts.manifest);
        if (manifest.empty()) throw DataError("manifest is empty: " + sc_opts.manifest);
      }

      ScoreOptions opts;
      opts.workers = resolve_workers(sc_opts.workers);
      const ScoreFile scores =
          score_manifest(model, manifest, fs::path(sc_opts.checkpoint).stem().string(), opts);
      write_score_file(scores, sc_opts.out);
      const fs::path out_parent = fs::path(sc_opts.out).has_parent_path()
                                      ? fs::path(sc_opts.out).parent_path()
                                      : fs::path(".");
      write_resolved_config(cmd_score, out_parent);
      std::cout << "wrote " << scores.records.size() << " score(s) to " << sc_opts.out << "\n";
    });
  }

  if (cmd_eval->parsed()) {
    return run_and_report([&] {
      const Checkpoint ckpt = Checkpoint::load(ev_opts.checkpoint);
      Model model(ckpt.config, 0);
      ckpt.restore_into(model);
      const Manifest manifest = load_manifest(ev_opts.manifest);
      if (manifest.empty()) throw DataError("manifest is empty: " + ev_opts.manifest);

      ScoreOptions opts;
      opts.workers = resolve_workers(ev_opts.workers);
      const auto [scores, report] =
          evaluate(model, manifest, fs::path(ev_opts.checkpoint).stem().string(), opts);
      const fs::path out_dir(ev_opts.out_dir);
      write_score_file(scores, out_dir / "scores.tsv");
      write_report_json(report, out_dir / "report.json");
      write_resolved_config(cmd_eval, out_dir);
      std::cout << format_report(report);
    });
  }

  return 0;
}
