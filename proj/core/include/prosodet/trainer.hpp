// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_TRAINER_HPP
#define PROSODET_TRAINER_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prosodet/checkpoint.hpp"
#include "prosodet/eval.hpp"
#include "prosodet/model.hpp"
#include "prosodet/rawboost.hpp"

namespace prosodet {

enum class Stage { Stage1, Stage2 };
enum class StatsScope { All, BonafideOnly };

std::string stage_name(Stage stage);

// One training stage: epoch budget, batch size, the per-group learning
// rates, weight decay and augmentation policy. Defaults carry the reference
// fine-tuning recipe; the toy profile overrides them (a from-scratch desk
// model needs larger steps than a pretrained backbone).
struct StagePlan {
  Stage stage = Stage::Stage1;
  int epochs = 50;
  int batch_size = 5;
  double lr_backbone = 1e-6;
  double lr_promtl = 1e-5;
  double lr_classifier = 1e-6;   // stage 2 only
  double weight_decay = 0.0;     // stage 1: none; stage 2: 1e-4
  RawBoostConfig rawboost = RawBoostConfig::disabled_sentinel();
  uint64_t seed = 1;
  // 0 derives the augmentation stream from `seed`; any other value gives the
  // train-path noise its own stream (dev/eval are augmentation-free either way)
  uint64_t augment_seed = 0;
  std::string pitch_backend = "acf";
  bool mask_unvoiced_mse = false;
  bool random_crop = false;
  StatsScope stats_scope = StatsScope::All;
  // inverse-class-frequency weights are computed from the stage-2 train
  // manifest unless an explicit override is given
  std::optional<std::pair<double, double>> class_weights_override;

  void validate() const;

  static StagePlan stage1_defaults();
  static StagePlan stage2_defaults();
};

struct EpochRecord {
  int epoch = 0;               // 1-based
  std::string stage;
  double train_total = 0.0;    // mean per-utterance L_total
  double train_mse = 0.0;
  double train_bce = 0.0;
  double train_cls = 0.0;      // 0 in stage 1
  double grad_norm = 0.0;      // mean over optimizer steps
  double wall_seconds = 0.0;
  double dev_total = 0.0;
  double dev_mse = 0.0;
  double dev_bce = 0.0;
  double dev_cls = 0.0;
  double dev_eer_percent = -1.0;  // stage 2 only
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  void append_jsonl(const EpochRecord& rec, const std::filesystem::path& path) const;
};

struct TrainResult {
  TrainLog log;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  int best_epoch = 0;
  double best_metric = 0.0;  // stage 1: dev loss; stage 2: dev EER %
};

struct TrainData {
  Manifest train;
  Manifest dev;
  std::filesystem::path cache_dir;  // label caches, extracted on demand
  std::filesystem::path out_dir;    // checkpoints + train log
};

// Stage 1: prosody-only fine-tuning on real speech over H1. Rejects
// manifests containing spoof labels. Two optimizer groups
// (backbone, pro-mtl), no weight decay, no augmentation.
TrainResult run_stage1(Model& model, const StagePlan& plan, const TrainData& data);

// Stage 2: joint spoof + prosody training over H2 with RawBoost on the
// train inputs only. Three optimizer groups (backbone, pro-mtl,
// classifier + layer weights). Dev selection by EER.
TrainResult run_stage2(Model& model, const StagePlan& plan, const TrainData& data);

// Inverse class frequency: w_c = N_total / (2 * N_c).
std::pair<double, double> inverse_frequency_weights(const Manifest& manifest);

// In-memory training example: fixed-length waveform plus prosody targets.
struct PreparedUtterance {
  std::string utt_id;
  Label label = Label::Unlabeled;
  std::vector<double> waveform;
  Mat f0_target;   // T_ref x 1 normalized contour
  Mat vuv_target;  // T_ref x 1 in {0,1}
};

struct PreparedCorpus {
  std::vector<PreparedUtterance> train;
  std::vector<PreparedUtterance> dev;
};

// Loads audio, resolves label caches (extracting on demand), builds the
// speaker-stats table from the train manifest per the scope policy and
// normalizes every target. Dev speakers reuse the train-side stats; unseen
// dev speakers fall back to stats pooled within the dev manifest.
PreparedCorpus prepare_corpus(const Manifest& train, const Manifest& dev,
                              const std::filesystem::path& cache_dir,
                              const std::string& pitch_backend, StatsScope scope);

struct LossSummary {
  double total = 0.0;
  double mse = 0.0;
  double bce = 0.0;
  double cls = 0.0;
};

// Mean per-utterance loss of the model as-is over a prepared set. This is
// the dev/eval forward path: it takes no RNG and applies no augmentation.
LossSummary evaluate_prosody_loss(Model& model, Stage stage,
                                  const std::vector<PreparedUtterance>& utterances,
                                  const ProsodyLossOptions& opts = {});

}  // namespace prosodet

#endif  // PROSODET_TRAINER_HPP
