// SPDX-License-Identifier: Apache-2.0
#include "prosodet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "prosodet/errors.hpp"
#include "prosodet/log.hpp"
#include "prosodet/optimizer.hpp"
#include "prosodet/pitch.hpp"

namespace prosodet {

std::string stage_name(Stage stage) { return stage == Stage::Stage1 ? "stage1" : "stage2"; }

void StagePlan::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr_backbone > 0.0) || !(lr_promtl > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (stage == Stage::Stage2 && !(lr_classifier > 0.0)) {
    throw ConfigError("stage 2 requires a positive classifier learning rate");
  }
  if (weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
  rawboost.validate();
  if (class_weights_override) {
    if (!(class_weights_override->first > 0.0) || !(class_weights_override->second > 0.0)) {
      throw ConfigError("class weights must be positive");
    }
  }
}

StagePlan StagePlan::stage1_defaults() {
  StagePlan plan;
  plan.stage = Stage::Stage1;
  plan.epochs = 50;
  plan.batch_size = 5;
  plan.lr_backbone = 1e-6;
  plan.lr_promtl = 1e-5;
  plan.weight_decay = 0.0;
  plan.rawboost = RawBoostConfig::disabled_sentinel();
  return plan;
}

StagePlan StagePlan::stage2_defaults() {
  StagePlan plan;
  plan.stage = Stage::Stage2;
  plan.epochs = 50;
  plan.batch_size = 5;
  plan.lr_backbone = 1e-6;
  plan.lr_promtl = 1e-5;
  plan.lr_classifier = 1e-6;
  plan.weight_decay = 1e-4;
  plan.rawboost = RawBoostConfig{};  // method-3 defaults, 10-40 dB
  return plan;
}

void TrainLog::append_jsonl(const EpochRecord& rec, const std::filesystem::path& path) const {
  nlohmann::json j{{"epoch", rec.epoch},
                   {"stage", rec.stage},
                   {"train_total", rec.train_total},
                   {"train_mse", rec.train_mse},
                   {"train_bce", rec.train_bce},
                   {"train_cls", rec.train_cls},
                   {"grad_norm", rec.grad_norm},
                   {"wall_seconds", rec.wall_seconds},
                   {"dev_total", rec.dev_total},
                   {"dev_mse", rec.dev_mse},
                   {"dev_bce", rec.dev_bce},
                   {"dev_cls", rec.dev_cls},
                   {"dev_eer_percent", rec.dev_eer_percent}};
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot append train log: " + path.string());
  out << j.dump() << "\n";
}

std::pair<double, double> inverse_frequency_weights(const Manifest& manifest) {
  const double n_bona = static_cast<double>(manifest.count(Label::Bonafide));
  const double n_spoof = static_cast<double>(manifest.count(Label::Spoof));
  if (n_bona == 0.0 || n_spoof == 0.0) {
    throw DataError("inverse_frequency_weights: both classes must be present");
  }
  const double total = n_bona + n_spoof;
  return {total / (2.0 * n_bona), total / (2.0 * n_spoof)};
}

namespace {

// Resolve (or extract and persist) the reference contour for one entry.
F0Reference resolve_reference(const ManifestEntry& entry, const Utterance& utt,
                              const std::filesystem::path& cache_dir,
                              const PitchBackend& backend) {
  if (label_cache_exists(entry.utt_id, cache_dir)) {
    try {
      return reference_from_cache(read_label_cache(entry.utt_id, cache_dir, backend.id()));
    } catch (const DataError&) {
      // stale or unreadable: fall through to re-extraction
    }
  }
  F0Reference ref = backend.extract(utt);
  write_label_cache(cache_from_reference(entry.utt_id, ref, backend.id()), cache_dir);
  return ref;
}

struct LoadedUtt {
  const ManifestEntry* entry = nullptr;
  Utterance utt;
  F0Reference ref;
};

bool has_voiced(const F0Reference& ref) {
  for (uint8_t v : ref.vuv)
    if (v) return true;
  return false;
}

Mat normalized_target(const F0Reference& ref, const SpeakerStats& stats) {
  return column_from(normalize_f0(ref, stats).values);
}

std::vector<PreparedUtterance> finalize(const std::vector<LoadedUtt>& loaded,
                                        const StatsTable& primary,
                                        const StatsTable* fallback) {
  std::vector<PreparedUtterance> out;
  out.reserve(loaded.size());
  for (const auto& lu : loaded) {
    PreparedUtterance pu;
    pu.utt_id = lu.entry->utt_id;
    pu.label = lu.entry->label;
    pu.waveform = lu.utt.waveform;
    pu.vuv_target = column_from(lu.ref.vuv);
    if (!has_voiced(lu.ref)) {
      // nothing to normalize; the contour is identically zero
      pu.f0_target = Mat::Zero(static_cast<Eigen::Index>(lu.ref.frames()), 1);
    } else {
      const std::string key = StatsTable::speaker_key_for(lu.entry->speaker_id, lu.entry->utt_id);
      if (primary.contains(key)) {
        pu.f0_target = normalized_target(lu.ref, primary.lookup(key));
      } else if (fallback != nullptr && fallback->contains(key)) {
        pu.f0_target = normalized_target(lu.ref, fallback->lookup(key));
      } else {
        // last resort: per-utterance stats
        pu.f0_target =
            normalized_target(lu.ref, compute_speaker_stats(key, {&lu.ref}));
      }
    }
    out.push_back(std::move(pu));
  }
  return out;
}

std::vector<LoadedUtt> load_all(const Manifest& manifest,
                                const std::filesystem::path& cache_dir,
                                const PitchBackend& backend) {
  std::vector<LoadedUtt> loaded;
  loaded.reserve(manifest.size());
  for (const auto& entry : manifest.entries) {
    LoadedUtt lu;
    lu.entry = &entry;
    lu.utt = load_utterance(entry);
    lu.ref = resolve_reference(entry, lu.utt, cache_dir, backend);
    loaded.push_back(std::move(lu));
  }
  return loaded;
}

StatsTable stats_from(const std::vector<LoadedUtt>& loaded, StatsScope scope) {
  std::vector<std::pair<std::string, const F0Reference*>> grouped;
  for (const auto& lu : loaded) {
    if (scope == StatsScope::BonafideOnly && lu.entry->label != Label::Bonafide) continue;
    if (!has_voiced(lu.ref)) continue;  // contributes nothing; avoids spurious errors
    grouped.emplace_back(StatsTable::speaker_key_for(lu.entry->speaker_id, lu.entry->utt_id),
                         &lu.ref);
  }
  return StatsTable::build(grouped);
}

}  // namespace

PreparedCorpus prepare_corpus(const Manifest& train, const Manifest& dev,
                              const std::filesystem::path& cache_dir,
                              const std::string& pitch_backend, StatsScope scope) {
  const auto backend = make_pitch_backend(pitch_backend);
  PreparedCorpus corpus;

  const auto train_loaded = load_all(train, cache_dir, *backend);
  const StatsTable train_stats = stats_from(train_loaded, scope);
  corpus.train = finalize(train_loaded, train_stats, nullptr);

  if (!dev.empty()) {
    const auto dev_loaded = load_all(dev, cache_dir, *backend);
    const StatsTable dev_stats = stats_from(dev_loaded, scope);
    corpus.dev = finalize(dev_loaded, train_stats, &dev_stats);
  }
  return corpus;
}

namespace {

using LossBreakdown = LossSummary;

// Builds the loss for one utterance on the tape. Stage 1 reads H1 (last
// layer); stage 2 reads H2 (weighted layer sum) for both heads and adds the
// classification term.
LossBreakdown utterance_loss(ad::Tape& tape, Model& model, Stage stage,
                             const PreparedUtterance& pu,
                             const std::vector<double>& waveform, double inv_batch,
                             const ProsodyLossOptions& loss_opts, ad::Var* scaled_out) {
  const auto layers = model.backbone().forward(tape, waveform);
  ad::Var features = stage == Stage::Stage1 ? layers.back()
                                            : model.backbone().aggregate(tape, layers);
  const ProMTL::Out pred = model.promtl().forward(tape, features);

  // Eq-style length adjustment: keep leading frames of both sequences
  const size_t t_pred = static_cast<size_t>(tape.value(pred.f0_hat).rows());
  const size_t t_ref = static_cast<size_t>(pu.f0_target.rows());
  const size_t t_adj = adjust_lengths(t_pred, t_ref);
  ad::Var f0_hat = t_adj == t_pred ? pred.f0_hat
                                   : tape.slice_rows(pred.f0_hat, 0, static_cast<int>(t_adj));
  ad::Var vuv_logits =
      t_adj == t_pred ? pred.vuv_logits
                      : tape.slice_rows(pred.vuv_logits, 0, static_cast<int>(t_adj));
  const Mat ref_f0 = pu.f0_target.topRows(static_cast<Eigen::Index>(t_adj));
  const Mat ref_vuv = pu.vuv_target.topRows(static_cast<Eigen::Index>(t_adj));

  ProsodyLossTerms terms =
      prosody_loss_terms(tape, f0_hat, vuv_logits, ref_f0, ref_vuv, loss_opts);

  LossBreakdown breakdown;
  ad::Var total;
  if (stage == Stage::Stage1) {
    const double lambda = model.promtl().config().lambda_vuv;
    total = tape.add(terms.mse, tape.affine(terms.bce, lambda, 0.0));
  } else {
    const auto& ccfg = model.classifier().config();
    ad::Var cls_logits = model.classifier().forward(tape, features);
    ad::Var cls = weighted_cross_entropy(tape, cls_logits, pu.label, ccfg.w_bonafide,
                                         ccfg.w_spoof);
    ad::Var aux = tape.add(terms.mse, tape.affine(terms.bce, ccfg.beta, 0.0));
    total = tape.add(cls, tape.affine(aux, ccfg.alpha, 0.0));
    breakdown.cls = tape.scalar(cls);
  }
  breakdown.total = tape.scalar(total);
  breakdown.mse = tape.scalar(terms.mse);
  breakdown.bce = tape.scalar(terms.bce);
  if (!std::isfinite(breakdown.total)) {
    throw NumericalError("training loss is non-finite for '" + pu.utt_id + "'");
  }
  if (scaled_out != nullptr) {
    *scaled_out = tape.affine(total, inv_batch, 0.0);
  }
  return breakdown;
}

double dev_eer(Model& model, const std::vector<PreparedUtterance>& dev) {
  std::vector<ScoreRecord> records;
  records.reserve(dev.size());
  for (const auto& pu : dev) {
    Utterance utt;
    utt.utt_id = pu.utt_id;
    utt.waveform = pu.waveform;
    ScoreRecord rec;
    rec.utt_id = pu.utt_id;
    rec.label = pu.label;
    rec.score = model.score_utterance(utt);
    records.push_back(std::move(rec));
  }
  return compute_eer(records).eer_percent;
}

std::vector<nn::Parameter*> collect_encoder(Model& model) {
  std::vector<nn::Parameter*> out;
  model.backbone().visit_encoder_params([&](nn::Parameter& p) { out.push_back(&p); });
  return out;
}

std::vector<nn::Parameter*> collect_promtl(Model& model) {
  std::vector<nn::Parameter*> out;
  model.promtl().visit_params([&](nn::Parameter& p) { out.push_back(&p); });
  return out;
}

std::vector<nn::Parameter*> collect_classifier_and_layer_weights(Model& model) {
  std::vector<nn::Parameter*> out;
  model.classifier().visit_params([&](nn::Parameter& p) { out.push_back(&p); });
  model.backbone().visit_layer_weight_params([&](nn::Parameter& p) { out.push_back(&p); });
  return out;
}

TrainResult run_stage(Model& model, const StagePlan& plan, const TrainData& data) {
  plan.validate();
  if (data.train.empty()) throw DataError("training manifest is empty");
  std::filesystem::create_directories(data.out_dir);

  for (const auto& e : data.train.entries) {
    if (e.label == Label::Unlabeled) {
      throw DataError("training manifests must be labeled, but '" + e.utt_id +
                      "' is unlabeled (unlabeled data is for scoring mode)");
    }
  }
  if (plan.stage == Stage::Stage1) {
    for (const auto& e : data.train.entries) {
      if (e.label == Label::Spoof) {
        throw DataError("stage 1 trains on real speech only, but '" + e.utt_id +
                        "' is labeled spoof");
      }
    }
  } else {
    if (data.train.count(Label::Bonafide) == 0 || data.train.count(Label::Spoof) == 0) {
      throw DataError("stage 2 requires both bonafide and spoof utterances");
    }
    auto [wb, ws] = plan.class_weights_override ? *plan.class_weights_override
                                                : inverse_frequency_weights(data.train);
    model.classifier().set_class_weights(wb, ws);
  }

  // exactly two groups in stage 1, exactly three in stage 2
  std::vector<AdamW::GroupSpec> groups;
  groups.push_back({"backbone", collect_encoder(model), plan.lr_backbone, plan.weight_decay});
  groups.push_back({"promtl", collect_promtl(model), plan.lr_promtl, plan.weight_decay});
  if (plan.stage == Stage::Stage2) {
    groups.push_back({"classifier+layer_weights", collect_classifier_and_layer_weights(model),
                      plan.lr_classifier, plan.weight_decay});
  }
  AdamW optimizer(std::move(groups));
  // grouping contract: two groups in stage 1, three in stage 2
  const size_t expected_groups = plan.stage == Stage::Stage1 ? 2 : 3;
  if (optimizer.group_count() != expected_groups) {
    throw ConfigError("optimizer group count violates the stage contract");
  }

  PreparedCorpus corpus = prepare_corpus(data.train, data.dev, data.cache_dir,
                                         plan.pitch_backend, plan.stats_scope);
  ProsodyLossOptions loss_opts;
  loss_opts.mask_unvoiced_mse = plan.mask_unvoiced_mse;

  const auto log_path = data.out_dir / "train_log.jsonl";
  std::filesystem::remove(log_path);

  const std::vector<std::string> ckpt_namespaces =
      plan.stage == Stage::Stage1 ? std::vector<std::string>{"backbone", "promtl"}
                                  : std::vector<std::string>{"backbone", "promtl", "classifier"};

  TrainResult result;
  result.best_metric = std::numeric_limits<double>::infinity();
  result.best_checkpoint = data.out_dir / "best.ckpt";
  double best_tiebreak = std::numeric_limits<double>::infinity();

  std::vector<size_t> order(corpus.train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= plan.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    rng::Stream shuffle_rng(
        rng::derive(plan.seed, stage_name(plan.stage) + "/shuffle", static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    const uint64_t aug_base = plan.augment_seed != 0 ? plan.augment_seed : plan.seed;
    rng::Stream aug_rng(
        rng::derive(aug_base, stage_name(plan.stage) + "/rawboost", static_cast<uint64_t>(epoch)));

    LossBreakdown train_sum;
    double grad_norm_sum = 0.0;
    size_t steps = 0;

    size_t cursor = 0;
    while (cursor < order.size()) {
      const size_t batch_n = std::min(static_cast<size_t>(plan.batch_size),
                                      order.size() - cursor);
      const double inv_batch = 1.0 / static_cast<double>(batch_n);
      model.zero_grads();
      for (size_t b = 0; b < batch_n; ++b) {
        const PreparedUtterance& pu = corpus.train[order[cursor + b]];
        // augmentation is strictly train-path; dev/eval never see it
        std::vector<double> waveform;
        const std::vector<double>* input = &pu.waveform;
        if (plan.stage == Stage::Stage2 && plan.rawboost.enabled()) {
          waveform = apply_rawboost(pu.waveform, plan.rawboost, aug_rng).waveform;
          input = &waveform;
        }
        ad::Tape tape;
        ad::Var scaled;
        const LossBreakdown lb = utterance_loss(tape, model, plan.stage, pu, *input,
                                                inv_batch, loss_opts, &scaled);
        tape.backward(scaled);
        train_sum.total += lb.total;
        train_sum.mse += lb.mse;
        train_sum.bce += lb.bce;
        train_sum.cls += lb.cls;
      }
      grad_norm_sum += optimizer.grad_norm();
      optimizer.step();
      ++steps;
      cursor += batch_n;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.stage = stage_name(plan.stage);
    const double inv_n = 1.0 / static_cast<double>(corpus.train.size());
    rec.train_total = train_sum.total * inv_n;
    rec.train_mse = train_sum.mse * inv_n;
    rec.train_bce = train_sum.bce * inv_n;
    rec.train_cls = train_sum.cls * inv_n;
    rec.grad_norm = steps > 0 ? grad_norm_sum / static_cast<double>(steps) : 0.0;

    const LossSummary dev = evaluate_prosody_loss(model, plan.stage, corpus.dev, loss_opts);
    rec.dev_total = dev.total;
    rec.dev_mse = dev.mse;
    rec.dev_bce = dev.bce;
    rec.dev_cls = dev.cls;

    double metric = dev.total;
    if (plan.stage == Stage::Stage2 && !corpus.dev.empty()) {
      rec.dev_eer_percent = dev_eer(model, corpus.dev);
      metric = rec.dev_eer_percent;
    }
    if (corpus.dev.empty()) metric = rec.train_total;

    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();

    // epoch checkpoint + best-so-far
    Checkpoint ckpt = Checkpoint::from_model(model, ckpt_namespaces);
    ckpt.meta["stage"] = stage_name(plan.stage);
    ckpt.meta["epoch"] = std::to_string(epoch);
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch);
    result.last_checkpoint = data.out_dir / name;
    ckpt.save(result.last_checkpoint);
    // dev EER is coarse on small dev sets; break ties by total dev loss
    const bool improved = metric < result.best_metric ||
                          (metric == result.best_metric && dev.total < best_tiebreak);
    if (improved) {
      result.best_metric = metric;
      best_tiebreak = dev.total;
      result.best_epoch = epoch;
      ckpt.meta["best"] = "true";
      ckpt.save(result.best_checkpoint);
    }

    result.log.epochs.push_back(rec);
    result.log.append_jsonl(rec, log_path);
    log_info(stage_name(plan.stage) + " epoch " + std::to_string(epoch) + "/" +
             std::to_string(plan.epochs) + ": train " + std::to_string(rec.train_total) +
             ", dev " + std::to_string(rec.dev_total) +
             (rec.dev_eer_percent >= 0.0
                  ? ", dev EER " + std::to_string(rec.dev_eer_percent) + "%"
                  : ""));
  }
  return result;
}

}  // namespace

TrainResult run_stage1(Model& model, const StagePlan& plan, const TrainData& data) {
  if (plan.stage != Stage::Stage1) throw ConfigError("run_stage1 requires a stage-1 plan");
  return run_stage(model, plan, data);
}

TrainResult run_stage2(Model& model, const StagePlan& plan, const TrainData& data) {
  if (plan.stage != Stage::Stage2) throw ConfigError("run_stage2 requires a stage-2 plan");
  return run_stage(model, plan, data);
}

LossSummary evaluate_prosody_loss(Model& model, Stage stage,
                                  const std::vector<PreparedUtterance>& utterances,
                                  const ProsodyLossOptions& opts) {
  LossSummary mean;
  if (utterances.empty()) return mean;
  for (const auto& pu : utterances) {
    ad::Tape tape;
    const LossSummary lb = utterance_loss(tape, model, stage, pu, pu.waveform, 1.0, opts, nullptr);
    mean.total += lb.total;
    mean.mse += lb.mse;
    mean.bce += lb.bce;
    mean.cls += lb.cls;
  }
  const double inv = 1.0 / static_cast<double>(utterances.size());
  mean.total *= inv;
  mean.mse *= inv;
  mean.bce *= inv;
  mean.cls *= inv;
  return mean;
}

}  // namespace prosodet
