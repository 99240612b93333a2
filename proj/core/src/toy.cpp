// SPDX-License-Identifier: Apache-2.0
#include "prosodet/toy.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "prosodet/audio.hpp"
#include "prosodet/errors.hpp"
#include "prosodet/utterance.hpp"

namespace prosodet {

namespace {

struct SpeakerProfile {
  double base_f0 = 170.0;         // Hz
  double brightness = 1.0;        // harmonic rolloff modifier
};

struct UtterancePlan {
  // shared between the real utterance and its spoofed counterpart
  std::vector<std::pair<double, double>> voiced_segments;  // (start_s, end_s)
  std::vector<double> segment_pitch_offset;  // per segment, in log-Hz
  std::vector<double> harmonic_phase;        // per harmonic
  double vibrato_rate_hz = 5.5;
  double vibrato_depth = 0.035;   // log-Hz amplitude
  double walk_depth = 0.05;
  uint64_t contour_seed = 0;
  double gain = 0.3;
};

constexpr int kHarmonics = 8;
constexpr double kDuration = 4.0;

UtterancePlan draw_plan(rng::Stream& rng) {
  UtterancePlan plan;
  double t = rng.uniform(0.05, 0.25);
  while (t < kDuration - 0.3) {
    const double seg = rng.uniform(0.45, 0.95);
    const double end = std::min(t + seg, kDuration - 0.05);
    plan.voiced_segments.emplace_back(t, end);
    plan.segment_pitch_offset.push_back(rng.uniform(-0.12, 0.12));
    t = end + rng.uniform(0.12, 0.30);
  }
  for (int h = 0; h < kHarmonics; ++h) {
    plan.harmonic_phase.push_back(rng.uniform(0.0, 2.0 * M_PI));
  }
  plan.vibrato_rate_hz = rng.uniform(4.5, 6.5);
  plan.vibrato_depth = rng.uniform(0.025, 0.05);
  plan.walk_depth = rng.uniform(0.03, 0.07);
  plan.contour_seed = rng.bits();
  plan.gain = rng.uniform(0.22, 0.33);
  return plan;
}

// Smooth random walk: low-pass filtered gaussian steps, zero-mean-ish.
std::vector<double> smooth_walk(size_t n, double depth, uint64_t seed) {
  rng::Stream rng(seed);
  std::vector<double> walk(n, 0.0);
  double state = 0.0;
  const double alpha = 0.0015;  // per-sample smoothing at 16 kHz
  for (size_t i = 0; i < n; ++i) {
    state += alpha * (depth * rng.gaussian() - state);
    walk[i] = state;
  }
  // remove the mean so the walk modulates around the segment pitch
  double mean = 0.0;
  for (double v : walk) mean += v;
  mean /= static_cast<double>(n);
  for (double& v : walk) v -= mean;
  return walk;
}

// Per-sample log-F0 contour; <= 0 samples are unvoiced (contour value
// ignored there).
struct Contour {
  std::vector<double> f0;      // Hz per sample, 0 where unvoiced
  std::vector<uint8_t> voiced; // per sample
};

Contour build_contour(const SpeakerProfile& spk, const UtterancePlan& plan, bool spoofed,
                      bool confusable) {
  const size_t n = kFixedSamples;
  Contour contour;
  contour.f0.assign(n, 0.0);
  contour.voiced.assign(n, 0);

  const auto walk = smooth_walk(n, plan.walk_depth, plan.contour_seed);
  rng::Stream jitter_rng(rng::mix(plan.contour_seed ^ 0x5eedULL));

  const double semitone = std::log(2.0) / 12.0;
  for (size_t seg = 0; seg < plan.voiced_segments.size(); ++seg) {
    const auto [start_s, end_s] = plan.voiced_segments[seg];
    const size_t i0 = static_cast<size_t>(start_s * kSampleRate);
    const size_t i1 = std::min(n, static_cast<size_t>(end_s * kSampleRate));
    double jitter = 0.0;
    for (size_t i = i0; i < i1; ++i) {
      const double t = static_cast<double>(i) / kSampleRate;
      double log_f0 = std::log(spk.base_f0) + plan.segment_pitch_offset[seg];
      if (!spoofed) {
        // natural micro-variation: vibrato + slow walk + sample-rate jitter
        log_f0 += plan.vibrato_depth *
                  std::sin(2.0 * M_PI * plan.vibrato_rate_hz * t + static_cast<double>(seg));
        log_f0 += walk[i];
        if (i % 160 == 0) jitter = 0.004 * jitter_rng.gaussian();  // every 10 ms
        log_f0 += jitter;
      } else if (confusable) {
        // per-segment quantized levels: mean pitch and range track the real
        // class, only the micro-variation is gone
        const size_t mid = (i0 + i1) / 2;
        double q = std::round(plan.segment_pitch_offset[seg] / semitone) * semitone;
        q += std::round(walk[mid] / semitone) * semitone;
        log_f0 = std::log(spk.base_f0) + q;
      } else {
        // fully flattened: one quantized level for the whole utterance
        log_f0 = std::log(spk.base_f0) +
                 std::round(plan.segment_pitch_offset[0] / semitone) * semitone;
      }
      contour.f0[i] = std::exp(log_f0);
      contour.voiced[i] = 1;
    }
  }
  return contour;
}

std::vector<double> synthesize(const SpeakerProfile& spk, const UtterancePlan& plan,
                               const Contour& contour) {
  const size_t n = kFixedSamples;
  std::vector<double> x(n, 0.0);
  rng::Stream noise_rng(rng::mix(plan.contour_seed ^ 0xabcdULL));

  double phase = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double sample = 0.0;
    if (contour.voiced[i]) {
      phase += 2.0 * M_PI * contour.f0[i] / kSampleRate;
      if (phase > 2.0 * M_PI) phase -= 2.0 * M_PI;
      for (int h = 1; h <= kHarmonics; ++h) {
        const double amp = std::pow(1.0 / h, 1.1 * spk.brightness);
        sample += amp * std::sin(h * phase + plan.harmonic_phase[static_cast<size_t>(h - 1)]);
      }
      sample *= 0.5;
    }
    // shared breath-noise floor for both classes
    sample += 0.004 * noise_rng.gaussian();
    x[i] = plan.gain * sample;
  }

  // soft attack/decay at segment boundaries to avoid clicks
  const size_t ramp = 160;  // 10 ms
  for (const auto& [start_s, end_s] : plan.voiced_segments) {
    const size_t i0 = static_cast<size_t>(start_s * kSampleRate);
    const size_t i1 = std::min(n, static_cast<size_t>(end_s * kSampleRate));
    for (size_t r = 0; r < ramp && i0 + r < i1; ++r) {
      const double w = static_cast<double>(r) / ramp;
      x[i0 + r] *= w;
      if (i1 >= r + 1) x[i1 - r - 1] *= w;
    }
  }
  return x;
}

struct SplitSpec {
  const char* name;
  int count;
  const char* tag;
};

}  // namespace

ToyCorpusPaths make_toy_corpus(const ToyCorpusConfig& cfg) {
  if (cfg.n_train < 2 || cfg.n_eval < 2 || cfg.n_speakers < 1) {
    throw ConfigError("toy corpus needs at least 2 train, 2 eval utterances and 1 speaker");
  }
  const auto audio_dir = cfg.out_dir / "audio";
  std::filesystem::create_directories(audio_dir);

  rng::Stream spk_rng(rng::derive(cfg.seed, "toy/speakers"));
  std::vector<SpeakerProfile> speakers(static_cast<size_t>(cfg.n_speakers));
  for (auto& spk : speakers) {
    spk.base_f0 = std::exp(spk_rng.uniform(std::log(115.0), std::log(260.0)));
    spk.brightness = spk_rng.uniform(0.9, 1.1);
  }

  const SplitSpec splits[] = {{"train", cfg.n_train, "toy-train"},
                              {"dev", cfg.n_dev, "toy-dev"},
                              {"eval", cfg.n_eval, "toy-eval"}};

  ToyCorpusPaths paths;
  paths.train_manifest = cfg.out_dir / "train.tsv";
  paths.dev_manifest = cfg.out_dir / "dev.tsv";
  paths.eval_manifest = cfg.out_dir / "eval.tsv";
  paths.stage1_train_manifest = cfg.out_dir / "stage1_train.tsv";
  paths.stage1_dev_manifest = cfg.out_dir / "stage1_dev.tsv";

  Manifest stage1_train, stage1_dev;

  for (const auto& split : splits) {
    Manifest manifest;
    rng::Stream rng(rng::derive(cfg.seed, std::string("toy/") + split.name));
    for (int i = 0; i < split.count; ++i) {
      const bool spoofed = (i % 2) == 1;  // alternate for an even class split
      const size_t spk_idx = rng.index(speakers.size());
      const UtterancePlan plan = draw_plan(rng);
      const Contour contour =
          build_contour(speakers[spk_idx], plan, spoofed, cfg.confusable);
      const auto waveform = synthesize(speakers[spk_idx], plan, contour);

      char utt_id[64];
      std::snprintf(utt_id, sizeof(utt_id), "toy_%s_%04d", split.name, i);
      const auto wav_path = audio_dir / (std::string(utt_id) + ".wav");
      audio::write_wav_pcm16_mono(wav_path, waveform, kSampleRate);

      ManifestEntry entry;
      entry.utt_id = utt_id;
      // manifests live in out_dir; loaders resolve relative to the manifest
      entry.audio_path = std::filesystem::path("audio") / (std::string(utt_id) + ".wav");
      entry.speaker_id = "spk" + std::to_string(spk_idx);
      entry.label = spoofed ? Label::Spoof : Label::Bonafide;
      entry.dataset_tag = split.tag;
      manifest.entries.push_back(entry);

      if (!spoofed) {
        if (std::string(split.name) == "train") stage1_train.entries.push_back(entry);
        if (std::string(split.name) == "dev") stage1_dev.entries.push_back(entry);
      }
    }
    const auto manifest_path = cfg.out_dir / (std::string(split.name) + ".tsv");
    write_manifest(manifest, manifest_path);
  }
  write_manifest(stage1_train, paths.stage1_train_manifest);
  write_manifest(stage1_dev, paths.stage1_dev_manifest);
  return paths;
}

}  // namespace prosodet
