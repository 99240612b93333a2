// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_UTTERANCE_HPP
#define PROSODET_UTTERANCE_HPP

#include <optional>
#include <string>
#include <vector>

#include "prosodet/manifest.hpp"
#include "prosodet/rng.hpp"

namespace prosodet {

inline constexpr int kSampleRate = 16000;
// Fixed 4.00 s input so frame counts are exact.
inline constexpr size_t kFixedSamples = 64000;
inline constexpr int kFramePeriodMs = 20;   // hop
inline constexpr int kFrameLengthMs = 25;   // analysis window
inline constexpr int kHopSamples = kSampleRate * kFramePeriodMs / 1000;      // 320
inline constexpr int kWindowSamples = kSampleRate * kFrameLengthMs / 1000;   // 400
inline constexpr size_t kFixedFrames = kFixedSamples / kHopSamples;          // 200

struct Utterance {
  std::string utt_id;
  std::vector<double> waveform;  // kFixedSamples mono samples in [-1, 1]
  int sample_rate = kSampleRate;
  std::optional<std::string> speaker_id;
  Label label = Label::Unlabeled;
};

struct LoadOptions {
  bool allow_resample = false;  // resample非-16k inputs instead of rejecting
  // Training-only alternative to the leading-segment trim. When set, long
  // inputs are cropped at an offset drawn from *crop_rng.
  rng::Stream* crop_rng = nullptr;
};

// Reference trim/pad: leading segment kept, zeros appended. Exposed
// separately so synthetic pipelines can reuse it without touching disk.
std::vector<double> fit_to_fixed_length(std::vector<double> samples,
                                        rng::Stream* crop_rng = nullptr);

Utterance load_utterance(const ManifestEntry& entry, const LoadOptions& opts = {});

}  // namespace prosodet

#endif  // PROSODET_UTTERANCE_HPP
