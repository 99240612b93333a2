// SPDX-License-Identifier: Apache-2.0
#include "prosodet/utterance.hpp"

#include "prosodet/audio.hpp"
#include "prosodet/errors.hpp"

namespace prosodet {

std::vector<double> fit_to_fixed_length(std::vector<double> samples, rng::Stream* crop_rng) {
  if (samples.size() > kFixedSamples) {
    size_t offset = 0;
    if (crop_rng != nullptr) {
      offset = crop_rng->index(samples.size() - kFixedSamples + 1);
    }
    samples = std::vector<double>(samples.begin() + static_cast<ptrdiff_t>(offset),
                                  samples.begin() + static_cast<ptrdiff_t>(offset + kFixedSamples));
  } else if (samples.size() < kFixedSamples) {
    samples.resize(kFixedSamples, 0.0);
  }
  return samples;
}

Utterance load_utterance(const ManifestEntry& entry, const LoadOptions& opts) {
  audio::WavData wav = audio::read_wav(entry.audio_path);
  std::vector<double> mono = audio::downmix_mono(wav);
  if (mono.empty()) throw DataError("zero-length audio: " + entry.audio_path.string());

  if (wav.sample_rate != kSampleRate) {
    if (!opts.allow_resample) {
      throw DataError("sample rate " + std::to_string(wav.sample_rate) + " != " +
                      std::to_string(kSampleRate) + " and resampling is disabled: " +
                      entry.audio_path.string() + " (pass --resample to enable)");
    }
    mono = audio::resample(mono, wav.sample_rate, kSampleRate);
    for (double& s : mono) s = std::clamp(s, -1.0, 1.0);
  }

  Utterance utt;
  utt.utt_id = entry.utt_id;
  utt.speaker_id = entry.speaker_id;
  utt.label = entry.label;
  utt.sample_rate = kSampleRate;
  utt.waveform = fit_to_fixed_length(std::move(mono), opts.crop_rng);
  return utt;
}

}  // namespace prosodet
