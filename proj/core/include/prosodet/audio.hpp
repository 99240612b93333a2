// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_AUDIO_HPP
#define PROSODET_AUDIO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace prosodet::audio {

struct WavData {
  std::vector<std::vector<double>> channels;  // one vector per channel, samples in [-1, 1]
  int sample_rate = 0;

  size_t frames() const { return channels.empty() ? 0 : channels[0].size(); }
  size_t channel_count() const { return channels.size(); }
};

// Reads RIFF/WAVE. Supported encodings: PCM 16/24/32-bit and IEEE float
// 32/64-bit, any channel count. Throws DataError on malformed or
// unsupported files (FLAC and compressed codecs are not handled by this
// build; convert to WAV upstream).
WavData read_wav(const std::filesystem::path& path);

// 16-bit PCM, mono or multi-channel. Samples are clamped to [-1, 1].
void write_wav_pcm16(const std::filesystem::path& path,
                     const std::vector<std::vector<double>>& channels,
                     int sample_rate);

inline void write_wav_pcm16_mono(const std::filesystem::path& path,
                                 const std::vector<double>& samples,
                                 int sample_rate) {
  write_wav_pcm16(path, {samples}, sample_rate);
}

// Channel average.
std::vector<double> downmix_mono(const WavData& wav);

// Kaiser-windowed sinc rational resampler (lowpassing on downsample).
std::vector<double> resample(const std::vector<double>& input, int src_rate, int dst_rate);

}  // namespace prosodet::audio

#endif  // PROSODET_AUDIO_HPP
