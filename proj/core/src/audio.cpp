// SPDX-License-Identifier: Apache-2.0
#include "prosodet/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "prosodet/errors.hpp"

namespace prosodet::audio {

namespace {

uint32_t read_u32le(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16le(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatIeeeFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file: " + path.string());

  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "fLaC", 4) == 0) {
      throw DataError("FLAC input is not supported by this build, convert to WAV: " +
                      path.string());
    }
    throw DataError("not a RIFF/WAVE file: " + path.string());
  }

  uint16_t format = 0;
  uint16_t channels = 0;
  uint32_t sample_rate = 0;
  uint16_t bits_per_sample = 0;
  bool have_fmt = false;
  const uint8_t* data_ptr = nullptr;
  size_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t chunk_size = read_u32le(bytes.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      throw DataError("truncated WAV chunk in " + path.string());
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw DataError("malformed fmt chunk in " + path.string());
      format = read_u16le(bytes.data() + body);
      channels = read_u16le(bytes.data() + body + 2);
      sample_rate = read_u32le(bytes.data() + body + 4);
      bits_per_sample = read_u16le(bytes.data() + body + 14);
      if (format == kFormatExtensible && chunk_size >= 40) {
        // sub-format GUID starts with the effective format tag
        format = read_u16le(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_ptr = bytes.data() + body;
      data_len = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_ptr == nullptr) {
    throw DataError("WAV file missing fmt or data chunk: " + path.string());
  }
  if (channels == 0 || sample_rate == 0) {
    throw DataError("WAV file with zero channels or sample rate: " + path.string());
  }

  const size_t bytes_per_sample = bits_per_sample / 8;
  if (bytes_per_sample == 0) throw DataError("invalid bits per sample in " + path.string());
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t n_frames = data_len / frame_bytes;
  if (n_frames == 0) throw DataError("zero-length audio: " + path.string());

  WavData wav;
  wav.sample_rate = static_cast<int>(sample_rate);
  wav.channels.assign(channels, std::vector<double>(n_frames));

  auto sample_at = [&](size_t frame, size_t ch) -> double {
    const uint8_t* p = data_ptr + frame * frame_bytes + ch * bytes_per_sample;
    if (format == kFormatPcm) {
      switch (bits_per_sample) {
        case 16: {
          int16_t v;
          std::memcpy(&v, p, 2);
          return static_cast<double>(v) / 32768.0;
        }
        case 24: {
          int32_t v = (p[0] << 8) | (p[1] << 16) | (static_cast<int32_t>(p[2]) << 24);
          return static_cast<double>(v >> 8) / 8388608.0;
        }
        case 32: {
          int32_t v;
          std::memcpy(&v, p, 4);
          return static_cast<double>(v) / 2147483648.0;
        }
        default:
          throw DataError("unsupported PCM bit depth " + std::to_string(bits_per_sample) +
                          " in " + path.string());
      }
    }
    if (format == kFormatIeeeFloat) {
      if (bits_per_sample == 32) {
        float v;
        std::memcpy(&v, p, 4);
        return static_cast<double>(v);
      }
      if (bits_per_sample == 64) {
        double v;
        std::memcpy(&v, p, 8);
        return v;
      }
      throw DataError("unsupported float bit depth in " + path.string());
    }
    throw DataError("unsupported WAV format tag " + std::to_string(format) + " in " +
                    path.string());
  };

  for (size_t f = 0; f < n_frames; ++f) {
    for (size_t c = 0; c < channels; ++c) {
      wav.channels[c][f] = std::clamp(sample_at(f, c), -1.0, 1.0);
    }
  }
  return wav;
}

void write_wav_pcm16(const std::filesystem::path& path,
                     const std::vector<std::vector<double>>& channels,
                     int sample_rate) {
  if (channels.empty() || channels[0].empty()) {
    throw DataError("refusing to write empty WAV: " + path.string());
  }
  const size_t n_frames = channels[0].size();
  for (const auto& ch : channels) {
    if (ch.size() != n_frames) throw DataError("channel length mismatch writing " + path.string());
  }
  const uint16_t n_ch = static_cast<uint16_t>(channels.size());
  const uint32_t data_bytes = static_cast<uint32_t>(n_frames * n_ch * 2);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for write: " + path.string());

  auto put_u32 = [&](uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  auto put_u16 = [&](uint16_t v) {
    uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
    out.write(reinterpret_cast<char*>(b), 2);
  };

  out.write("RIFF", 4);
  put_u32(36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(n_ch);
  put_u32(static_cast<uint32_t>(sample_rate));
  put_u32(static_cast<uint32_t>(sample_rate) * n_ch * 2);
  put_u16(static_cast<uint16_t>(n_ch * 2));
  put_u16(16);
  out.write("data", 4);
  put_u32(data_bytes);

  for (size_t f = 0; f < n_frames; ++f) {
    for (size_t c = 0; c < n_ch; ++c) {
      const double x = std::clamp(channels[c][f], -1.0, 1.0);
      const int32_t q = static_cast<int32_t>(std::lrint(x * 32767.0));
      put_u16(static_cast<uint16_t>(static_cast<int16_t>(std::clamp(q, -32768, 32767))));
    }
  }
  if (!out) throw DataError("short write: " + path.string());
}

std::vector<double> downmix_mono(const WavData& wav) {
  if (wav.channels.empty()) return {};
  if (wav.channels.size() == 1) return wav.channels[0];
  const size_t n = wav.frames();
  std::vector<double> mono(n, 0.0);
  for (const auto& ch : wav.channels) {
    for (size_t i = 0; i < n; ++i) mono[i] += ch[i];
  }
  const double inv = 1.0 / static_cast<double>(wav.channels.size());
  for (double& s : mono) s *= inv;
  return mono;
}

namespace {

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 32; ++k) {
    term *= (x * x) / (4.0 * k * k);
    sum += term;
    if (term < 1e-14 * sum) break;
  }
  return sum;
}

}  // namespace

std::vector<double> resample(const std::vector<double>& input, int src_rate, int dst_rate) {
  if (src_rate <= 0 || dst_rate <= 0) throw ConfigError("resample rates must be positive");
  if (src_rate == dst_rate) return input;
  if (input.empty()) return {};

  const int g = std::gcd(src_rate, dst_rate);
  const int64_t up = dst_rate / g;
  const int64_t down = src_rate / g;

  const size_t out_len = static_cast<size_t>(
      (static_cast<int64_t>(input.size()) * up + down - 1) / down);
  std::vector<double> out(out_len, 0.0);

  constexpr int kHalfWidth = 24;   // taps per side, in input samples
  constexpr double kBeta = 8.6;    // ~90 dB Kaiser stopband
  const double cutoff = std::min(1.0, static_cast<double>(dst_rate) / src_rate);
  const double i0_beta = bessel_i0(kBeta);

  for (size_t j = 0; j < out_len; ++j) {
    // center of output sample j on the input time axis
    const double t = static_cast<double>(j) * down / up;
    const int64_t n0 = static_cast<int64_t>(std::floor(t));
    double acc = 0.0;
    for (int64_t n = n0 - kHalfWidth + 1; n <= n0 + kHalfWidth; ++n) {
      if (n < 0 || n >= static_cast<int64_t>(input.size())) continue;
      const double d = (t - static_cast<double>(n)) * cutoff;
      const double sinc = d == 0.0 ? 1.0 : std::sin(M_PI * d) / (M_PI * d);
      const double w_arg = (t - static_cast<double>(n)) / kHalfWidth;
      const double w2 = 1.0 - w_arg * w_arg;
      if (w2 < 0.0) continue;
      const double window = bessel_i0(kBeta * std::sqrt(w2)) / i0_beta;
      acc += input[static_cast<size_t>(n)] * sinc * window;
    }
    out[j] = acc * cutoff;
  }
  return out;
}

}  // namespace prosodet::audio
