// SPDX-License-Identifier: Apache-2.0
#include "prosodet/rawboost.hpp"

#include <algorithm>
#include <cmath>

#include "prosodet/errors.hpp"
#include "prosodet/utterance.hpp"

namespace prosodet {

namespace {

// Linear-phase band-pass via difference of two windowed-sinc lowpasses.
std::vector<double> bandpass_taps(double f_lo, double f_hi, int taps, double fs) {
  std::vector<double> h(static_cast<size_t>(taps), 0.0);
  const int mid = taps / 2;
  const double w_hi = 2.0 * M_PI * f_hi / fs;
  const double w_lo = 2.0 * M_PI * f_lo / fs;
  for (int n = 0; n < taps; ++n) {
    const int k = n - mid;
    double v;
    if (k == 0) {
      v = (w_hi - w_lo) / M_PI;
    } else {
      v = (std::sin(w_hi * k) - std::sin(w_lo * k)) / (M_PI * k);
    }
    // Hamming window
    v *= 0.54 - 0.46 * std::cos(2.0 * M_PI * n / (taps - 1));
    h[static_cast<size_t>(n)] = v;
  }
  return h;
}

}  // namespace

void RawBoostConfig::validate() const {
  if (method != 3) {
    throw ConfigError("only RawBoost method 3 (stationary signal-independent noise) "
                      "is implemented");
  }
  if (!enabled()) return;
  if (!(snr_low_db <= snr_high_db)) {
    throw ConfigError("invalid SNR range: low must be <= high");
  }
  if (noise_bands < 1) throw ConfigError("noise_bands must be >= 1");
  if (filter_taps < 3 || filter_taps % 2 == 0) {
    throw ConfigError("filter_taps must be odd and >= 3");
  }
}

Augmented apply_rawboost(const std::vector<double>& waveform, const RawBoostConfig& cfg,
                         rng::Stream& rng) {
  cfg.validate();
  Augmented out;
  if (!cfg.enabled() || waveform.empty()) {
    out.waveform = waveform;
    return out;
  }

  const size_t n = waveform.size();
  double signal_power = 0.0;
  for (double s : waveform) signal_power += s * s;
  signal_power /= static_cast<double>(n);
  if (signal_power <= 0.0) {
    // SNR is undefined for an all-zero signal; leave it untouched
    out.waveform = waveform;
    return out;
  }

  // one time-invariant random filter per utterance: the noise is stationary
  const double fs = static_cast<double>(kSampleRate);
  std::vector<double> fir(static_cast<size_t>(cfg.filter_taps), 0.0);
  for (int b = 0; b < cfg.noise_bands; ++b) {
    double f1 = rng.uniform(50.0, fs / 2.0 - 200.0);
    double f2 = rng.uniform(50.0, fs / 2.0 - 200.0);
    if (f1 > f2) std::swap(f1, f2);
    f2 = std::max(f2, f1 + 100.0);
    const double gain_db = rng.uniform(-10.0, 0.0);
    const double gain = std::pow(10.0, gain_db / 20.0);
    const auto band = bandpass_taps(f1, f2, cfg.filter_taps, fs);
    for (size_t i = 0; i < fir.size(); ++i) fir[i] += gain * band[i];
  }

  std::vector<double> white(n);
  for (double& v : white) v = rng.gaussian();

  // "same" convolution centered on the filter midpoint
  const int mid = cfg.filter_taps / 2;
  std::vector<double> noise(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < cfg.filter_taps; ++j) {
      const int64_t src = static_cast<int64_t>(i) + j - mid;
      if (src < 0 || src >= static_cast<int64_t>(n)) continue;
      acc += fir[static_cast<size_t>(j)] * white[static_cast<size_t>(src)];
    }
    noise[i] = acc;
  }

  double noise_power = 0.0;
  for (double v : noise) noise_power += v * v;
  noise_power /= static_cast<double>(n);
  if (noise_power <= 0.0) {
    out.waveform = waveform;
    return out;
  }

  out.snr_db = rng.uniform(cfg.snr_low_db, cfg.snr_high_db);
  const double target_ratio = std::pow(10.0, out.snr_db / 10.0);
  const double scale = std::sqrt(signal_power / (noise_power * target_ratio));

  out.waveform.resize(n);
  double peak = 0.0;
  for (size_t i = 0; i < n; ++i) {
    out.waveform[i] = waveform[i] + scale * noise[i];
    peak = std::max(peak, std::fabs(out.waveform[i]));
  }
  if (peak > 1.0) {
    for (double& v : out.waveform) v /= peak;
  }
  return out;
}

}  // namespace prosodet
