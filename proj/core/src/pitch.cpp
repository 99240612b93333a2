// SPDX-License-Identifier: Apache-2.0
//
// Frame-level F0 estimation. The in-tree tracker scores normalized
// autocorrelation peaks per frame; candidate selection prefers the shortest
// lag among near-maximal peaks, which suppresses octave-down errors on
// harmonic-rich signals.
#include "prosodet/pitch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "prosodet/errors.hpp"

namespace prosodet {

namespace {

//-----------------------------------------------------------------------------
// Normalized autocorrelation of one frame.
// segment points at window + max_lag samples (zero-padded at the waveform
// edges); r[lag] = sum x[n] x[n+lag] / sqrt(E0 * E(lag)).
//-----------------------------------------------------------------------------
void NormalizedAutocorrelation(const double* segment, int window, int min_lag,
                               int max_lag, std::vector<double>* nacf) {
  double e0 = 0.0;
  for (int n = 0; n < window; ++n) e0 += segment[n] * segment[n];

  nacf->assign(max_lag + 1, 0.0);
  if (e0 <= 0.0) return;

  for (int lag = min_lag; lag <= max_lag; ++lag) {
    double cross = 0.0;
    double e_lag = 0.0;
    for (int n = 0; n < window; ++n) {
      cross += segment[n] * segment[n + lag];
      e_lag += segment[n + lag] * segment[n + lag];
    }
    (*nacf)[lag] = e_lag > 1e-300 ? cross / std::sqrt(e0 * e_lag) : 0.0;
  }
}

//-----------------------------------------------------------------------------
// Parabolic refinement of a peak position from three equally spaced samples.
//-----------------------------------------------------------------------------
double RefinePeak(double ym1, double y0, double yp1, double lag) {
  const double denom = ym1 - 2.0 * y0 + yp1;
  if (std::fabs(denom) < 1e-300) return lag;
  double shift = 0.5 * (ym1 - yp1) / denom;
  shift = std::clamp(shift, -0.5, 0.5);
  return lag + shift;
}

struct FrameEstimate {
  double f0 = 0.0;  // 0 => unvoiced
};

//-----------------------------------------------------------------------------
// Single-frame decision: voiced if the frame has energy and a clear
// periodicity peak; among local maxima within 15% of the best score the
// shortest lag wins.
//-----------------------------------------------------------------------------
FrameEstimate EstimateFrame(const double* segment, int window, int min_lag,
                            int max_lag, const AutocorrConfig& cfg) {
  FrameEstimate est;

  double energy = 0.0;
  for (int n = 0; n < window; ++n) energy += segment[n] * segment[n];
  if (energy / window < cfg.energy_floor) return est;

  std::vector<double> nacf;
  NormalizedAutocorrelation(segment, window, min_lag, max_lag, &nacf);

  double best_score = 0.0;
  for (int lag = min_lag; lag <= max_lag; ++lag) best_score = std::max(best_score, nacf[lag]);
  if (best_score < cfg.clarity_threshold) return est;

  int chosen = 0;
  for (int lag = min_lag + 1; lag < max_lag; ++lag) {
    const bool local_max = nacf[lag] >= nacf[lag - 1] && nacf[lag] >= nacf[lag + 1];
    if (local_max && nacf[lag] >= 0.85 * best_score && nacf[lag] >= cfg.clarity_threshold) {
      chosen = lag;
      break;
    }
  }
  if (chosen == 0) {
    // fall back to the global argmax (peak may sit on the lag-range border)
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      if (nacf[lag] == best_score) {
        chosen = lag;
        break;
      }
    }
  }
  if (chosen <= min_lag || chosen >= max_lag) {
    est.f0 = static_cast<double>(kSampleRate) / chosen;
  } else {
    const double refined = RefinePeak(nacf[chosen - 1], nacf[chosen], nacf[chosen + 1],
                                      static_cast<double>(chosen));
    est.f0 = static_cast<double>(kSampleRate) / refined;
  }
  if (est.f0 < cfg.f0_floor_hz || est.f0 > cfg.f0_ceil_hz) est.f0 = 0.0;
  return est;
}

}  // namespace

F0Reference AutocorrPitchBackend::extract(const Utterance& utt) const {
  if (utt.sample_rate != kSampleRate) {
    throw DataError("pitch backend requires 16 kHz input");
  }
  const auto& x = utt.waveform;
  const int min_lag = static_cast<int>(std::floor(kSampleRate / cfg_.f0_ceil_hz));
  const int max_lag = static_cast<int>(std::ceil(kSampleRate / cfg_.f0_floor_hz));
  const int window = kWindowSamples;

  // frames centered at t * hop; ceil(N / hop) frames total
  const size_t n_frames = (x.size() + kHopSamples - 1) / kHopSamples;

  F0Reference ref;
  ref.f0.resize(n_frames, 0.0);
  ref.frame_length_ms = kFrameLengthMs;
  ref.frame_period_ms = kFramePeriodMs;

  std::vector<double> segment(static_cast<size_t>(window + max_lag), 0.0);
  for (size_t t = 0; t < n_frames; ++t) {
    const int64_t center = static_cast<int64_t>(t) * kHopSamples;
    const int64_t start = center - window / 2;
    for (int i = 0; i < window + max_lag; ++i) {
      const int64_t src = start + i;
      segment[static_cast<size_t>(i)] =
          (src >= 0 && src < static_cast<int64_t>(x.size())) ? x[static_cast<size_t>(src)] : 0.0;
    }
    ref.f0[t] = EstimateFrame(segment.data(), window, min_lag, max_lag, cfg_).f0;
  }
  ref.vuv = derive_vuv(ref.f0);
  return ref;
}

F0Reference ExternalPitchBackend::extract(const Utterance& utt) const {
  const auto path = dir_ / (utt.utt_id + ".f0");
  std::ifstream in(path);
  if (!in) {
    throw DataError("external pitch backend: missing contour file " + path.string());
  }
  F0Reference ref;
  ref.frame_length_ms = kFrameLengthMs;
  ref.frame_period_ms = kFramePeriodMs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    size_t consumed = 0;
    double v = 0.0;
    try {
      v = std::stod(line, &consumed);
    } catch (const std::exception&) {
      throw DataError("external pitch backend: unparseable f0 at " + path.string() + ":" +
                      std::to_string(line_no));
    }
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DataError("external pitch backend: invalid f0 value at " + path.string() + ":" +
                      std::to_string(line_no));
    }
    ref.f0.push_back(v);
  }
  if (ref.f0.empty()) {
    throw DataError("external pitch backend: empty contour file " + path.string());
  }
  ref.vuv = derive_vuv(ref.f0);
  return ref;
}

std::unique_ptr<PitchBackend> make_pitch_backend(const std::string& spec) {
  if (spec == "acf" || spec == "acf-v1") {
    return std::make_unique<AutocorrPitchBackend>();
  }
  const std::string prefix = "external:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string rest = spec.substr(prefix.size());
    const size_t colon = rest.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= rest.size()) {
      throw ConfigError("external pitch backend spec must be external:<tag>:<dir>, got '" +
                        spec + "'");
    }
    return std::make_unique<ExternalPitchBackend>(rest.substr(0, colon),
                                                  rest.substr(colon + 1));
  }
  throw ConfigError("unknown pitch backend '" + spec + "' (expected acf or external:<tag>:<dir>)");
}

}  // namespace prosodet
