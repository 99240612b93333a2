// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_RAWBOOST_HPP
#define PROSODET_RAWBOOST_HPP

#include <limits>
#include <vector>

#include "prosodet/rng.hpp"

namespace prosodet {

// Stationary, signal-independent additive noise at the waveform level.
// White noise is colored by a random multi-band FIR filter (one filter per
// utterance, time-invariant) and mixed in at a uniformly sampled SNR.
struct RawBoostConfig {
  int method = 3;       // only the stationary signal-independent variant exists here
  double snr_low_db = 10.0;
  double snr_high_db = 40.0;
  int noise_bands = 5;
  int filter_taps = 65;

  // +inf lower bound disables augmentation entirely (identity output)
  bool enabled() const { return snr_low_db != std::numeric_limits<double>::infinity(); }
  void validate() const;

  static RawBoostConfig disabled_sentinel() {
    RawBoostConfig cfg;
    cfg.snr_low_db = std::numeric_limits<double>::infinity();
    cfg.snr_high_db = std::numeric_limits<double>::infinity();
    return cfg;
  }
};

struct Augmented {
  std::vector<double> waveform;
  double snr_db = std::numeric_limits<double>::infinity();  // sampled target
};

// Output length always equals input length; peak is kept <= 1 by rescaling
// when the mix would clip. Disabled config returns the input bit-identically.
Augmented apply_rawboost(const std::vector<double>& waveform, const RawBoostConfig& cfg,
                         rng::Stream& rng);

}  // namespace prosodet

#endif  // PROSODET_RAWBOOST_HPP
