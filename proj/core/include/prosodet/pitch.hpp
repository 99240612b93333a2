// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_PITCH_HPP
#define PROSODET_PITCH_HPP

#include <filesystem>
#include <memory>
#include <string>

#include "prosodet/prosody.hpp"
#include "prosodet/utterance.hpp"

namespace prosodet {

// Pluggable frame-level pitch extractor. Implementations must return an
// Eq-consistent contour: f0 == 0 exactly on unvoiced frames, 25 ms window /
// 20 ms hop framing at 16 kHz.
class PitchBackend {
 public:
  virtual ~PitchBackend() = default;
  // Versioned id, used to key label caches; changing the algorithm must
  // change the id.
  virtual std::string id() const = 0;
  virtual F0Reference extract(const Utterance& utt) const = 0;
};

struct AutocorrConfig {
  double f0_floor_hz = 60.0;
  double f0_ceil_hz = 500.0;
  double clarity_threshold = 0.50;   // min normalized ACF peak for voicing
  double energy_floor = 1e-7;        // min mean-square frame energy
};

// Deterministic normalized-autocorrelation pitch tracker; the in-tree
// backend used by tests and the toy pipeline.
class AutocorrPitchBackend : public PitchBackend {
 public:
  explicit AutocorrPitchBackend(AutocorrConfig cfg = {}) : cfg_(cfg) {}
  std::string id() const override { return "acf-v1"; }
  F0Reference extract(const Utterance& utt) const override;

 private:
  AutocorrConfig cfg_;
};

// Adapter for an externally computed extractor (e.g. a DIO run done
// offline). Reads <dir>/<utt_id>.f0: one f0 value per line at the 20 ms
// frame period, 0 on unvoiced frames. Voicing is re-derived from f0.
class ExternalPitchBackend : public PitchBackend {
 public:
  ExternalPitchBackend(std::string tag, std::filesystem::path dir)
      : tag_(std::move(tag)), dir_(std::move(dir)) {}
  std::string id() const override { return "external:" + tag_; }
  F0Reference extract(const Utterance& utt) const override;

 private:
  std::string tag_;
  std::filesystem::path dir_;
};

// Backend selection by string id:
//   "acf"                      in-tree autocorrelation tracker
//   "external:<tag>:<dir>"     adapter over precomputed contours
std::unique_ptr<PitchBackend> make_pitch_backend(const std::string& spec);

}  // namespace prosodet

#endif  // PROSODET_PITCH_HPP
