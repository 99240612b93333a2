// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_PROSODY_HPP
#define PROSODET_PROSODY_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prosodet/label_cache.hpp"

namespace prosodet {

// Frame-level pitch contour with derived voicing labels. f0[t] == 0 exactly
// on unvoiced frames; 25 ms window / 20 ms hop framing.
struct F0Reference {
  std::vector<double> f0;
  std::vector<uint8_t> vuv;
  double frame_length_ms = 25.0;
  double frame_period_ms = 20.0;

  size_t frames() const { return f0.size(); }
};

// Voiced-frame mean and population std for one speaker, pooled across all of
// the speaker's utterances in the current manifest.
struct SpeakerStats {
  std::string speaker_id;
  double mu = 0.0;
  double sigma = 1.0;
  size_t n_voiced = 0;
  bool sigma_clamped = false;
};

// Dimensionless z-scores on voiced frames, exact 0 on unvoiced frames.
struct NormalizedF0 {
  std::vector<double> values;
};

// Population sigma below this is treated as degenerate and clamped.
inline constexpr double kSigmaFloorHz = 1.0;

// 0 where f0 == 0, 1 where f0 > 0; negative input is invalid.
std::vector<uint8_t> derive_vuv(const std::vector<double>& f0);

// mu/sigma over the pooled voiced frames; throws DataError when the pool has
// no voiced frames at all.
SpeakerStats compute_speaker_stats(const std::string& speaker_id,
                                   const std::vector<const F0Reference*>& refs);

NormalizedF0 normalize_f0(const F0Reference& ref, const SpeakerStats& stats);

// Inverse affine map on voiced frames; unvoiced frames stay 0.
std::vector<double> denormalize_f0(const NormalizedF0& norm,
                                   const std::vector<uint8_t>& vuv,
                                   const SpeakerStats& stats);

// min(pred_len, ref_len); callers keep the leading frames. Zero-length input
// is an error.
size_t adjust_lengths(size_t pred_len, size_t ref_len);

F0Reference reference_from_cache(const LabelCache& cache);
LabelCache cache_from_reference(const std::string& utt_id, const F0Reference& ref,
                                const std::string& extractor_id);

// Speaker-stats lookup for a whole manifest. Utterances whose entry has no
// speaker_id get per-utterance stats under a reserved key so normalization
// stays applicable (the "#utt:" prefix cannot collide with manifest speaker
// ids, which never contain ':').
class StatsTable {
 public:
  // grouped: (speaker key, reference). Use speaker_key_for() to build keys.
  static StatsTable build(const std::vector<std::pair<std::string, const F0Reference*>>& grouped);

  static std::string speaker_key_for(const std::optional<std::string>& speaker_id,
                                     const std::string& utt_id);

  const SpeakerStats& lookup(const std::string& key) const;
  bool contains(const std::string& key) const { return table_.count(key) > 0; }
  size_t size() const { return table_.size(); }
  const std::map<std::string, SpeakerStats>& all() const { return table_; }

 private:
  std::map<std::string, SpeakerStats> table_;
};

}  // namespace prosodet

#endif  // PROSODET_PROSODY_HPP
