// SPDX-License-Identifier: Apache-2.0
#include "prosodet/prosody.hpp"

#include <cmath>

#include "prosodet/errors.hpp"
#include "prosodet/log.hpp"

namespace prosodet {

std::vector<uint8_t> derive_vuv(const std::vector<double>& f0) {
  std::vector<uint8_t> vuv(f0.size());
  for (size_t t = 0; t < f0.size(); ++t) {
    if (!(f0[t] >= 0.0)) {
      throw DataError("derive_vuv: negative or NaN f0 at frame " + std::to_string(t));
    }
    vuv[t] = f0[t] > 0.0 ? 1 : 0;
  }
  return vuv;
}

SpeakerStats compute_speaker_stats(const std::string& speaker_id,
                                   const std::vector<const F0Reference*>& refs) {
  if (refs.empty()) {
    throw DataError("compute_speaker_stats: empty utterance group for speaker '" +
                    speaker_id + "'");
  }
  double sum = 0.0;
  size_t n = 0;
  for (const F0Reference* ref : refs) {
    for (size_t t = 0; t < ref->f0.size(); ++t) {
      if (ref->vuv[t]) {
        sum += ref->f0[t];
        ++n;
      }
    }
  }
  if (n == 0) {
    throw DataError("speaker '" + speaker_id + "' has no voiced frames; cannot compute stats");
  }

  SpeakerStats stats;
  stats.speaker_id = speaker_id;
  stats.n_voiced = n;
  stats.mu = sum / static_cast<double>(n);

  double ss = 0.0;
  for (const F0Reference* ref : refs) {
    for (size_t t = 0; t < ref->f0.size(); ++t) {
      if (ref->vuv[t]) {
        const double d = ref->f0[t] - stats.mu;
        ss += d * d;
      }
    }
  }
  stats.sigma = std::sqrt(ss / static_cast<double>(n));  // population std
  if (stats.sigma < kSigmaFloorHz) {
    log_warn("speaker '" + speaker_id + "': degenerate voiced-F0 std " +
             std::to_string(stats.sigma) + " Hz over " + std::to_string(n) +
             " frame(s), clamping to " + std::to_string(kSigmaFloorHz) + " Hz");
    stats.sigma = kSigmaFloorHz;
    stats.sigma_clamped = true;
  }
  return stats;
}

NormalizedF0 normalize_f0(const F0Reference& ref, const SpeakerStats& stats) {
  if (!(stats.sigma > 0.0)) {
    throw DataError("normalize_f0: sigma must be positive (speaker '" +
                    stats.speaker_id + "')");
  }
  NormalizedF0 out;
  out.values.resize(ref.f0.size());
  for (size_t t = 0; t < ref.f0.size(); ++t) {
    out.values[t] = ref.vuv[t] ? (ref.f0[t] - stats.mu) / stats.sigma : 0.0;
  }
  return out;
}

std::vector<double> denormalize_f0(const NormalizedF0& norm,
                                   const std::vector<uint8_t>& vuv,
                                   const SpeakerStats& stats) {
  if (norm.values.size() != vuv.size()) {
    throw DataError("denormalize_f0: length mismatch");
  }
  std::vector<double> f0(norm.values.size());
  for (size_t t = 0; t < f0.size(); ++t) {
    f0[t] = vuv[t] ? norm.values[t] * stats.sigma + stats.mu : 0.0;
  }
  return f0;
}

size_t adjust_lengths(size_t pred_len, size_t ref_len) {
  if (pred_len == 0 || ref_len == 0) {
    throw DataError("adjust_lengths: empty sequence (pred=" + std::to_string(pred_len) +
                    ", ref=" + std::to_string(ref_len) + ")");
  }
  return pred_len < ref_len ? pred_len : ref_len;
}

F0Reference reference_from_cache(const LabelCache& cache) {
  F0Reference ref;
  ref.f0 = cache.f0;
  ref.vuv = cache.vuv;
  ref.frame_period_ms = cache.frame_period_ms;
  ref.frame_length_ms = cache.frame_length_ms;
  return ref;
}

LabelCache cache_from_reference(const std::string& utt_id, const F0Reference& ref,
                                const std::string& extractor_id) {
  LabelCache cache;
  cache.utt_id = utt_id;
  cache.f0 = ref.f0;
  cache.vuv = ref.vuv;
  cache.frame_period_ms = ref.frame_period_ms;
  cache.frame_length_ms = ref.frame_length_ms;
  cache.extractor_id = extractor_id;
  validate_label_cache(cache);
  return cache;
}

std::string StatsTable::speaker_key_for(const std::optional<std::string>& speaker_id,
                                        const std::string& utt_id) {
  return speaker_id ? *speaker_id : "#utt:" + utt_id;
}

StatsTable StatsTable::build(
    const std::vector<std::pair<std::string, const F0Reference*>>& grouped) {
  // std::map keeps the combine order deterministic regardless of input order
  std::map<std::string, std::vector<const F0Reference*>> groups;
  for (const auto& [key, ref] : grouped) groups[key].push_back(ref);

  StatsTable table;
  for (const auto& [key, refs] : groups) {
    table.table_.emplace(key, compute_speaker_stats(key, refs));
  }
  return table;
}

const SpeakerStats& StatsTable::lookup(const std::string& key) const {
  auto it = table_.find(key);
  if (it == table_.end()) {
    throw DataError("no speaker stats for key '" + key + "'");
  }
  return it->second;
}

}  // namespace prosodet
