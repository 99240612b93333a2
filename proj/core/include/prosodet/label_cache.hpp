// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_LABEL_CACHE_HPP
#define PROSODET_LABEL_CACHE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace prosodet {

// Per-utterance prosody labels persisted to disk, one file per utterance,
// keyed by (utt_id, extractor_id). f0 survives the round trip bit-exactly.
struct LabelCache {
  std::string utt_id;
  std::vector<double> f0;       // Hz, 0 on unvoiced frames
  std::vector<uint8_t> vuv;     // 0/1, consistent with f0
  double frame_period_ms = 20.0;
  double frame_length_ms = 25.0;
  std::string extractor_id;
};

// f0[t] == 0 <=> vuv[t] == 0, equal lengths, f0 >= 0. Throws DataError.
void validate_label_cache(const LabelCache& cache);

std::filesystem::path label_cache_path(const std::filesystem::path& dir,
                                       const std::string& utt_id);

// Atomic (temp file + rename). Returns the final path.
std::filesystem::path write_label_cache(const LabelCache& cache,
                                        const std::filesystem::path& dir);

bool label_cache_exists(const std::string& utt_id, const std::filesystem::path& dir);

// Throws DataError if missing; if expected_extractor_id is non-empty and the
// stored id differs, throws DataError marking the cache as stale.
LabelCache read_label_cache(const std::string& utt_id, const std::filesystem::path& dir,
                            const std::string& expected_extractor_id = "");

}  // namespace prosodet

#endif  // PROSODET_LABEL_CACHE_HPP
