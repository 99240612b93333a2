// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_EVAL_HPP
#define PROSODET_EVAL_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "prosodet/manifest.hpp"
#include "prosodet/model.hpp"
#include "prosodet/spoof_head.hpp"

namespace prosodet {

struct ScoreFile {
  std::string model_id;
  std::vector<ScoreRecord> records;
};

struct EvalReport {
  std::string dataset_tag;
  size_t n_bonafide = 0;
  size_t n_spoof = 0;
  double eer_percent = 0.0;
  double threshold_at_eer = 0.0;
  double runtime_seconds = 0.0;
};

struct EerResult {
  double eer_percent = 0.0;
  double threshold = 0.0;
};

// Threshold sweep over the sorted unique scores plus one virtual
// reject-everything point. At threshold t:
//   FAR(t) = fraction of spoof scores >= t   (ties accepted)
//   FRR(t) = fraction of bonafide scores < t
// The EER is read off the FAR/FRR crossing with linear interpolation between
// the two adjacent operating points. Requires both classes present and
// finite scores.
EerResult compute_eer(const std::vector<ScoreRecord>& records);

// UTF-8 score file: '#'-prefixed header lines (model id, score convention,
// tie handling), then "utt_id\tscore" rows. Scores print with enough digits
// to round-trip exactly.
void write_score_file(const ScoreFile& scores, const std::filesystem::path& path);
ScoreFile read_score_file(const std::filesystem::path& path);

struct ScoreOptions {
  int workers = 1;
};

// Scores every utterance via encode -> aggregate -> classify -> spoof_score.
// Prosody heads are not on this path. Labels are copied from the manifest.
ScoreFile score_manifest(const Model& model, const Manifest& manifest,
                         const std::string& model_id, const ScoreOptions& opts = {});

// score_manifest + EER; every manifest entry must be labeled.
std::pair<ScoreFile, EvalReport> evaluate(const Model& model, const Manifest& manifest,
                                          const std::string& model_id,
                                          const ScoreOptions& opts = {});

std::string format_report(const EvalReport& report);
void write_report_json(const EvalReport& report, const std::filesystem::path& path);

}  // namespace prosodet

#endif  // PROSODET_EVAL_HPP
