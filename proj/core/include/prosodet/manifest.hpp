// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_MANIFEST_HPP
#define PROSODET_MANIFEST_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace prosodet {

enum class Label { Bonafide, Spoof, Unlabeled };

std::string label_name(Label label);
Label parse_label(const std::string& token);  // "bonafide" | "spoof" | "-"

struct ManifestEntry {
  std::string utt_id;
  std::filesystem::path audio_path;
  std::optional<std::string> speaker_id;  // "-" in the file means absent
  Label label = Label::Unlabeled;
  std::string dataset_tag;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  size_t count(Label label) const;
};

// Tab-separated, one entry per line:
//   utt_id \t audio_path \t speaker_id \t label \t dataset_tag
// Relative audio paths resolve against the manifest's directory. All parse
// problems, duplicate utt_ids and missing audio files are collected and
// reported together in one DataError.
Manifest load_manifest(const std::filesystem::path& path, bool check_audio_exists = true);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace prosodet

#endif  // PROSODET_MANIFEST_HPP
