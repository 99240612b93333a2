// SPDX-License-Identifier: Apache-2.0
#include "prosodet/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "prosodet/errors.hpp"
#include "prosodet/log.hpp"

namespace prosodet {

std::string label_name(Label label) {
  switch (label) {
    case Label::Bonafide: return "bonafide";
    case Label::Spoof: return "spoof";
    case Label::Unlabeled: return "-";
  }
  return "-";
}

Label parse_label(const std::string& token) {
  if (token == "bonafide") return Label::Bonafide;
  if (token == "spoof") return Label::Spoof;
  if (token == "-") return Label::Unlabeled;
  throw DataError("unknown label '" + token + "' (expected bonafide, spoof or -)");
}

size_t Manifest::count(Label label) const {
  size_t n = 0;
  for (const auto& e : entries)
    if (e.label == label) ++n;
  return n;
}

namespace {

bool valid_utt_id(const std::string& id) {
  if (id.empty()) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path, bool check_audio_exists) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path.string());

  const std::filesystem::path base = path.has_parent_path()
                                         ? path.parent_path()
                                         : std::filesystem::path(".");

  Manifest manifest;
  std::vector<std::string> problems;
  std::unordered_map<std::string, int> first_line_of;  // utt_id -> line number

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      const size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 5) {
      problems.push_back("line " + std::to_string(line_no) + ": expected 5 tab-separated fields, got " +
                         std::to_string(fields.size()));
      continue;
    }

    ManifestEntry entry;
    entry.utt_id = fields[0];
    if (!valid_utt_id(entry.utt_id)) {
      problems.push_back("line " + std::to_string(line_no) +
                         ": utt_id must be non-empty [A-Za-z0-9_.-]: '" + fields[0] + "'");
      continue;
    }

    std::filesystem::path audio(fields[1]);
    entry.audio_path = audio.is_absolute() ? audio : base / audio;
    entry.speaker_id = (fields[2] == "-") ? std::nullopt : std::make_optional(fields[2]);
    try {
      entry.label = parse_label(fields[3]);
    } catch (const DataError& e) {
      problems.push_back("line " + std::to_string(line_no) + ": " + e.what());
      continue;
    }
    entry.dataset_tag = fields[4];

    auto [it, inserted] = first_line_of.emplace(entry.utt_id, line_no);
    if (!inserted) {
      problems.push_back("duplicate utt_id '" + entry.utt_id + "' on lines " +
                         std::to_string(it->second) + " and " + std::to_string(line_no));
      continue;
    }
    if (check_audio_exists && !std::filesystem::exists(entry.audio_path)) {
      problems.push_back("line " + std::to_string(line_no) + ": missing audio file " +
                         entry.audio_path.string());
      continue;
    }
    manifest.entries.push_back(std::move(entry));
  }

  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "manifest " << path.string() << " has " << problems.size() << " problem(s):";
    for (const auto& p : problems) msg << "\n  " << p;
    throw DataError(msg.str());
  }
  if (manifest.empty()) {
    log_warn("manifest is empty: " + path.string());
  }
  return manifest;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open manifest for write: " + path.string());
  for (const auto& e : manifest.entries) {
    out << e.utt_id << '\t' << e.audio_path.string() << '\t'
        << (e.speaker_id ? *e.speaker_id : "-") << '\t' << label_name(e.label) << '\t'
        << e.dataset_tag << '\n';
  }
  if (!out) throw DataError("short write: " + path.string());
}

}  // namespace prosodet
