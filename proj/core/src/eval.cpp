// SPDX-License-Identifier: Apache-2.0
#include "prosodet/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "prosodet/errors.hpp"
#include "prosodet/utterance.hpp"

namespace prosodet {

EerResult compute_eer(const std::vector<ScoreRecord>& records) {
  size_t n_bona = 0, n_spoof = 0;
  for (const auto& r : records) {
    if (!std::isfinite(r.score)) {
      throw DataError("compute_eer: non-finite score for '" + r.utt_id + "'");
    }
    if (r.label == Label::Bonafide) ++n_bona;
    else if (r.label == Label::Spoof) ++n_spoof;
    else throw DataError("compute_eer: unlabeled record '" + r.utt_id + "'");
  }
  if (n_bona == 0 || n_spoof == 0) {
    throw DataError("compute_eer: need at least one bonafide and one spoof record");
  }

  std::vector<double> thresholds;
  thresholds.reserve(records.size());
  for (const auto& r : records) thresholds.push_back(r.score);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  // sorted copies per class for O(log n) counting
  std::vector<double> bona, spoof;
  for (const auto& r : records) {
    (r.label == Label::Bonafide ? bona : spoof).push_back(r.score);
  }
  std::sort(bona.begin(), bona.end());
  std::sort(spoof.begin(), spoof.end());

  auto far_at = [&](double t) {
    // spoof accepted: score >= t
    const auto it = std::lower_bound(spoof.begin(), spoof.end(), t);
    return static_cast<double>(spoof.end() - it) / static_cast<double>(n_spoof);
  };
  auto frr_at = [&](double t) {
    // bonafide rejected: score < t
    const auto it = std::lower_bound(bona.begin(), bona.end(), t);
    return static_cast<double>(it - bona.begin()) / static_cast<double>(n_bona);
  };

  // operating points: every unique score, then one virtual point above the
  // maximum where everything is rejected (FAR 0, FRR 1)
  const size_t m = thresholds.size();
  auto point = [&](size_t i) -> std::pair<double, double> {
    if (i == m) return {0.0, 1.0};
    return {far_at(thresholds[i]), frr_at(thresholds[i])};
  };
  auto threshold_of = [&](size_t i) { return i == m ? thresholds[m - 1] + 1.0 : thresholds[i]; };

  // FAR - FRR is non-increasing, starts at +1; find the first point at or
  // below zero and interpolate within the segment entering it
  EerResult result;
  for (size_t i = 0; i <= m; ++i) {
    const auto [far_i, frr_i] = point(i);
    const double d = far_i - frr_i;
    if (d > 0.0) continue;
    if (d == 0.0 || i == 0) {
      result.eer_percent = far_i * 100.0;
      result.threshold = threshold_of(i);
      return result;
    }
    const auto [far_p, frr_p] = point(i - 1);
    const double d_prev = far_p - frr_p;
    const double s = d_prev / (d_prev - d);
    result.eer_percent = (far_p + s * (far_i - far_p)) * 100.0;
    result.threshold = threshold_of(i - 1) + s * (threshold_of(i) - threshold_of(i - 1));
    return result;
  }
  throw NumericalError("compute_eer: no FAR/FRR crossing found");
}

namespace {

std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_score_file(const ScoreFile& scores, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open score file for write: " + path.string());
  out << "# model: " << scores.model_id << "\n";
  out << "# convention: higher=bonafide (score = bonafide logit - spoof logit)\n";
  out << "# ties: scores equal to a threshold count as accepted\n";
  for (const auto& r : scores.records) {
    if (!std::isfinite(r.score)) {
      throw DataError("refusing to write non-finite score for '" + r.utt_id + "'");
    }
    out << r.utt_id << '\t' << format_score(r.score) << '\n';
  }
  if (!out) throw DataError("short write: " + path.string());
}

ScoreFile read_score_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score file: " + path.string());
  ScoreFile scores;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string model_prefix = "# model: ";
      if (line.rfind(model_prefix, 0) == 0) scores.model_id = line.substr(model_prefix.size());
      continue;
    }
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("score file " + path.string() + ":" + std::to_string(line_no) +
                      ": expected utt_id<TAB>score");
    }
    ScoreRecord rec;
    rec.utt_id = line.substr(0, tab);
    try {
      rec.score = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError("score file " + path.string() + ":" + std::to_string(line_no) +
                      ": unparseable score");
    }
    scores.records.push_back(std::move(rec));
  }
  return scores;
}

ScoreFile score_manifest(const Model& model, const Manifest& manifest,
                         const std::string& model_id, const ScoreOptions& opts) {
  if (manifest.empty()) throw DataError("cannot score an empty manifest");
  ScoreFile scores;
  scores.model_id = model_id;
  scores.records.resize(manifest.size());

  const int workers = std::max(1, opts.workers);
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= manifest.size() || failed.load()) break;
      try {
        const ManifestEntry& entry = manifest.entries[i];
        Utterance utt = load_utterance(entry);
        ScoreRecord rec;
        rec.utt_id = entry.utt_id;
        rec.label = entry.label;
        rec.score = model.score_utterance(utt);
        scores.records[i] = std::move(rec);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw DataError("scoring failed: " + first_error);
  return scores;
}

std::pair<ScoreFile, EvalReport> evaluate(const Model& model, const Manifest& manifest,
                                          const std::string& model_id,
                                          const ScoreOptions& opts) {
  for (const auto& e : manifest.entries) {
    if (e.label == Label::Unlabeled) {
      throw DataError("evaluate requires a labeled manifest but '" + e.utt_id +
                      "' is unlabeled; use score mode instead");
    }
  }
  const auto start = std::chrono::steady_clock::now();
  ScoreFile scores = score_manifest(model, manifest, model_id, opts);

  EvalReport report;
  std::set<std::string> tags;
  for (const auto& e : manifest.entries) tags.insert(e.dataset_tag);
  report.dataset_tag = tags.size() == 1 ? *tags.begin() : "mixed";
  report.n_bonafide = manifest.count(Label::Bonafide);
  report.n_spoof = manifest.count(Label::Spoof);
  const EerResult eer = compute_eer(scores.records);
  report.eer_percent = eer.eer_percent;
  report.threshold_at_eer = eer.threshold;
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(scores), report};
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  os << "dataset: " << report.dataset_tag << "\n"
     << "bonafide: " << report.n_bonafide << "\n"
     << "spoof: " << report.n_spoof << "\n"
     << "eer_percent: " << report.eer_percent << "\n"
     << "threshold_at_eer: " << report.threshold_at_eer << "\n"
     << "runtime_seconds: " << report.runtime_seconds << "\n";
  return os.str();
}

void write_report_json(const EvalReport& report, const std::filesystem::path& path) {
  nlohmann::json j{{"dataset_tag", report.dataset_tag},
                   {"n_bonafide", report.n_bonafide},
                   {"n_spoof", report.n_spoof},
                   {"eer_percent", report.eer_percent},
                   {"threshold_at_eer", report.threshold_at_eer},
                   {"runtime_seconds", report.runtime_seconds}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write report: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace prosodet
