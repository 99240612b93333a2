// SPDX-License-Identifier: Apache-2.0
#include "prosodet/label_cache.hpp"

#include <cstring>
#include <fstream>

#include "prosodet/errors.hpp"

namespace prosodet {

namespace {

// 8-byte magic, last two chars carry the format version.
constexpr char kMagic[8] = {'P', 'D', 'L', 'C', 0, 0, '0', '1'};

void put_u64(std::ofstream& out, uint64_t v) {
  uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
  out.write(reinterpret_cast<char*>(b), 8);
}

uint64_t get_u64(std::ifstream& in) {
  uint8_t b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ofstream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

double get_f64(std::ifstream& in) {
  const uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void validate_label_cache(const LabelCache& cache) {
  if (cache.f0.size() != cache.vuv.size()) {
    throw DataError("label cache " + cache.utt_id + ": f0/vuv length mismatch");
  }
  for (size_t t = 0; t < cache.f0.size(); ++t) {
    if (!(cache.f0[t] >= 0.0)) {
      throw DataError("label cache " + cache.utt_id + ": negative or NaN f0 at frame " +
                      std::to_string(t));
    }
    const bool voiced = cache.f0[t] > 0.0;
    if (voiced != (cache.vuv[t] != 0)) {
      throw DataError("label cache " + cache.utt_id + ": f0/vuv inconsistent at frame " +
                      std::to_string(t));
    }
  }
  if (cache.extractor_id.empty()) {
    throw DataError("label cache " + cache.utt_id + ": empty extractor_id");
  }
}

std::filesystem::path label_cache_path(const std::filesystem::path& dir,
                                       const std::string& utt_id) {
  return dir / (utt_id + ".f0c");
}

std::filesystem::path write_label_cache(const LabelCache& cache,
                                        const std::filesystem::path& dir) {
  validate_label_cache(cache);
  std::filesystem::create_directories(dir);
  const auto final_path = label_cache_path(dir, cache.utt_id);
  const auto tmp_path = final_path.string() + ".tmp";

  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for write: " + tmp_path);
    out.write(kMagic, 8);
    put_u64(out, cache.extractor_id.size());
    out.write(cache.extractor_id.data(),
              static_cast<std::streamsize>(cache.extractor_id.size()));
    put_f64(out, cache.frame_period_ms);
    put_f64(out, cache.frame_length_ms);
    put_u64(out, cache.f0.size());
    for (double v : cache.f0) put_f64(out, v);
    out.write(reinterpret_cast<const char*>(cache.vuv.data()),
              static_cast<std::streamsize>(cache.vuv.size()));
    if (!out) throw DataError("short write: " + tmp_path);
  }
  std::filesystem::rename(tmp_path, final_path);
  return final_path;
}

bool label_cache_exists(const std::string& utt_id, const std::filesystem::path& dir) {
  return std::filesystem::exists(label_cache_path(dir, utt_id));
}

LabelCache read_label_cache(const std::string& utt_id, const std::filesystem::path& dir,
                            const std::string& expected_extractor_id) {
  const auto path = label_cache_path(dir, utt_id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing label cache entry for '" + utt_id + "' in " + dir.string());

  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError("bad magic in label cache file " + path.string());
  }

  LabelCache cache;
  cache.utt_id = utt_id;
  const uint64_t id_len = get_u64(in);
  if (id_len > 4096) throw DataError("corrupt label cache header in " + path.string());
  cache.extractor_id.resize(id_len);
  in.read(cache.extractor_id.data(), static_cast<std::streamsize>(id_len));
  cache.frame_period_ms = get_f64(in);
  cache.frame_length_ms = get_f64(in);
  const uint64_t n = get_u64(in);
  if (!in || n > (1ULL << 32)) throw DataError("corrupt label cache in " + path.string());
  cache.f0.resize(n);
  for (uint64_t t = 0; t < n; ++t) cache.f0[t] = get_f64(in);
  cache.vuv.resize(n);
  in.read(reinterpret_cast<char*>(cache.vuv.data()), static_cast<std::streamsize>(n));
  if (!in) throw DataError("truncated label cache file " + path.string());

  if (!expected_extractor_id.empty() && cache.extractor_id != expected_extractor_id) {
    throw DataError("stale label cache for '" + utt_id + "': written by '" +
                    cache.extractor_id + "', expected '" + expected_extractor_id +
                    "' (re-extract labels)");
  }
  validate_label_cache(cache);
  return cache;
}

}  // namespace prosodet
