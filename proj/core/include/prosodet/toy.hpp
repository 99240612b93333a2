// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_TOY_HPP
#define PROSODET_TOY_HPP

#include <filesystem>
#include <string>

#include "prosodet/manifest.hpp"

namespace prosodet {

// Synthetic two-class corpus. Both classes share the same harmonic recipe,
// amplitude envelopes, pauses and noise floor; they differ only in pitch
// dynamics. "real" contours carry vibrato, jitter and a slow random walk;
// "spoof" contours are the same utterance plans with the pitch flattened to
// a quantized, micro-variation-free grid.
struct ToyCorpusConfig {
  std::filesystem::path out_dir;
  int n_train = 200;  // split evenly between classes
  int n_dev = 60;
  int n_eval = 100;
  int n_speakers = 20;
  uint64_t seed = 7;
  // Confusable profile for ablation studies: pitch stays quantized but keeps
  // the same mean and range as the real class, so class separation rests on
  // micro-dynamics alone.
  bool confusable = false;
};

struct ToyCorpusPaths {
  std::filesystem::path train_manifest;        // both classes
  std::filesystem::path dev_manifest;          // both classes
  std::filesystem::path eval_manifest;         // both classes
  std::filesystem::path stage1_train_manifest; // real-only train subset
  std::filesystem::path stage1_dev_manifest;   // real-only dev subset
};

ToyCorpusPaths make_toy_corpus(const ToyCorpusConfig& cfg);

}  // namespace prosodet

#endif  // PROSODET_TOY_HPP
