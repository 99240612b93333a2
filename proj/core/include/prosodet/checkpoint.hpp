// SPDX-License-Identifier: Apache-2.0
#ifndef PROSODET_CHECKPOINT_HPP
#define PROSODET_CHECKPOINT_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "prosodet/model.hpp"

namespace prosodet {

// Versioned checkpoint container: model config plus named parameter arrays,
// serialized as MessagePack (doubles survive bit-exactly). Parameter names
// are namespaced "backbone.", "promtl.", "classifier.". Stage-1 checkpoints
// carry no classifier namespace.
struct Checkpoint {
  ModelConfig config;
  std::map<std::string, Mat> params;
  std::map<std::string, std::string> meta;  // free-form provenance (stage, epoch, ...)

  bool has_namespace(const std::string& ns) const;
  Checkpoint without_namespace(const std::string& ns) const;

  static Checkpoint from_model(Model& model,
                               const std::vector<std::string>& namespaces = {
                                   "backbone", "promtl", "classifier"});

  // Loads every stored parameter into the model; fails loudly on config or
  // shape mismatch. Namespaces absent from the checkpoint are left as-is in
  // the model (classifier after stage 1, prosody head after stripping).
  void restore_into(Model& model) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace prosodet

#endif  // PROSODET_CHECKPOINT_HPP
