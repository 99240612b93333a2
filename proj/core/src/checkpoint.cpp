// SPDX-License-Identifier: Apache-2.0
#include "prosodet/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "prosodet/errors.hpp"

namespace prosodet {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "prosodet-ckpt";
constexpr int kVersion = 1;

json encoder_to_json(const EncoderConfig& c) {
  json frontend = json::array();
  for (const auto& conv : c.conv_frontend) {
    frontend.push_back({{"kernel", conv.kernel},
                        {"stride", conv.stride},
                        {"channels", conv.channels}});
  }
  return json{{"n_layers", c.n_layers},     {"d_model", c.d_model},
              {"n_heads", c.n_heads},       {"mlp_hidden", c.mlp_hidden},
              {"conv_frontend", frontend},  {"frame_period_ms", c.frame_period_ms}};
}

EncoderConfig encoder_from_json(const json& j) {
  EncoderConfig c;
  c.n_layers = j.at("n_layers").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.mlp_hidden = j.at("mlp_hidden").get<int>();
  for (const auto& conv : j.at("conv_frontend")) {
    c.conv_frontend.push_back({conv.at("kernel").get<int>(), conv.at("stride").get<int>(),
                               conv.at("channels").get<int>()});
  }
  c.frame_period_ms = j.at("frame_period_ms").get<int>();
  return c;
}

json promtl_to_json(const ProMTLConfig& c) {
  return json{{"in_dim", c.in_dim},
              {"proj_dim", c.proj_dim},
              {"recurrent_hidden", c.recurrent_hidden},
              {"lambda_vuv", c.lambda_vuv}};
}

ProMTLConfig promtl_from_json(const json& j) {
  ProMTLConfig c;
  c.in_dim = j.at("in_dim").get<int>();
  c.proj_dim = j.at("proj_dim").get<int>();
  c.recurrent_hidden = j.at("recurrent_hidden").get<int>();
  c.lambda_vuv = j.at("lambda_vuv").get<double>();
  return c;
}

json classifier_to_json(const SpoofClassifierConfig& c) {
  return json{{"in_dim", c.in_dim}, {"pooling", c.pooling},
              {"w_bonafide", c.w_bonafide}, {"w_spoof", c.w_spoof},
              {"alpha", c.alpha},   {"beta", c.beta}};
}

SpoofClassifierConfig classifier_from_json(const json& j) {
  SpoofClassifierConfig c;
  c.in_dim = j.at("in_dim").get<int>();
  c.pooling = j.at("pooling").get<std::string>();
  c.w_bonafide = j.at("w_bonafide").get<double>();
  c.w_spoof = j.at("w_spoof").get<double>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  return c;
}

bool in_namespace(const std::string& name, const std::string& ns) {
  return name.rfind(ns + ".", 0) == 0;
}

}  // namespace

bool Checkpoint::has_namespace(const std::string& ns) const {
  for (const auto& [name, mat] : params) {
    if (in_namespace(name, ns)) return true;
  }
  return false;
}

Checkpoint Checkpoint::without_namespace(const std::string& ns) const {
  Checkpoint out;
  out.config = config;
  out.meta = meta;
  for (const auto& [name, mat] : params) {
    if (!in_namespace(name, ns)) out.params.emplace(name, mat);
  }
  return out;
}

Checkpoint Checkpoint::from_model(Model& model, const std::vector<std::string>& namespaces) {
  Checkpoint ckpt;
  ckpt.config = model.config();
  model.visit_params([&](nn::Parameter& p) {
    for (const auto& ns : namespaces) {
      if (in_namespace(p.name, ns)) {
        ckpt.params.emplace(p.name, p.value);
        return;
      }
    }
  });
  return ckpt;
}

void Checkpoint::restore_into(Model& model) const {
  if (!(model.config() == config)) {
    throw DataError("checkpoint config mismatch: refusing to restore into a model with a "
                    "different architecture");
  }
  size_t restored = 0;
  model.visit_params([&](nn::Parameter& p) {
    auto it = params.find(p.name);
    if (it == params.end()) return;
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols()) {
      throw DataError("checkpoint parameter '" + p.name + "' has shape " +
                      std::to_string(it->second.rows()) + "x" +
                      std::to_string(it->second.cols()) + ", model expects " +
                      std::to_string(p.value.rows()) + "x" + std::to_string(p.value.cols()));
    }
    p.value = it->second;
    ++restored;
  });
  if (restored != params.size()) {
    throw DataError("checkpoint holds " + std::to_string(params.size()) +
                    " parameters but only " + std::to_string(restored) +
                    " matched the model");
  }
}

void Checkpoint::save(const std::filesystem::path& path) const {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["config"] = {{"encoder", encoder_to_json(config.encoder)},
                 {"promtl", promtl_to_json(config.promtl)},
                 {"classifier", classifier_to_json(config.classifier)}};
  j["meta"] = meta;
  json jp = json::object();
  for (const auto& [name, mat] : params) {
    std::vector<double> data(static_cast<size_t>(mat.size()));
    for (Eigen::Index i = 0; i < mat.size(); ++i) data[static_cast<size_t>(i)] = mat(i);
    jp[name] = {{"rows", mat.rows()}, {"cols", mat.cols()}, {"data", std::move(data)}};
  }
  j["params"] = std::move(jp);

  const std::vector<uint8_t> bytes = json::to_msgpack(j);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open checkpoint for write: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write: " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::from_msgpack(bytes);
  } catch (const std::exception& e) {
    throw DataError("unreadable checkpoint " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != kFormat) {
    throw DataError("not a prosodet checkpoint: " + path.string());
  }
  if (j.value("version", -1) != kVersion) {
    throw DataError("unsupported checkpoint version in " + path.string());
  }

  Checkpoint ckpt;
  const json& jc = j.at("config");
  ckpt.config.encoder = encoder_from_json(jc.at("encoder"));
  ckpt.config.promtl = promtl_from_json(jc.at("promtl"));
  ckpt.config.classifier = classifier_from_json(jc.at("classifier"));
  if (j.contains("meta")) {
    for (const auto& [k, v] : j.at("meta").items()) {
      ckpt.meta[k] = v.get<std::string>();
    }
  }
  for (const auto& [name, pj] : j.at("params").items()) {
    const Eigen::Index rows = pj.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = pj.at("cols").get<Eigen::Index>();
    const auto data = pj.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
      throw DataError("corrupt parameter '" + name + "' in " + path.string());
    }
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = data[static_cast<size_t>(i)];
    ckpt.params.emplace(name, std::move(m));
  }
  return ckpt;
}

}  // namespace prosodet
