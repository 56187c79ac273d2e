#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "scenemotion/core/error.hpp"
#include "scenemotion/nn/cvae.hpp"

namespace scenemotion::nn {

// Checkpoint layout (JSON):
// {
//   "format": "scenemotion-cvae", "version": 1, "kind": "...",
//   "input_dim": n, "condition_dim": n, "latent_dim": n,
//   "basis_seed": u64 | null, "basis_size": n,
//   "condition_encoder" | "encoder" | "decoder": [
//     {"rows": r, "cols": c, "activation": "relu", "weights": [r*c, row-major], "bias": [c]}, ...
//   ]
// }
// Doubles are written in shortest round-trip form, so save/load is lossless.

inline constexpr const char* kCheckpointFormat = "scenemotion-cvae";
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json layers_to_json(const std::vector<DenseLayer>& layers) {
  nlohmann::json arr = nlohmann::json::array();
  for (const DenseLayer& L : layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(L.weights.size()));
    for (Eigen::Index r = 0; r < L.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < L.weights.cols(); ++c) w.push_back(L.weights(r, c));
    }
    arr.push_back({{"rows", L.weights.rows()},
                   {"cols", L.weights.cols()},
                   {"activation", std::string(to_string(L.activation))},
                   {"weights", w},
                   {"bias", std::vector<double>(L.bias.data(), L.bias.data() + L.bias.size())}});
  }
  return arr;
}

inline std::vector<DenseLayer> layers_from_json(const nlohmann::json& arr, const std::string& where) {
  if (!arr.is_array()) throw Error(ErrorKind::kConfig, "checkpoint: " + where + " must be an array");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < arr.size(); ++l) {
    const auto& j = arr[l];
    const std::string path = where + "[" + std::to_string(l) + "]";
    try {
      auto rows = j.at("rows").get<Eigen::Index>();
      auto cols = j.at("cols").get<Eigen::Index>();
      auto w = j.at("weights").get<std::vector<double>>();
      auto b = j.at("bias").get<std::vector<double>>();
      if (rows < 1 || cols < 1 || static_cast<Eigen::Index>(w.size()) != rows * cols ||
          static_cast<Eigen::Index>(b.size()) != cols) {
        throw Error(ErrorKind::kDimension, "checkpoint: " + path + " has inconsistent sizes");
      }
      DenseLayer L{Matrix(rows, cols), RowVector(cols), activation_from_string(j.at("activation").get<std::string>())};
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) L.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      }
      for (Eigen::Index c = 0; c < cols; ++c) L.bias(c) = b[static_cast<std::size_t>(c)];
      layers.push_back(std::move(L));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kConfig, "checkpoint: " + path + ": " + e.what());
    }
  }
  return layers;
}

inline nlohmann::json to_json(const CvaeModel& m) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["kind"] = m.kind;
  j["input_dim"] = m.input_dim;
  j["condition_dim"] = m.condition_dim;
  j["latent_dim"] = m.latent_dim;
  j["basis_seed"] = m.basis_seed ? nlohmann::json(*m.basis_seed) : nlohmann::json(nullptr);
  j["basis_size"] = m.basis_size;
  j["condition_encoder"] = layers_to_json(m.condition_encoder);
  j["encoder"] = layers_to_json(m.encoder);
  j["decoder"] = layers_to_json(m.decoder);
  return j;
}

inline CvaeModel cvae_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw Error(ErrorKind::kConfig, "checkpoint: unknown format");
    if (j.at("version").get<int>() != kCheckpointVersion) throw Error(ErrorKind::kConfig, "checkpoint: unsupported version");
    CvaeModel m;
    m.kind = j.at("kind").get<std::string>();
    m.input_dim = j.at("input_dim").get<int>();
    m.condition_dim = j.at("condition_dim").get<int>();
    m.latent_dim = j.at("latent_dim").get<int>();
    if (!j.at("basis_seed").is_null()) m.basis_seed = j.at("basis_seed").get<std::uint64_t>();
    m.basis_size = j.at("basis_size").get<std::size_t>();
    m.condition_encoder = layers_from_json(j.at("condition_encoder"), "condition_encoder");
    m.encoder = layers_from_json(j.at("encoder"), "encoder");
    m.decoder = layers_from_json(j.at("decoder"), "decoder");
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const CvaeModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kConfig, "cannot write checkpoint " + path.string());
  out << to_json(m).dump() << '\n';
  if (!out) throw Error(ErrorKind::kConfig, "failed writing checkpoint " + path.string());
}

inline CvaeModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, "checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return cvae_from_json(j);
}

}  // namespace scenemotion::nn
