#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisecal/denoiser.hpp"
#include "noisecal/errors.hpp"
#include "noisecal/vio.hpp"

namespace noisecal {

/// Empirical denoiser over a frame directory: every frame is one component
/// of shape (1, C, H, W) with weight 1/F and the given variance.
inline GmmDenoiser load_dataset_denoiser(const std::filesystem::path& dir, double variance = 0.0) {
  const VideoTensor video = vio::read_video(dir);
  const Shape fs = video.shape().frame_shape();
  std::vector<VideoTensor> samples;
  samples.reserve(video.shape().frames);
  for (std::size_t f = 0; f < video.shape().frames; ++f) {
    const auto v = video.frame(f);
    samples.emplace_back(fs, std::vector<double>(v.begin(), v.end()));
  }
  return GmmDenoiser::empirical(samples, variance);
}

/// Mixture from a JSON spec:
///   {"components": [{"weight": 0.5, "mean": "mu0.vnt", "variance": 0.01}, ...]}
/// Mean paths are VNT1 files relative to the spec's directory.
inline GmmDenoiser load_gmm_spec(const std::filesystem::path& spec_path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(vio::read_file(spec_path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(spec_path.string() + ": " + e.what());
  }
  if (!doc.is_object() || doc.size() != 1 || !doc.contains("components") || !doc["components"].is_array()) {
    throw ConfigError(spec_path.string() + ": expected an object with a single \"components\" array");
  }
  std::vector<GmmComponent> comps;
  for (const auto& c : doc["components"]) {
    if (!c.is_object()) throw ConfigError(spec_path.string() + ": components must be objects");
    for (const auto& [key, value] : c.items()) {
      if (key != "weight" && key != "mean" && key != "variance") {
        throw ConfigError(spec_path.string() + ": unknown component key \"" + key + "\"");
      }
    }
    if (!c.contains("mean") || !c["mean"].is_string()) throw ConfigError(spec_path.string() + ": component needs a \"mean\" path");
    double weight = 1.0;
    double variance = 0.0;
    try {
      if (c.contains("weight")) weight = c["weight"].get<double>();
      if (c.contains("variance")) variance = c["variance"].get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(spec_path.string() + ": " + e.what());
    }
    comps.push_back({weight, vio::read_tensor(spec_path.parent_path() / c["mean"].get<std::string>()), variance});
  }
  return GmmDenoiser(std::move(comps));
}

} // namespace noisecal
