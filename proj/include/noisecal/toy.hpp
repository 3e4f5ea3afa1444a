#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "noisecal/denoiser.hpp"
#include "noisecal/frequency.hpp"
#include "noisecal/rng.hpp"
#include "noisecal/tensor.hpp"

namespace noisecal::toy {

/// Desk-scale stand-in for a video enhancement benchmark: a dataset of clean
/// textured frames (the "training distribution" of an empirical denoiser) and
/// degraded reference videos drawn from the same scene family.
struct ToyConfig {
  std::size_t channels = 3;
  std::size_t height = 22;
  std::size_t width = 22;
  std::size_t frames = 2;          // frames per reference video
  std::size_t dataset_size = 16;   // frames in the denoiser's dataset
  int smooth_waves = 6;            // low-frequency structure per scene
  int texture_waves = 4;           // high-frequency detail per scene
  double degrade_nu = 0.35;        // references keep only this band ...
  double degrade_noise = 0.02;     // ... plus a little sensor noise
};

namespace detail {

/// Uniform in [0, 1) from a counter-based draw.
inline double uniform(const RngSeed& rng, std::uint64_t i) {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32),
                                static_cast<std::uint32_t>(rng.stream_id),
                                static_cast<std::uint32_t>(rng.stream_id >> 32)};
  const auto out = Philox4x32::generate(ctr, {static_cast<std::uint32_t>(rng.seed),
                                              static_cast<std::uint32_t>(rng.seed >> 32)});
  return static_cast<double>(((std::uint64_t{out[0]} << 32) | out[1]) >> 11) * 0x1.0p-53;
}

struct Wave {
  double ky, kx, phase, amplitude;
  std::size_t channel_mix; // which channel gets the strongest response
};

} // namespace detail

/// One clean scene frame (1, C, H, W) with values in [0, 1]; `shift` moves the
/// content horizontally to make consecutive frames of a clip.
inline VideoTensor scene_frame(const ToyConfig& cfg, const RngSeed& rng, double shift = 0.0) {
  std::vector<detail::Wave> waves;
  std::uint64_t k = 0;
  auto u = [&] { return detail::uniform(rng, k++); };
  const double pi = std::numbers::pi;
  for (int i = 0; i < cfg.smooth_waves + cfg.texture_waves; ++i) {
    const bool smooth = i < cfg.smooth_waves;
    const double fmax = smooth ? 3.0 : 12.0;
    const double fmin = smooth ? 0.5 : 7.0;
    const double f = fmin + (fmax - fmin) * u();
    const double angle = 2.0 * pi * u();
    waves.push_back({f * std::sin(angle), f * std::cos(angle), 2.0 * pi * u(), smooth ? 0.16 : 0.06,
                     static_cast<std::size_t>(u() * static_cast<double>(cfg.channels))});
  }
  const double base = 0.35 + 0.3 * u();
  Shape shape{1, cfg.channels, cfg.height, cfg.width};
  std::vector<double> data(shape.size());
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    for (std::size_t h = 0; h < cfg.height; ++h) {
      for (std::size_t w = 0; w < cfg.width; ++w) {
        double v = base;
        for (const auto& wave : waves) {
          const double gain = wave.channel_mix == c ? 1.0 : 0.6;
          const double y = static_cast<double>(h) / static_cast<double>(cfg.height);
          const double x = (static_cast<double>(w) + shift) / static_cast<double>(cfg.width);
          v += gain * wave.amplitude * std::cos(2.0 * pi * (wave.ky * y + wave.kx * x) + wave.phase);
        }
        data[(c * cfg.height + h) * cfg.width + w] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return {shape, std::move(data)};
}

/// Dataset frames: scene i is drawn from stream rng.substream(i).
inline std::vector<VideoTensor> dataset(const ToyConfig& cfg, const RngSeed& rng) {
  std::vector<VideoTensor> out;
  for (std::size_t i = 0; i < cfg.dataset_size; ++i) out.push_back(scene_frame(cfg, rng.substream(i)));
  return out;
}

inline GmmDenoiser dataset_denoiser(const ToyConfig& cfg, const RngSeed& rng) {
  return GmmDenoiser::empirical(dataset(cfg, rng));
}

/// Clean clip (F, C, H, W) of one scene panning by one pixel per frame.
inline VideoTensor clean_clip(const ToyConfig& cfg, const RngSeed& scene) {
  Shape shape{cfg.frames, cfg.channels, cfg.height, cfg.width};
  std::vector<double> data;
  data.reserve(shape.size());
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    const VideoTensor frame = scene_frame(cfg, scene, static_cast<double>(f));
    data.insert(data.end(), frame.values().begin(), frame.values().end());
  }
  return {shape, std::move(data)};
}

/// Low-quality version of a clip: detail band removed, light Gaussian noise
/// added, clamped to [0, 1].
inline VideoTensor degrade(const ToyConfig& cfg, const VideoTensor& clean, const RngSeed& noise) {
  const VideoTensor blurred = low_pass(clean, cfg.degrade_nu);
  return map(axpy(1.0, blurred, cfg.degrade_noise, gaussian_noise(clean.shape(), noise)),
             [](double v) { return std::clamp(v, 0.0, 1.0); });
}

/// One benchmark case: a dataset denoiser and a degraded clip of one of its
/// scenes. Frame 0 of the clean clip is the dataset frame itself; later
/// frames are panned and lie off the dataset.
struct ToyCase {
  GmmDenoiser denoiser;
  VideoTensor clean;
  VideoTensor reference;
  std::size_t scene = 0;
};

inline ToyCase make_case(const ToyConfig& cfg, const RngSeed& rng) {
  const RngSeed scenes = rng.substream(0);
  const auto scene = static_cast<std::size_t>(detail::uniform(rng.substream(1), 0) *
                                              static_cast<double>(cfg.dataset_size));
  VideoTensor clean = clean_clip(cfg, scenes.substream(scene));
  VideoTensor reference = degrade(cfg, clean, rng.substream(2));
  return {dataset_denoiser(cfg, scenes), std::move(clean), std::move(reference), scene};
}

} // namespace noisecal::toy
