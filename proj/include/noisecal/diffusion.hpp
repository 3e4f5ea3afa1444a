#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "noisecal/denoiser.hpp"
#include "noisecal/errors.hpp"
#include "noisecal/rng.hpp"
#include "noisecal/schedule.hpp"
#include "noisecal/tensor.hpp"

namespace noisecal {

struct SamplerConfig {
  double eta = 1.0;    // scale of σ_t; 0 gives a deterministic trajectory
  int num_steps = 30;  // size of the uniform DDIM grid over [1, T]
  Timestep t0 = 600;   // start step of the reverse pass
  RngSeed rng{};       // per-step draws use rng.substream(t)

  void validate(const NoiseSchedule& schedule) const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw DomainError("eta must be >= 0");
    if (num_steps < 1 || num_steps > schedule.T()) throw DomainError("num_steps must lie in [1, T]");
    schedule.check(t0, 0);
  }
};

/// x_t = √ᾱ_t·x₀ + √(1−ᾱ_t)·ε.
inline VideoTensor forward_noise(const VideoTensor& x0, Timestep t, const VideoTensor& eps,
                                 const NoiseSchedule& schedule) {
  const double ab = schedule.alpha_bar(t);
  return axpy(std::sqrt(ab), x0, std::sqrt(1.0 - ab), eps);
}

/// x̂₀ = (x_t − √(1−ᾱ_t)·ε̂) / √ᾱ_t.
inline VideoTensor estimate_x0(const VideoTensor& x_t, Timestep t, const VideoTensor& eps_pred,
                               const NoiseSchedule& schedule) {
  schedule.check(t, 1);
  const double ab = schedule.alpha_bar(t);
  if (!(ab > 0.0)) throw DomainError("estimate_x0: alpha_bar is zero at t=" + std::to_string(t));
  const double inv = 1.0 / std::sqrt(ab);
  return axpy(inv, x_t, -std::sqrt(1.0 - ab) * inv, eps_pred);
}

/// SDEdit start point: the reference noised to step t0.
inline VideoTensor sdedit_init(const VideoTensor& x_ref, Timestep t0, const VideoTensor& eps,
                               const NoiseSchedule& schedule) {
  schedule.check(t0, 1);
  return forward_noise(x_ref, t0, eps, schedule);
}

/// Posterior standard deviation of the ancestral step t → t−1:
/// σ_t² = (1−ᾱ_{t−1})/(1−ᾱ_t)·(1−α_t).
inline double ddpm_sigma(Timestep t, const NoiseSchedule& schedule) {
  schedule.check(t, 1);
  const double var = (1.0 - schedule.alpha_bar(t - 1)) / (1.0 - schedule.alpha_bar(t)) * (1.0 - schedule.alpha(t));
  return std::sqrt(std::max(var, 0.0));
}

/// One ancestral DDPM step x_t → x_{t−1}:
/// μ = (x_t − (1−α_t)/√(1−ᾱ_t)·ε_θ)/√α_t, plus σ_t·z (no noise at t = 1).
inline VideoTensor ddpm_step(const VideoTensor& x_t, Timestep t, const Denoiser& d, const NoiseSchedule& schedule,
                             const RngSeed& rng) {
  schedule.check(t, 1);
  const VideoTensor eps = d.predict_eps(x_t, t, schedule);
  const double a = schedule.alpha(t);
  const double ab = schedule.alpha_bar(t);
  const double inv_sa = 1.0 / std::sqrt(a);
  VideoTensor mean = axpy(inv_sa, x_t, -inv_sa * (1.0 - a) / std::sqrt(1.0 - ab), eps);
  if (t == 1) return mean;
  return axpy(1.0, mean, ddpm_sigma(t, schedule), gaussian_noise(x_t.shape(), rng));
}

/// σ for a generalized DDIM step t → t_prev:
/// η·√((1−ᾱ_prev)/(1−ᾱ_t))·√(1−ᾱ_t/ᾱ_prev).
inline double ddim_sigma(Timestep t, Timestep t_prev, double eta, const NoiseSchedule& schedule) {
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t_prev);
  return eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(std::max(0.0, 1.0 - ab / ab_prev));
}

/// Generalized DDIM step with a precomputed ε_θ(x_t, t):
/// √ᾱ_prev·x̂₀ + √(1−ᾱ_prev−σ²)·ε_θ + σ·z.
inline VideoTensor ddim_step_with_eps(const VideoTensor& x_t, Timestep t, Timestep t_prev, const VideoTensor& eps,
                                      const NoiseSchedule& schedule, double eta, const RngSeed& rng) {
  schedule.check(t, 2);
  schedule.check(t_prev, 1);
  if (t_prev >= t) throw DomainError("ddim_step needs t_prev < t");
  const double ab_prev = schedule.alpha_bar(t_prev);
  const double sigma = ddim_sigma(t, t_prev, eta, schedule);
  const double dir_var = 1.0 - ab_prev - sigma * sigma;
  if (dir_var < -1e-12) throw DomainError("eta too large: sigma^2 exceeds 1 - alpha_bar_prev");
  const VideoTensor x0 = estimate_x0(x_t, t, eps, schedule);
  VideoTensor out = axpy(std::sqrt(ab_prev), x0, std::sqrt(std::max(dir_var, 0.0)), eps);
  if (sigma == 0.0) return out;
  return axpy(1.0, out, sigma, gaussian_noise(x_t.shape(), rng));
}

inline VideoTensor ddim_step(const VideoTensor& x_t, Timestep t, Timestep t_prev, const Denoiser& d,
                             const NoiseSchedule& schedule, const SamplerConfig& cfg, const RngSeed& rng) {
  schedule.check(t, 2);
  return ddim_step_with_eps(x_t, t, t_prev, d.predict_eps(x_t, t, schedule), schedule, cfg.eta, rng);
}

/// Reverse pass from x at grid.front() down to t = 0: DDIM steps between
/// consecutive grid points, then the x̂₀ projection at the last grid point.
/// Uses exactly grid.size() denoiser evaluations, or one fewer when
/// `first_eps` (ε_θ at grid.front()) is supplied. An empty grid returns the
/// input unchanged.
inline VideoTensor denoise_from(const VideoTensor& x_start, const TimestepGrid& grid, const Denoiser& d,
                                const NoiseSchedule& schedule, const SamplerConfig& cfg,
                                std::optional<VideoTensor> first_eps = std::nullopt) {
  if (grid.empty()) return x_start;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    schedule.check(grid[i], 1);
    if (i > 0 && grid[i] >= grid[i - 1]) throw DomainError("timestep grid must be strictly decreasing");
  }
  if (grid.front() > cfg.t0) throw DomainError("grid starts above the sampler's t0");

  VideoTensor x = x_start;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Timestep t = grid[i];
    VideoTensor eps = (i == 0 && first_eps) ? std::move(*first_eps) : d.predict_eps(x, t, schedule);
    if (i + 1 == grid.size()) return estimate_x0(x, t, eps, schedule);
    x = ddim_step_with_eps(x, t, grid[i + 1], eps, schedule, cfg.eta, cfg.rng.substream(static_cast<std::uint64_t>(t)));
  }
  return x; // unreachable
}

/// Full ancestral chain from pure noise at T down to t = 0.
inline VideoTensor ddpm_sample(const Shape& shape, const Denoiser& d, const NoiseSchedule& schedule,
                               const RngSeed& rng) {
  VideoTensor x = gaussian_noise(shape, rng.substream(0));
  const RngSeed steps = rng.substream(1);
  for (Timestep t = schedule.T(); t >= 1; --t) {
    x = ddpm_step(x, t, d, schedule, steps.substream(static_cast<std::uint64_t>(t)));
  }
  return x;
}

} // namespace noisecal
