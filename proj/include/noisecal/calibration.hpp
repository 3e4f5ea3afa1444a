#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "noisecal/denoiser.hpp"
#include "noisecal/diffusion.hpp"
#include "noisecal/errors.hpp"
#include "noisecal/frequency.hpp"
#include "noisecal/schedule.hpp"
#include "noisecal/tensor.hpp"

namespace noisecal {

struct CalibrationConfig {
  Timestep t0 = 600;
  int iterations = 3;  // N; 0 reduces NC-SDEdit to plain SDEdit
  double nu = 1.0;     // threshold frequency of the content loss
  MaskShape mask = MaskShape::Box;
  RngSeed rng{};       // source of the initial noise ε_{t₀}

  void validate(const NoiseSchedule& schedule) const {
    if (iterations < 0) throw DomainError("calibration iterations must be >= 0");
    require_valid_nu(nu);
    if (t0 < 1 || t0 > schedule.T()) {
      throw DomainError("calibration t0 must lie in [1, " + std::to_string(schedule.T()) + "], got " + std::to_string(t0));
    }
  }
};

struct CalibrationStep {
  int iteration = 0;       // number of noise updates applied before this entry
  double objective = 0.0;  // ‖f_l^ν(x^r) − f_l^ν(x̂₀^{t₀})‖₂ for the current noise
  int denoiser_calls = 0;  // calibration updates paid for so far
};

/// Objective history of one calibration run plus its final state. Entry 0 is
/// the uncalibrated baseline; entry n follows the n-th update.
struct CalibrationTrace {
  std::vector<CalibrationStep> steps;
  VideoTensor eps;        // calibrated ε_{t₀}
  VideoTensor x_t0;       // √ᾱ·x^r + √(1−ᾱ)·eps
  VideoTensor eps_pred;   // ε_θ(x_t0, t0), reused as the first reverse step
  int calibration_calls = 0;

  [[nodiscard]] std::vector<double> objectives() const {
    std::vector<double> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.objective);
    return out;
  }
};

struct CalibrationResult {
  VideoTensor eps;
  CalibrationTrace trace;
};

/// Fixed-point refinement of the initial noise. Each of the N iterations does
///
///   x_{t₀} = √ᾱ·x^r + √(1−ᾱ)·ε
///   x̂₀    = (x_{t₀} − √(1−ᾱ)·ε_θ(x_{t₀}, t₀)) / √ᾱ
///   ε      ← ε_θ(x_{t₀}, t₀) + √ᾱ/√(1−ᾱ)·(f_h^ν(x̂₀) − f_h^ν(x^r))
///
/// with one denoiser call per iteration. One more evaluation scores the final
/// noise; its ε_θ is returned in the trace so a following reverse pass need
/// not recompute it.
inline CalibrationResult calibrate_noise(const VideoTensor& x_ref, const VideoTensor& eps0,
                                         const CalibrationConfig& cfg, const Denoiser& d,
                                         const NoiseSchedule& schedule) {
  cfg.validate(schedule);
  require_same_shape(x_ref.shape(), eps0.shape(), "calibrate_noise");
  const double ab = schedule.alpha_bar(cfg.t0);
  const double gain = std::sqrt(ab) / std::sqrt(1.0 - ab);
  const VideoTensor ref_low = low_pass(x_ref, cfg.nu, cfg.mask);
  const VideoTensor ref_high = high_pass(x_ref, cfg.nu, cfg.mask);

  CalibrationTrace trace;
  VideoTensor eps = eps0;
  for (int n = 0;; ++n) {
    VideoTensor x_t0 = sdedit_init(x_ref, cfg.t0, eps, schedule);
    VideoTensor eps_pred = d.predict_eps(x_t0, cfg.t0, schedule);
    const VideoTensor x0_hat = estimate_x0(x_t0, cfg.t0, eps_pred, schedule);
    trace.steps.push_back({n, l2_norm(ref_low - low_pass(x0_hat, cfg.nu, cfg.mask)), n});
    if (n == cfg.iterations) {
      trace.eps = eps;
      trace.x_t0 = std::move(x_t0);
      trace.eps_pred = std::move(eps_pred);
      trace.calibration_calls = n;
      break;
    }
    eps = axpy(1.0, eps_pred, gain, high_pass(x0_hat, cfg.nu, cfg.mask) - ref_high);
  }
  return {trace.eps, std::move(trace)};
}

/// Low-band replacement on the noisy iterate:
/// x_{t₀} + √ᾱ_{t₀}·(f_l^ν(x^r) − f_l^ν(x̂₀)). One calibration update is
/// algebraically identical to this.
inline VideoTensor replace_low_freq(const VideoTensor& x_t0, const VideoTensor& x_ref, const VideoTensor& x0_hat,
                                    Timestep t0, double nu, const NoiseSchedule& schedule,
                                    MaskShape mask = MaskShape::Box) {
  require_same_shape(x_t0.shape(), x_ref.shape(), "replace_low_freq");
  require_same_shape(x_t0.shape(), x0_hat.shape(), "replace_low_freq");
  const double sa = std::sqrt(schedule.alpha_bar(t0));
  return axpy(1.0, x_t0, sa, low_pass(x_ref, nu, mask) - low_pass(x0_hat, nu, mask));
}

struct EnhanceResult {
  VideoTensor x0;
  CalibrationTrace trace;
  TimestepGrid grid;
  long calibration_calls = 0; // N
  long sampling_calls = 0;    // grid.size()
  [[nodiscard]] long total_calls() const { return calibration_calls + sampling_calls; }
};

/// Plain SDEdit: noise the reference to t0 with `eps`, then denoise back.
inline VideoTensor sdedit(const VideoTensor& x_ref, const VideoTensor& eps, const SamplerConfig& sampler,
                          const Denoiser& d, const NoiseSchedule& schedule) {
  sampler.validate(schedule);
  const TimestepGrid grid = sdedit_grid(schedule, sampler.num_steps, sampler.t0);
  if (grid.empty()) return x_ref;
  return denoise_from(sdedit_init(x_ref, sampler.t0, eps, schedule), grid, d, schedule, sampler);
}

/// SDEdit with noise calibration: draw ε_{t₀} from cfg.rng, calibrate it N
/// times, noise the reference with the calibrated ε and run the reverse pass
/// over the DDIM grid anchored at t0. The sampler's t0 is overridden by
/// cfg.t0. Costs exactly N + grid.size() denoiser calls.
inline EnhanceResult nc_sdedit(const VideoTensor& x_ref, const CalibrationConfig& cfg, SamplerConfig sampler,
                               const Denoiser& d, const NoiseSchedule& schedule) {
  cfg.validate(schedule);
  sampler.t0 = cfg.t0;
  sampler.validate(schedule);

  CountingDenoiser counted(d);
  const VideoTensor eps0 = gaussian_noise(x_ref.shape(), cfg.rng);
  CalibrationResult cal = calibrate_noise(x_ref, eps0, cfg, counted, schedule);
  const long calibration_calls = counted.calls() - 1; // the final scoring call is the first reverse step

  EnhanceResult out;
  out.grid = sdedit_grid(schedule, sampler.num_steps, cfg.t0);
  out.x0 = denoise_from(cal.trace.x_t0, out.grid, counted, schedule, sampler, cal.trace.eps_pred);
  out.calibration_calls = calibration_calls;
  out.sampling_calls = counted.calls() - calibration_calls;
  out.trace = std::move(cal.trace);
  return out;
}

/// CSV with header `iteration,objective,denoiser_calls`.
inline void write_trace_csv(std::ostream& os, const CalibrationTrace& trace) {
  os << "iteration,objective,denoiser_calls\n";
  char buf[64];
  for (const auto& s : trace.steps) {
    std::snprintf(buf, sizeof buf, "%.17g", s.objective);
    os << s.iteration << ',' << buf << ',' << s.denoiser_calls << '\n';
  }
}

} // namespace noisecal
