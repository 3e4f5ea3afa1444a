#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "noisecal/errors.hpp"

namespace noisecal {

using Timestep = int;

/// Cumulative signal-retention schedule ᾱ_0..ᾱ_T with ᾱ_0 = 1 and ᾱ strictly
/// decreasing. ᾱ_T is small but positive.
class NoiseSchedule {
public:
  /// From per-step betas β_1..β_T, each in (0, 1).
  explicit NoiseSchedule(const std::vector<double>& betas) {
    if (betas.empty()) throw DomainError("noise schedule needs T >= 1");
    alpha_.reserve(betas.size());
    alpha_bar_.reserve(betas.size() + 1);
    alpha_bar_.push_back(1.0);
    for (double beta : betas) {
      if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta must lie in (0, 1), got " + std::to_string(beta));
      alpha_.push_back(1.0 - beta);
      alpha_bar_.push_back(alpha_bar_.back() * (1.0 - beta));
    }
    for (std::size_t t = 1; t < alpha_bar_.size(); ++t) {
      if (!(alpha_bar_[t] < alpha_bar_[t - 1]) || !(alpha_bar_[t] > 0.0)) {
        throw DomainError("alpha_bar underflowed at t=" + std::to_string(t));
      }
    }
  }

  [[nodiscard]] Timestep T() const { return static_cast<Timestep>(alpha_.size()); }

  /// ᾱ_t for t in [0, T].
  [[nodiscard]] double alpha_bar(Timestep t) const {
    check(t, 0);
    return alpha_bar_[static_cast<std::size_t>(t)];
  }

  /// α_t = ᾱ_t / ᾱ_{t-1} for t in [1, T].
  [[nodiscard]] double alpha(Timestep t) const {
    check(t, 1);
    return alpha_[static_cast<std::size_t>(t) - 1];
  }

  [[nodiscard]] double beta(Timestep t) const { return 1.0 - alpha(t); }

  [[nodiscard]] const std::vector<double>& alpha_bars() const { return alpha_bar_; }

  /// Throws unless min_t <= t <= T.
  void check(Timestep t, Timestep min_t) const {
    if (t < min_t || t > T()) {
      throw DomainError("timestep " + std::to_string(t) + " outside [" + std::to_string(min_t) + ", " +
                        std::to_string(T()) + "]");
    }
  }

private:
  std::vector<double> alpha_;     // α_1..α_T
  std::vector<double> alpha_bar_; // ᾱ_0..ᾱ_T
};

/// DDPM linear schedule: β_t evenly spaced from beta_start (t=1) to beta_end (t=T).
inline NoiseSchedule linear_beta_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw DomainError("T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw DomainError("need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
    betas[static_cast<std::size_t>(t - 1)] = beta_start + frac * (beta_end - beta_start);
  }
  return NoiseSchedule(betas);
}

struct ScheduleParams {
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
};

inline NoiseSchedule make_schedule(const ScheduleParams& p) {
  return linear_beta_schedule(p.T, p.beta_start, p.beta_end);
}

/// Strictly decreasing timesteps in [1, T].
using TimestepGrid = std::vector<Timestep>;

/// Uniform grid τ_i = round(i·T/num_steps), i = 1..num_steps, restricted to
/// τ_i <= t0, in decreasing order.
inline TimestepGrid ddim_grid(const NoiseSchedule& schedule, int num_steps, Timestep t0) {
  const int T = schedule.T();
  if (num_steps < 1 || num_steps > T) {
    throw DomainError("num_steps must lie in [1, " + std::to_string(T) + "], got " + std::to_string(num_steps));
  }
  schedule.check(t0, 0);
  TimestepGrid grid;
  for (long long i = num_steps; i >= 1; --i) {
    // round half up of i·T/num_steps in exact integer arithmetic
    const auto tau = static_cast<Timestep>((2 * i * T + num_steps) / (2LL * num_steps));
    if (tau > t0) continue;
    if (!grid.empty() && grid.back() == tau) continue;
    grid.push_back(tau);
  }
  return grid;
}

/// The grid an SDEdit pass walks: ddim_grid with t0 itself prepended when it
/// is not already a grid point, so denoising starts exactly where the
/// reference was noised. Empty iff t0 == 0.
inline TimestepGrid sdedit_grid(const NoiseSchedule& schedule, int num_steps, Timestep t0) {
  TimestepGrid grid = ddim_grid(schedule, num_steps, t0);
  if (t0 >= 1 && (grid.empty() || grid.front() != t0)) grid.insert(grid.begin(), t0);
  return grid;
}

/// t0 given either as an absolute step or as a fraction of T.
inline Timestep resolve_t0(double fraction, const NoiseSchedule& schedule) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw DomainError("t0 fraction must lie in [0, 1]");
  return static_cast<Timestep>(std::lround(fraction * schedule.T()));
}

} // namespace noisecal
