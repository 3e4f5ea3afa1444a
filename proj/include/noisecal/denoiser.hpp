#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "noisecal/errors.hpp"
#include "noisecal/parallel.hpp"
#include "noisecal/schedule.hpp"
#include "noisecal/tensor.hpp"

namespace noisecal {

/// ε_θ(x_t, t): predicts the noise contained in x_t. Implementations are
/// immutable and may be called concurrently.
class Denoiser {
public:
  virtual ~Denoiser() = default;

  /// Shape-preserving; requires 1 <= t <= T.
  [[nodiscard]] virtual VideoTensor predict_eps(const VideoTensor& x_t, Timestep t,
                                                const NoiseSchedule& schedule) const = 0;

  /// E[x₀ | x_t]. The default inverts predict_eps through
  /// x₀ = (x_t − √(1−ᾱ_t)·ε) / √ᾱ_t.
  [[nodiscard]] virtual VideoTensor posterior_mean(const VideoTensor& x_t, Timestep t,
                                                   const NoiseSchedule& schedule) const {
    const VideoTensor eps = predict_eps(x_t, t, schedule);
    const double ab = schedule.alpha_bar(t);
    return axpy(1.0 / std::sqrt(ab), x_t, -std::sqrt(1.0 - ab) / std::sqrt(ab), eps);
  }
};

/// Denoisers that natively compute E[x₀ | x_t]; ε is derived from it as
/// ε = (x_t − √ᾱ_t·E[x₀|x_t]) / √(1−ᾱ_t), so both views agree exactly.
class PosteriorMeanDenoiser : public Denoiser {
public:
  [[nodiscard]] VideoTensor predict_eps(const VideoTensor& x_t, Timestep t,
                                        const NoiseSchedule& schedule) const final {
    schedule.check(t, 1);
    const double ab = schedule.alpha_bar(t);
    const VideoTensor x0 = posterior_mean(x_t, t, schedule);
    const double inv = 1.0 / std::sqrt(1.0 - ab);
    return axpy(inv, x_t, -std::sqrt(ab) * inv, x0);
  }

  [[nodiscard]] VideoTensor posterior_mean(const VideoTensor& x_t, Timestep t,
                                           const NoiseSchedule& schedule) const override = 0;
};

struct GmmComponent {
  double weight = 1.0;
  VideoTensor mean;
  double variance = 0.0; // isotropic σ²
};

/// Bayes-optimal denoiser for an isotropic Gaussian mixture prior
/// Σ w_i N(μ_i, σ_i² I). With every σ_i² = 0 it is the exact denoiser of the
/// empirical distribution over the means.
///
/// Means of one frame (F = 1) act on each frame of a longer video
/// independently, i.e. the prior over a video is the product of per-frame
/// mixtures. Otherwise mean and input shapes must agree.
class GmmDenoiser final : public PosteriorMeanDenoiser {
public:
  explicit GmmDenoiser(std::vector<GmmComponent> components) : components_(std::move(components)) {
    if (components_.empty()) throw DomainError("GmmDenoiser needs at least one component");
    double largest = 0.0;
    for (const auto& c : components_) {
      if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw DomainError("component weights must be positive");
      if (!(c.variance >= 0.0) || !std::isfinite(c.variance)) throw DomainError("component variances must be >= 0");
      require_same_shape(c.mean.shape(), components_.front().mean.shape(), "GmmDenoiser component means");
      largest = std::max(largest, c.weight);
    }
    // Scaling by the largest weight first keeps the sum finite for weights near DBL_MAX.
    double total = 0.0;
    for (auto& c : components_) total += (c.weight /= largest);
    for (auto& c : components_) c.weight /= total;
  }

  /// Empirical-distribution denoiser: one zero-variance component per sample,
  /// equal weights.
  static GmmDenoiser empirical(const std::vector<VideoTensor>& samples, double variance = 0.0) {
    std::vector<GmmComponent> comps;
    comps.reserve(samples.size());
    for (const auto& s : samples) comps.push_back({1.0, s, variance});
    return GmmDenoiser(std::move(comps));
  }

  [[nodiscard]] const std::vector<GmmComponent>& components() const { return components_; }
  [[nodiscard]] const Shape& component_shape() const { return components_.front().mean.shape(); }

  [[nodiscard]] VideoTensor posterior_mean(const VideoTensor& x_t, Timestep t,
                                           const NoiseSchedule& schedule) const override {
    schedule.check(t, 1);
    const Shape& cs = component_shape();
    const Shape& xs = x_t.shape();
    const bool per_frame = cs.frames == 1 && xs.frame_shape() == cs;
    if (!per_frame) require_same_shape(cs, xs, "GmmDenoiser input");

    const std::size_t block = cs.size();
    const std::size_t blocks = xs.size() / block;
    std::vector<double> out(xs.size());
    const double ab = schedule.alpha_bar(t);
    parallel_for(blocks, [&](std::size_t b) {
      posterior_block(x_t.values().subspan(b * block, block), ab, std::span<double>(out).subspan(b * block, block));
    });
    return {xs, std::move(out)};
  }

  /// Posterior responsibilities r_i for one block (for diagnostics/tests).
  [[nodiscard]] std::vector<double> responsibilities(std::span<const double> x, double alpha_bar) const {
    const std::size_t K = components_.size();
    const double sa = std::sqrt(alpha_bar);
    const double D = static_cast<double>(x.size());
    std::vector<double> logits(K);
    parallel_for(K, [&](std::size_t i) {
      const auto& c = components_[i];
      const auto mu = c.mean.values();
      double dist = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - sa * mu[j];
        dist += d * d;
      }
      const double v = alpha_bar * c.variance + (1.0 - alpha_bar);
      logits[i] = std::log(c.weight) - dist / (2.0 * v) - 0.5 * D * std::log(v);
    });
    const double top = *std::max_element(logits.begin(), logits.end());
    double norm = 0.0;
    for (double& l : logits) {
      l = std::exp(l - top);
      norm += l;
    }
    for (double& l : logits) l /= norm;
    return logits;
  }

private:
  void posterior_block(std::span<const double> x, double alpha_bar, std::span<double> out) const {
    const std::vector<double> r = responsibilities(x, alpha_bar);
    const double sa = std::sqrt(alpha_bar);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < components_.size(); ++i) {
      if (r[i] == 0.0) continue;
      const auto& c = components_[i];
      const auto mu = c.mean.values();
      const double gain = sa * c.variance / (alpha_bar * c.variance + (1.0 - alpha_bar));
      for (std::size_t j = 0; j < x.size(); ++j) out[j] += r[i] * (mu[j] + gain * (x[j] - sa * mu[j]));
    }
  }

  std::vector<GmmComponent> components_;
};

/// Returns a fixed ε for every input. Test double for algebraic identities.
class ConstantDenoiser final : public Denoiser {
public:
  explicit ConstantDenoiser(VideoTensor fixed_eps) : eps_(std::move(fixed_eps)) {}

  [[nodiscard]] VideoTensor predict_eps(const VideoTensor& x_t, Timestep t,
                                        const NoiseSchedule& schedule) const override {
    schedule.check(t, 1);
    require_same_shape(x_t.shape(), eps_.shape(), "ConstantDenoiser input");
    return eps_;
  }

private:
  VideoTensor eps_;
};

/// Forwards to another denoiser and counts predict_eps evaluations.
class CountingDenoiser final : public Denoiser {
public:
  explicit CountingDenoiser(const Denoiser& inner) : inner_(inner) {}

  [[nodiscard]] VideoTensor predict_eps(const VideoTensor& x_t, Timestep t,
                                        const NoiseSchedule& schedule) const override {
    ++calls_;
    return inner_.predict_eps(x_t, t, schedule);
  }

  [[nodiscard]] long calls() const { return calls_; }
  void reset() { calls_ = 0; }

private:
  const Denoiser& inner_;
  mutable std::atomic<long> calls_{0};
};

} // namespace noisecal
