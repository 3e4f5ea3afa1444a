#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "noisecal/errors.hpp"
#include "noisecal/parallel.hpp"
#include "noisecal/tensor.hpp"

namespace noisecal {

/// Geometry of the low-pass region in normalized frequency.
enum class MaskShape {
  Box,    // ρ = max(|k_x|/⌈W/2⌉, |k_y|/⌈H/2⌉)
  Radial, // ρ = √(((k_x/⌈W/2⌉)² + (k_y/⌈H/2⌉)²)/2)
};

inline void require_valid_nu(double nu) {
  if (!(nu >= 0.0 && nu <= 1.0)) throw DomainError("threshold frequency nu must lie in [0, 1], got " + std::to_string(nu));
}

/// Which FFT bins of an H×W plane belong to the low band for threshold ν.
/// A bin passes iff ν > 0 and ρ(k) <= ν, so ν = 0 is empty, ν = 1 is full and
/// masks are nested in ν.
class FrequencyMask {
public:
  FrequencyMask(std::size_t height, std::size_t width, double nu, MaskShape shape = MaskShape::Box)
      : height_(height), width_(width), nu_(nu) {
    require_valid_nu(nu);
    if (height == 0 || width == 0) throw ShapeError("frequency mask needs a non-empty plane");
    pass_.resize(height * width);
    for (std::size_t ky = 0; ky < height; ++ky) {
      for (std::size_t kx = 0; kx < width; ++kx) {
        pass_[ky * width + kx] = nu > 0.0 && normalized_frequency(ky, kx, shape) <= nu;
      }
    }
  }

  /// Signed frequency of DFT index k for length n, in (−n/2, n/2].
  static long signed_index(std::size_t k, std::size_t n) {
    return 2 * k <= n ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
  }

  [[nodiscard]] double normalized_frequency(std::size_t ky, std::size_t kx, MaskShape shape) const {
    const double cy = static_cast<double>((height_ + 1) / 2);
    const double cx = static_cast<double>((width_ + 1) / 2);
    const double fy = std::abs(static_cast<double>(signed_index(ky, height_))) / cy;
    const double fx = std::abs(static_cast<double>(signed_index(kx, width_))) / cx;
    if (shape == MaskShape::Box) return std::max(fx, fy);
    return std::sqrt((fx * fx + fy * fy) / 2.0);
  }

  [[nodiscard]] bool passes(std::size_t ky, std::size_t kx) const { return pass_[ky * width_ + kx]; }
  [[nodiscard]] std::size_t height() const { return height_; }
  [[nodiscard]] std::size_t width() const { return width_; }
  [[nodiscard]] double nu() const { return nu_; }

private:
  std::size_t height_;
  std::size_t width_;
  double nu_;
  std::vector<bool> pass_;
};

namespace detail {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

/// Process-wide cache of FFTW_ESTIMATE plans keyed by plane size. Planning is
/// serialized (the FFTW planner is not thread-safe); execution through the
/// new-array interface is. ESTIMATE plans are chosen without timing, so the
/// arithmetic is identical across runs.
class PlanCache {
public:
  struct Plans {
    fftw_plan forward;
    fftw_plan inverse;
  };

  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  Plans get(std::size_t h, std::size_t w) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find({h, w});
    if (it != plans_.end()) return it->second;
    auto real = fftw_buffer<double>(h * w);
    auto spec = fftw_buffer<fftw_complex>(h * (w / 2 + 1));
    const int hi = static_cast<int>(h);
    const int wi = static_cast<int>(w);
    Plans p{fftw_plan_dft_r2c_2d(hi, wi, real.get(), spec.get(), FFTW_ESTIMATE),
            fftw_plan_dft_c2r_2d(hi, wi, spec.get(), real.get(), FFTW_ESTIMATE)};
    plans_.emplace(std::pair{h, w}, p);
    return p;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

  ~PlanCache() {
    for (auto& [key, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.inverse);
    }
  }

private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::pair<std::size_t, std::size_t>, Plans> plans_;
};

/// Keeps the bins where mask.passes(..) == keep_pass, zeroes the rest.
inline void filter_plane(std::span<const double> in, std::span<double> out, const FrequencyMask& mask,
                         bool keep_pass) {
  const std::size_t h = mask.height();
  const std::size_t w = mask.width();
  const std::size_t wh = w / 2 + 1;
  const auto plans = PlanCache::instance().get(h, w);
  auto real = fftw_buffer<double>(h * w);
  auto spec = fftw_buffer<fftw_complex>(h * wh);
  std::copy(in.begin(), in.end(), real.get());
  fftw_execute_dft_r2c(plans.forward, real.get(), spec.get());
  for (std::size_t ky = 0; ky < h; ++ky) {
    for (std::size_t kx = 0; kx < wh; ++kx) {
      if (mask.passes(ky, kx) != keep_pass) {
        spec[ky * wh + kx][0] = 0.0;
        spec[ky * wh + kx][1] = 0.0;
      }
    }
  }
  fftw_execute_dft_c2r(plans.inverse, spec.get(), real.get());
  const double scale = 1.0 / static_cast<double>(h * w);
  for (std::size_t i = 0; i < h * w; ++i) out[i] = real[i] * scale;
}

inline VideoTensor filter(const VideoTensor& x, double nu, MaskShape shape, bool low) {
  require_valid_nu(nu);
  const Shape& s = x.shape();
  // Empty and full masks are applied exactly, without a transform round trip.
  const bool all_low = nu == 1.0;
  const bool none_low = nu == 0.0;
  if ((low && all_low) || (!low && none_low)) return x;
  if ((low && none_low) || (!low && all_low)) return VideoTensor::zeros(s);

  const FrequencyMask mask(s.height, s.width, nu, shape);
  std::vector<double> out(s.size());
  parallel_for(s.planes(), [&](std::size_t p) {
    const std::size_t n = s.plane_size();
    filter_plane(x.values().subspan(p * n, n), std::span<double>(out).subspan(p * n, n), mask, low);
  });
  return {s, std::move(out)};
}

} // namespace detail

/// f_l^ν: spatial low-frequency component, per frame and channel.
inline VideoTensor low_pass(const VideoTensor& x, double nu, MaskShape shape = MaskShape::Box) {
  return detail::filter(x, nu, shape, true);
}

/// f_h^ν = x − f_l^ν(x), computed with the complementary mask.
inline VideoTensor high_pass(const VideoTensor& x, double nu, MaskShape shape = MaskShape::Box) {
  return detail::filter(x, nu, shape, false);
}

/// ‖f_l^ν(x_ref) − f_l^ν(x̂₀)‖₂, the content loss that calibration descends.
inline double content_objective(const VideoTensor& x_ref, const VideoTensor& x0_hat, double nu,
                                MaskShape shape = MaskShape::Box) {
  require_same_shape(x_ref.shape(), x0_hat.shape(), "content_objective");
  return l2_norm(low_pass(x_ref, nu, shape) - low_pass(x0_hat, nu, shape));
}

} // namespace noisecal
