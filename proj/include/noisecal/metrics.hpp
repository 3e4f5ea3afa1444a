#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisecal/errors.hpp"
#include "noisecal/frequency.hpp"
#include "noisecal/parallel.hpp"
#include "noisecal/tensor.hpp"

namespace noisecal {

/// Mean squared difference over all F·C·H·W elements.
inline double mse(const VideoTensor& a, const VideoTensor& b) {
  require_same_shape(a.shape(), b.shape(), "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

/// MSE between the low-frequency components (ν = 0.5 by default).
inline double mse_low(const VideoTensor& a, const VideoTensor& b, double nu = 0.5,
                      MaskShape shape = MaskShape::Box) {
  require_same_shape(a.shape(), b.shape(), "mse_low");
  return mse(low_pass(a, nu, shape), low_pass(b, nu, shape));
}

namespace detail {

constexpr std::size_t kSsimWindow = 11;

inline std::array<double, kSsimWindow> ssim_kernel() {
  std::array<double, kSsimWindow> k{};
  constexpr double sigma = 1.5;
  double total = 0.0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double x = static_cast<double>(i) - 5.0;
    k[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    total += k[i];
  }
  for (double& v : k) v /= total;
  return k;
}

/// Valid-mode separable Gaussian filtering of an h×w plane.
inline std::vector<double> gaussian_filter_valid(std::span<const double> in, std::size_t h, std::size_t w,
                                                 const std::array<double, kSsimWindow>& k) {
  const std::size_t oh = h - kSsimWindow + 1;
  const std::size_t ow = w - kSsimWindow + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < kSsimWindow; ++t) acc += k[t] * in[i * w + j + t];
      rows[i * ow + j] = acc;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < kSsimWindow; ++t) acc += k[t] * rows[(i + t) * ow + j];
      out[i * ow + j] = acc;
    }
  }
  return out;
}

/// Sum of local SSIM values over all windows of one plane.
inline double ssim_plane_sum(std::span<const double> a, std::span<const double> b, std::size_t h, std::size_t w) {
  constexpr double C1 = 0.01 * 0.01;
  constexpr double C2 = 0.03 * 0.03;
  const auto k = ssim_kernel();
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = gaussian_filter_valid(a, h, w, k);
  const auto mu_b = gaussian_filter_valid(b, h, w, k);
  const auto e_aa = gaussian_filter_valid(aa, h, w, k);
  const auto e_bb = gaussian_filter_valid(bb, h, w, k);
  const auto e_ab = gaussian_filter_valid(ab, h, w, k);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
  }
  return total;
}

} // namespace detail

/// Single-scale SSIM (11×11 Gaussian window, σ = 1.5, L = 1), averaged over
/// every window of every frame and channel.
inline double ssim(const VideoTensor& a, const VideoTensor& b) {
  require_same_shape(a.shape(), b.shape(), "ssim");
  const Shape& s = a.shape();
  if (s.height < detail::kSsimWindow || s.width < detail::kSsimWindow) {
    throw ShapeError("ssim needs frames of at least 11x11, got " + std::to_string(s.height) + "x" +
                     std::to_string(s.width));
  }
  std::vector<double> sums(s.planes());
  parallel_for(s.planes(), [&](std::size_t p) {
    const std::size_t n = s.plane_size();
    sums[p] = detail::ssim_plane_sum(a.values().subspan(p * n, n), b.values().subspan(p * n, n), s.height, s.width);
  });
  double total = 0.0;
  for (double v : sums) total += v;
  const double windows = static_cast<double>((s.height - 10) * (s.width - 10) * s.planes());
  return total / windows;
}

/// Spatial frequency √(RF² + CF²) with RF/CF the RMS horizontal/vertical
/// neighbour differences normalized by H·W; averaged over frames and channels.
/// A 1×1 frame has SF 0.
inline double spatial_frequency(const VideoTensor& x) {
  const Shape& s = x.shape();
  const std::size_t h = s.height;
  const std::size_t w = s.width;
  double total = 0.0;
  for (std::size_t p = 0; p < s.planes(); ++p) {
    const auto v = x.values().subspan(p * s.plane_size(), s.plane_size());
    double row = 0.0;
    double col = 0.0;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        if (j > 0) {
          const double d = v[i * w + j] - v[i * w + j - 1];
          row += d * d;
        }
        if (i > 0) {
          const double d = v[i * w + j] - v[(i - 1) * w + j];
          col += d * d;
        }
      }
    }
    const double n = static_cast<double>(h * w);
    total += std::sqrt(row / n + col / n);
  }
  return total / static_cast<double>(s.planes());
}

/// SF(x) − SF(x_ref); positive when x carries more detail.
inline double d_sf(const VideoTensor& x, const VideoTensor& x_ref) {
  require_same_shape(x.shape(), x_ref.shape(), "d_sf");
  return spatial_frequency(x) - spatial_frequency(x_ref);
}

struct MetricReport {
  double mse = 0.0;
  double mse_low = 0.0;
  double ssim = 0.0;
  double sf_a = 0.0;
  double sf_b = 0.0;
  double d_sf = 0.0;

  static constexpr const char* kCsvHeader = "mse,mse_low,ssim,sf_a,sf_b,d_sf";

  [[nodiscard]] nlohmann::ordered_json to_json() const {
    return {{"mse", mse}, {"mse_low", mse_low}, {"ssim", ssim}, {"sf_a", sf_a}, {"sf_b", sf_b}, {"d_sf", d_sf}};
  }

  [[nodiscard]] std::string to_csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", mse, mse_low, ssim, sf_a, sf_b, d_sf);
    return buf;
  }
};

/// Consistency and detail metrics of `a` against `b` (a = candidate, b = reference).
inline MetricReport compare(const VideoTensor& a, const VideoTensor& b, double low_nu = 0.5) {
  require_same_shape(a.shape(), b.shape(), "compare");
  MetricReport r;
  r.mse = mse(a, b);
  r.mse_low = mse_low(a, b, low_nu);
  r.ssim = ssim(a, b);
  r.sf_a = spatial_frequency(a);
  r.sf_b = spatial_frequency(b);
  r.d_sf = r.sf_a - r.sf_b;
  return r;
}

} // namespace noisecal
