#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "noisecal/metrics.hpp"

namespace goldens {

using namespace noisecal;

/// One worked metric example: a computed value, the value it should have and
/// the allowed absolute deviation.
struct Check {
  std::string name;
  double got;
  double expected;
  double tol;
  [[nodiscard]] bool ok() const { return std::abs(got - expected) <= tol; }
};

inline VideoTensor row(std::vector<double> v) {
  const std::size_t n = v.size();
  return {Shape{1, 1, 1, n}, std::move(v)};
}

/// Smooth 16×16 test frame with a little texture.
inline VideoTensor smooth_frame(std::size_t n = 16) {
  std::vector<double> v(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      v[i * n + j] = 0.5 + 0.3 * std::sin(0.3 * i) * std::cos(0.2 * j) + 0.01 * static_cast<double>((i * 7 + j * 3) % 5);
    }
  }
  return {Shape{1, 1, n, n}, std::move(v)};
}

inline VideoTensor with_nyquist(const VideoTensor& x, double amplitude) {
  const Shape& s = x.shape();
  std::vector<double> v(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < s.height; ++i) {
    for (std::size_t j = 0; j < s.width; ++j) v[i * s.width + j] += amplitude * ((j % 2) ? -1.0 : 1.0);
  }
  return {s, std::move(v)};
}

inline std::vector<Check> metric_checks() {
  std::vector<Check> out;
  const VideoTensor a = smooth_frame();
  const VideoTensor b = with_nyquist(a, 0.1);
  const VideoTensor flip = map(a, [](double v) { return 1.0 - v; });

  out.push_back({"mse identical", mse(a, a), 0.0, 0.0});
  out.push_back({"mse [0,0] vs [1,1]", mse(row({0, 0}), row({1, 1})), 1.0, 1e-15});
  out.push_back({"mse [0,2] vs [1,0]", mse(row({0, 2}), row({1, 0})), 2.5, 1e-15});

  out.push_back({"mse_low identical", mse_low(a, a), 0.0, 0.0});
  out.push_back({"mse_low nu=1 equals mse", mse_low(a, flip, 1.0), mse(a, flip), 1e-12});
  out.push_back({"mse_low ignores Nyquist difference", mse_low(a, b, 0.5), 0.0, 1e-20});

  out.push_back({"ssim self", ssim(a, a), 1.0, 1e-9});
  const VideoTensor half = VideoTensor::filled({1, 1, 16, 16}, 0.5);
  const VideoTensor quarter = VideoTensor::filled({1, 1, 16, 16}, 0.25);
  out.push_back({"ssim constant 0.5 vs 0.25", ssim(half, quarter), 0.8001, 1e-4});
  out.push_back({"ssim constant 0.5 vs 0.25 closed form", ssim(half, quarter), 0.2501 / 0.3126, 1e-12});
  out.push_back({"ssim inverted frame below 1", ssim(a, flip) < 1.0 ? 1.0 : 0.0, 1.0, 0.0});

  out.push_back({"sf constant", spatial_frequency(half), 0.0, 0.0});
  const VideoTensor two({1, 1, 2, 2}, {0.0, 1.0, 0.0, 1.0});
  out.push_back({"sf 2x2 columns", spatial_frequency(two), 0.7071068, 1e-7});
  std::vector<double> checker(64), edge(64, 0.0);
  for (std::size_t i = 0; i < 64; ++i) {
    checker[i] = static_cast<double>((i / 8 + i % 8) % 2);
    if (i % 8 >= 4) edge[i] = 1.0;
  }
  const double sf_checker = spatial_frequency(VideoTensor({1, 1, 8, 8}, checker));
  const double sf_edge = spatial_frequency(VideoTensor({1, 1, 8, 8}, edge));
  out.push_back({"sf checkerboard above single edge", sf_checker > sf_edge ? 1.0 : 0.0, 1.0, 0.0});

  out.push_back({"d_sf identical", d_sf(a, a), 0.0, 0.0});
  out.push_back({"d_sf added texture positive", d_sf(b, a) > 0.0 ? 1.0 : 0.0, 1.0, 0.0});
  out.push_back({"d_sf antisymmetric", d_sf(a, b), -d_sf(b, a), 0.0});
  return out;
}

} // namespace goldens
