#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "noisecal/errors.hpp"
#include "noisecal/parallel.hpp"
#include "noisecal/rng.hpp"

namespace noisecal {

/// (frames, channels, height, width).
struct Shape {
  std::size_t frames = 1;
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  [[nodiscard]] constexpr std::size_t size() const { return frames * channels * height * width; }
  [[nodiscard]] constexpr std::size_t plane_size() const { return height * width; }
  [[nodiscard]] constexpr std::size_t planes() const { return frames * channels; }
  [[nodiscard]] constexpr bool valid() const {
    return frames >= 1 && channels >= 1 && height >= 1 && width >= 1;
  }
  /// Shape of one frame of this shape.
  [[nodiscard]] constexpr Shape frame_shape() const { return {1, channels, height, width}; }

  [[nodiscard]] std::string to_string() const {
    return "(" + std::to_string(frames) + "," + std::to_string(channels) + "," +
           std::to_string(height) + "," + std::to_string(width) + ")";
  }

  friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

inline void require_valid(const Shape& shape) {
  if (!shape.valid()) throw ShapeError("invalid shape " + shape.to_string() + ": all dims must be >= 1");
}

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": shape mismatch " + a.to_string() + " vs " + b.to_string());
}

/// Dense row-major (F, C, H, W) array of doubles. Values are immutable once
/// constructed and always finite.
class VideoTensor {
public:
  VideoTensor() : VideoTensor(Shape{}, std::vector<double>(1, 0.0)) {}

  VideoTensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    require_valid(shape_);
    if (data_.size() != shape_.size()) {
      throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_.to_string());
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw NumericError("non-finite value in tensor of shape " + shape_.to_string());
    }
  }

  static VideoTensor filled(Shape shape, double value) {
    require_valid(shape);
    return {shape, std::vector<double>(shape.size(), value)};
  }
  static VideoTensor zeros(Shape shape) { return filled(shape, 0.0); }

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] std::span<const double> values() const { return data_; }
  [[nodiscard]] double operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] double at(std::size_t f, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((f * shape_.channels + c) * shape_.height + h) * shape_.width + w];
  }

  /// The H·W values of plane (frame, channel).
  [[nodiscard]] std::span<const double> plane(std::size_t f, std::size_t c) const {
    return std::span<const double>(data_).subspan((f * shape_.channels + c) * shape_.plane_size(),
                                                  shape_.plane_size());
  }

  /// The C·H·W values of one frame.
  [[nodiscard]] std::span<const double> frame(std::size_t f) const {
    const std::size_t n = shape_.channels * shape_.plane_size();
    return std::span<const double>(data_).subspan(f * n, n);
  }

  friend bool operator==(const VideoTensor&, const VideoTensor&) = default;

private:
  Shape shape_;
  std::vector<double> data_;
};

/// Elementwise map over one or two tensors of matching shape.
template <typename Fn>
VideoTensor map(const VideoTensor& x, Fn fn) {
  std::vector<double> out(x.size());
  const auto in = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(in[i]);
  return {x.shape(), std::move(out)};
}

template <typename Fn>
VideoTensor zip_map(const VideoTensor& x, const VideoTensor& y, Fn fn, const char* what = "zip_map") {
  require_same_shape(x.shape(), y.shape(), what);
  std::vector<double> out(x.size());
  const auto a = x.values();
  const auto b = y.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(a[i], b[i]);
  return {x.shape(), std::move(out)};
}

/// a·x + b·y.
inline VideoTensor axpy(double a, const VideoTensor& x, double b, const VideoTensor& y) {
  return zip_map(x, y, [a, b](double u, double v) { return a * u + b * v; }, "axpy");
}

inline VideoTensor operator+(const VideoTensor& x, const VideoTensor& y) {
  return zip_map(x, y, [](double u, double v) { return u + v; }, "add");
}

inline VideoTensor operator-(const VideoTensor& x, const VideoTensor& y) {
  return zip_map(x, y, [](double u, double v) { return u - v; }, "subtract");
}

inline VideoTensor operator*(double a, const VideoTensor& x) {
  return map(x, [a](double u) { return a * u; });
}

inline double sum_squares(const VideoTensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v * v;
  return acc;
}

inline double l2_norm(const VideoTensor& x) { return std::sqrt(sum_squares(x)); }

inline double max_abs_diff(const VideoTensor& x, const VideoTensor& y) {
  require_same_shape(x.shape(), y.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

/// I.i.d. standard normal tensor. Element i is the i-th draw of the stream,
/// so the result depends only on (shape, rng).
inline VideoTensor gaussian_noise(const Shape& shape, const RngSeed& rng) {
  require_valid(shape);
  const std::size_t n = shape.size();
  std::vector<double> out(n);
  constexpr std::size_t kBlocksPerChunk = 4096;
  const std::size_t blocks = (n + 1) / 2;
  const std::size_t chunks = (blocks + kBlocksPerChunk - 1) / kBlocksPerChunk;
  parallel_for(chunks, [&](std::size_t chunk) {
    const std::size_t first = chunk * kBlocksPerChunk;
    const std::size_t last = std::min(blocks, first + kBlocksPerChunk);
    for (std::size_t b = first; b < last; ++b) {
      const auto pair = normal_pair(rng, b);
      out[2 * b] = pair[0];
      if (2 * b + 1 < n) out[2 * b + 1] = pair[1];
    }
  });
  return {shape, std::move(out)};
}

} // namespace noisecal
