#pragma once

#include <atomic>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "noisecal/denoiser.hpp"
#include "noisecal/schedule.hpp"
#include "noisecal/tensor.hpp"

namespace support {

using namespace noisecal;

/// T = 1 schedule whose only step has the requested ᾱ.
inline NoiseSchedule single_step(double alpha_bar) { return NoiseSchedule({1.0 - alpha_bar}); }

inline VideoTensor tensor(Shape shape, std::initializer_list<double> values) {
  return {shape, std::vector<double>(values)};
}

inline VideoTensor scalar(double v) { return {Shape{1, 1, 1, 1}, {v}}; }

inline VideoTensor random_tensor(const Shape& shape, std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> data(shape.size());
  for (double& v : data) v = u(gen);
  return {shape, std::move(data)};
}

inline std::size_t pick(std::mt19937_64& gen, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
}

inline Shape random_shape(std::mt19937_64& gen, std::size_t max_f = 4, std::size_t max_c = 3, std::size_t max_hw = 32) {
  return {pick(gen, 1, max_f), pick(gen, 1, max_c), pick(gen, 1, max_hw), pick(gen, 1, max_hw)};
}

/// Up to `max_k` components with random weights, means in [-1, 1] and
/// variances in [0, 0.5]; roughly one in four components is a point mass.
inline GmmDenoiser random_gmm(const Shape& shape, std::mt19937_64& gen, std::size_t max_k = 3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<GmmComponent> comps;
  const std::size_t k = pick(gen, 1, max_k);
  for (std::size_t i = 0; i < k; ++i) {
    const double var = u(gen) < 0.25 ? 0.0 : 0.5 * u(gen);
    comps.push_back({0.1 + u(gen), random_tensor(shape, gen), var});
  }
  return GmmDenoiser(std::move(comps));
}

/// Scratch directory removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("noisecal_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

} // namespace support
