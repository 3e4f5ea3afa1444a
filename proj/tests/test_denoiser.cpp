#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "noisecal/denoiser.hpp"
#include "noisecal/denoiser_io.hpp"
#include "noisecal/diffusion.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace noisecal;
using support::scalar;

namespace {

GmmDenoiser one_component(double mean, double variance) { return GmmDenoiser({{1.0, scalar(mean), variance}}); }

} // namespace

TEST(GmmDenoiser, SingleGaussianPosteriorMean) {
  const NoiseSchedule s = support::single_step(0.25);
  const GmmDenoiser d = one_component(0.0, 1.0);
  EXPECT_NEAR(d.posterior_mean(scalar(1.0), 1, s)[0], 0.5, 1e-15);
  EXPECT_NEAR(oracle::posterior_mean({{1.0, 0.0, 1.0}}, 1.0, 0.25), 0.5, 1e-9);
}

TEST(GmmDenoiser, SingleGaussianPredictEps) {
  const NoiseSchedule s = support::single_step(0.25);
  EXPECT_NEAR(one_component(0.0, 1.0).predict_eps(scalar(1.0), 1, s)[0], 0.8660254, 1e-7);
}

TEST(GmmDenoiser, SymmetricPairAtOrigin) {
  const NoiseSchedule s = make_schedule({});
  const GmmDenoiser d({{0.5, scalar(2.0), 0.0}, {0.5, scalar(-2.0), 0.0}});
  for (Timestep t : {1, 300, 999}) EXPECT_EQ(d.posterior_mean(scalar(0.0), t, s)[0], 0.0);
}

TEST(GmmDenoiser, EmpiricalOutputIsConvexCombination) {
  std::mt19937_64 gen(8);
  const NoiseSchedule s = make_schedule({});
  for (int trial = 0; trial < 50; ++trial) {
    const Shape shape{1, 2, 3, 3};
    std::vector<VideoTensor> samples;
    for (int k = 0; k < 4; ++k) samples.push_back(support::random_tensor(shape, gen));
    const GmmDenoiser d = GmmDenoiser::empirical(samples);
    const VideoTensor x = support::random_tensor(shape, gen, -2.0, 2.0);
    const Timestep t = std::uniform_int_distribution<int>(1, 1000)(gen);
    const auto r = d.responsibilities(x.values(), s.alpha_bar(t));
    double total = 0.0;
    for (double v : r) {
      ASSERT_GE(v, 0.0);
      total += v;
    }
    ASSERT_NEAR(total, 1.0, 1e-12);
    const VideoTensor out = d.posterior_mean(x, t, s);
    for (std::size_t j = 0; j < out.size(); ++j) {
      double expected = 0.0;
      for (std::size_t k = 0; k < samples.size(); ++k) expected += r[k] * samples[k][j];
      ASSERT_NEAR(out[j], expected, 1e-12);
    }
  }
}

TEST(GmmDenoiser, ZeroResidualAtScaledMean) {
  const NoiseSchedule s = make_schedule({});
  const VideoTensor mu = support::tensor({1, 1, 1, 3}, {0.2, -0.7, 1.1});
  const GmmDenoiser d({{1.0, mu, 0.0}});
  const double sa = std::sqrt(s.alpha_bar(400));
  const VideoTensor eps = d.predict_eps(sa * mu, 400, s);
  for (double v : eps.values()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(GmmDenoiser, EpsAndPosteriorMeanAreConsistent) {
  std::mt19937_64 gen(21);
  const NoiseSchedule s = make_schedule({});
  for (int trial = 0; trial < 100; ++trial) {
    const Shape shape = support::random_shape(gen, 2, 3, 6);
    const GmmDenoiser d = support::random_gmm(shape, gen);
    const VideoTensor x = support::random_tensor(shape, gen, -3.0, 3.0);
    const Timestep t = std::uniform_int_distribution<int>(1, 1000)(gen);
    const double ab = s.alpha_bar(t);
    const VideoTensor back = axpy(std::sqrt(ab), d.posterior_mean(x, t, s), std::sqrt(1.0 - ab), d.predict_eps(x, t, s));
    ASSERT_LT(max_abs_diff(back, x), 1e-10);
  }
}

TEST(GmmDenoiser, MatchesQuadratureOracle1d) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const NoiseSchedule s = make_schedule({});
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<oracle::Component1d> comps;
    std::vector<GmmComponent> lib;
    const std::size_t k = support::pick(gen, 1, 3);
    for (std::size_t i = 0; i < k; ++i) {
      const double w = 0.1 + u(gen);
      const double mu = -3.0 + 6.0 * u(gen);
      const double var = u(gen) < 0.2 ? 0.0 : 0.01 + 2.0 * u(gen);
      comps.push_back({w, mu, var});
      lib.push_back({w, scalar(mu), var});
    }
    const GmmDenoiser d(lib);
    const Timestep t = std::uniform_int_distribution<int>(1, 1000)(gen);
    const double x_t = -4.0 + 8.0 * u(gen);
    const double expected = oracle::posterior_mean(comps, x_t, s.alpha_bar(t));
    ASSERT_NEAR(d.posterior_mean(scalar(x_t), t, s)[0], expected, 1e-6) << "trial " << trial << " t=" << t;
  }
}

TEST(GmmDenoiser, FarApartMeansStayFinite) {
  const NoiseSchedule s = make_schedule({});
  const GmmDenoiser d({{0.5, scalar(-1e6), 0.0}, {0.5, scalar(1e6), 0.1}});
  for (Timestep t : {1, 10, 500, 1000}) {
    const double sa = std::sqrt(s.alpha_bar(t));
    const double near_right = d.posterior_mean(scalar(sa * 1e6 - 3.0), t, s)[0];
    EXPECT_TRUE(std::isfinite(near_right));
    EXPECT_GT(near_right, 0.0);
    const double near_left = d.posterior_mean(scalar(-sa * 1e6 + 3.0), t, s)[0];
    EXPECT_NEAR(near_left, -1e6, 1e-6);
  }
}

TEST(GmmDenoiser, WeightsNormalized) {
  const GmmDenoiser d({{3.0, scalar(0.0), 0.0}, {1.0, scalar(1.0), 0.0}, {6.0, scalar(2.0), 0.0}});
  double total = 0.0;
  for (const auto& c : d.components()) total += c.weight;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(d.components()[2].weight, 0.6, 1e-15);

  const double huge = std::numeric_limits<double>::max();
  const GmmDenoiser big({{huge, scalar(0.0), 0.0}, {huge, scalar(1.0), 0.0}});
  EXPECT_EQ(big.components()[0].weight, 0.5);
  const NoiseSchedule s = make_schedule({});
  EXPECT_NEAR(big.posterior_mean(scalar(0.5 * std::sqrt(s.alpha_bar(10))), 10, s)[0], 0.5, 1e-12);
}

TEST(GmmDenoiser, InvalidConstruction) {
  EXPECT_THROW(GmmDenoiser({}), DomainError);
  EXPECT_THROW(GmmDenoiser({{0.0, scalar(0.0), 0.0}}), DomainError);
  EXPECT_THROW(GmmDenoiser({{1.0, scalar(0.0), -1.0}}), DomainError);
  EXPECT_THROW(GmmDenoiser({{1.0, scalar(0.0), 0.0}, {1.0, VideoTensor::zeros({1, 1, 1, 2}), 0.0}}), ShapeError);
}

TEST(GmmDenoiser, RejectsTimestepZeroAndWrongShape) {
  const NoiseSchedule s = make_schedule({});
  const GmmDenoiser d = one_component(0.0, 1.0);
  EXPECT_THROW(d.predict_eps(scalar(1.0), 0, s), DomainError);
  EXPECT_THROW(d.predict_eps(VideoTensor::zeros({1, 1, 1, 2}), 5, s), ShapeError);
}

TEST(GmmDenoiser, SingleFrameMeansApplyPerFrame) {
  std::mt19937_64 gen(4);
  const NoiseSchedule s = make_schedule({});
  const Shape fs{1, 2, 4, 4};
  const GmmDenoiser d = support::random_gmm(fs, gen, 3);
  const VideoTensor video = support::random_tensor({3, 2, 4, 4}, gen);
  const VideoTensor out = d.posterior_mean(video, 250, s);
  for (std::size_t f = 0; f < 3; ++f) {
    const auto frame = video.frame(f);
    const VideoTensor single = d.posterior_mean(VideoTensor(fs, {frame.begin(), frame.end()}), 250, s);
    for (std::size_t j = 0; j < single.size(); ++j) ASSERT_EQ(out.frame(f)[j], single[j]);
  }
}

TEST(ConstantDenoiser, ReturnsFixedEps) {
  const NoiseSchedule s = make_schedule({});
  const VideoTensor c = support::tensor({1, 1, 1, 2}, {0.3, -1.2});
  const ConstantDenoiser d(c);
  EXPECT_EQ(d.predict_eps(VideoTensor::zeros(c.shape()), 17, s), c);
  EXPECT_EQ(d.predict_eps(VideoTensor::filled(c.shape(), 9.0), 900, s), c);
  // The default posterior mean goes through the ε ↔ x₀ relation.
  const VideoTensor x = VideoTensor::filled(c.shape(), 0.5);
  EXPECT_LT(max_abs_diff(d.posterior_mean(x, 17, s), estimate_x0(x, 17, c, s)), 1e-15);
}

TEST(CountingDenoiser, CountsEveryCall) {
  const NoiseSchedule s = make_schedule({});
  const GmmDenoiser inner = one_component(0.0, 1.0);
  CountingDenoiser d(inner);
  for (int i = 0; i < 5; ++i) (void)d.predict_eps(scalar(0.1), 10, s);
  EXPECT_EQ(d.calls(), 5);
  d.reset();
  EXPECT_EQ(d.calls(), 0);
}

TEST(DenoiserIo, GmmSpecRoundTrip) {
  support::TempDir dir;
  vio::write_tensor(scalar(0.25), dir / "a.vnt");
  vio::write_tensor(scalar(-1.0), dir / "b.vnt");
  vio::write_file_atomic(dir / "gmm.json", R"({"components": [
      {"weight": 1, "mean": "a.vnt", "variance": 0.5},
      {"weight": 3, "mean": "b.vnt"}]})");
  const GmmDenoiser d = load_gmm_spec(dir / "gmm.json");
  ASSERT_EQ(d.components().size(), 2u);
  EXPECT_EQ(d.components()[0].weight, 0.25);
  EXPECT_EQ(d.components()[0].mean[0], 0.25);
  EXPECT_EQ(d.components()[0].variance, 0.5);
  EXPECT_EQ(d.components()[1].variance, 0.0);
}

TEST(DenoiserIo, GmmSpecErrors) {
  support::TempDir dir;
  vio::write_tensor(scalar(0.25), dir / "a.vnt");
  vio::write_file_atomic(dir / "extra.json", R"({"components": [{"mean": "a.vnt", "colour": 1}]})");
  EXPECT_THROW(load_gmm_spec(dir / "extra.json"), ConfigError);
  vio::write_file_atomic(dir / "type.json", R"({"components": [{"mean": "a.vnt", "weight": "heavy"}]})");
  EXPECT_THROW(load_gmm_spec(dir / "type.json"), ConfigError);
  vio::write_file_atomic(dir / "syntax.json", R"({"components": [)");
  EXPECT_THROW(load_gmm_spec(dir / "syntax.json"), ConfigError);
  vio::write_file_atomic(dir / "missing.json", R"({"components": [{"mean": "nope.vnt"}]})");
  EXPECT_THROW(load_gmm_spec(dir / "missing.json"), IoError);
}

TEST(DenoiserIo, DatasetFramesBecomeComponents) {
  support::TempDir dir;
  std::mt19937_64 gen(6);
  const VideoTensor frames = support::random_tensor({5, 3, 4, 6}, gen, 0.0, 1.0);
  vio::write_video(frames, dir.path());
  const GmmDenoiser d = load_dataset_denoiser(dir.path(), 0.01);
  ASSERT_EQ(d.components().size(), 5u);
  EXPECT_EQ(d.component_shape(), (Shape{1, 3, 4, 6}));
  EXPECT_NEAR(d.components()[3].weight, 0.2, 1e-15);
  EXPECT_EQ(d.components()[3].variance, 0.01);
  EXPECT_NEAR(d.components()[3].mean[7], frames.frame(3)[7], 0.5 / 255.0 + 1e-12);
}
