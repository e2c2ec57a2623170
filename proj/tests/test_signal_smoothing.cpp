#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "artic/error.h"
#include "artic/signal_smoothing.h"

using namespace artic;

namespace {

Eigen::MatrixXd second_difference(int n) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 2, n);
  for (int i = 0; i < n - 2; ++i) {
    d(i, i) = 1.0;
    d(i, i + 1) = -2.0;
    d(i, i + 2) = 1.0;
  }
  return d;
}

// Dense reference: x = (W + s D'D)^-1 W y.
std::vector<double> dense_smooth(const std::vector<double>& y, const std::vector<double>& w, double s) {
  const int n = static_cast<int>(y.size());
  const Eigen::MatrixXd d = second_difference(n);
  Eigen::MatrixXd a = s * d.transpose() * d;
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    a(i, i) += w[static_cast<std::size_t>(i)];
    b(i) = w[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd x = a.fullPivLu().solve(b);
  return {x.data(), x.data() + n};
}

double dense_trace(int n, double s) {
  const Eigen::MatrixXd d = second_difference(n);
  const Eigen::MatrixXd h =
      (Eigen::MatrixXd::Identity(n, n) + s * d.transpose() * d).inverse();
  return h.trace();
}

std::vector<double> noisy_sine(std::uint64_t seed, std::size_t n, double sd, std::vector<double>* truth) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sd);
  std::vector<double> y(n);
  truth->resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    (*truth)[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    y[i] = (*truth)[i] + noise(rng);
  }
  return y;
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace

TEST(Smooth, MatchesDenseSolve) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  for (int n : {3, 4, 7, 50}) {
    std::vector<double> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = g(rng);
    for (double s : {0.01, 1.0, 100.0, 1e5}) {
      const auto x = smooth(y, s);
      const auto ref = dense_smooth(y, std::vector<double>(y.size(), 1.0), s);
      for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(x[i], ref[i], 1e-8 * (1 + std::abs(ref[i])));
    }
  }
}

TEST(Smooth, WeightedMatchesDenseSolve) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> y(40), w(40);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = g(rng);
    w[i] = i % 7 == 0 ? 0.0 : u(rng);
  }
  for (double s : {0.1, 10.0, 1e4}) {
    const auto x = smooth_weighted(y, w, s);
    const auto ref = dense_smooth(y, w, s);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(x[i], ref[i], 1e-7 * (1 + std::abs(ref[i])));
  }
}

TEST(Smooth, ZeroPenaltyIsIdentity) {
  std::vector<double> truth;
  const auto y = noisy_sine(3, 101, 0.2, &truth);
  const auto x = smooth(y, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(x[i], y[i], 1e-9);
}

TEST(Smooth, ConstantsAndLinesAreFixedPoints) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> coef(-50, 50);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = coef(rng), b = coef(rng) / 10.0;
    std::vector<double> line(80);
    for (std::size_t i = 0; i < line.size(); ++i) line[i] = a + b * static_cast<double>(i);
    for (double s : {1e-2, 1.0, 1e3, 1e6}) {
      const auto x = smooth(line, s);
      for (std::size_t i = 0; i < line.size(); ++i) EXPECT_NEAR(x[i], line[i], 1e-6);
    }
  }
}

TEST(Smooth, InputValidation) {
  EXPECT_THROW(smooth(std::vector<double>{1, 2}, 1.0), DataError);
  EXPECT_THROW(smooth(std::vector<double>{1, NAN, 2}, 1.0), DataError);
  EXPECT_THROW(smooth(std::vector<double>{1, 2, 3}, -1.0), ConfigError);
}

TEST(HatTrace, MatchesDenseInverse) {
  for (int n : {3, 5, 20, 60}) {
    for (double s : {0.0, 0.5, 10.0, 1e4}) {
      EXPECT_NEAR(hat_trace(static_cast<std::size_t>(n), s), dense_trace(n, s), 1e-8) << n << " " << s;
    }
  }
}

TEST(HatTrace, BetweenTwoAndN) {
  for (double s : {1e-3, 1.0, 1e8}) {
    const double t = hat_trace(100, s);
    EXPECT_GT(t, 2.0 - 1e-6);
    EXPECT_LE(t, 100.0 + 1e-9);
  }
}

TEST(Gcv, GridIsLogSpaced) {
  const auto g = default_penalty_grid();
  ASSERT_EQ(g.size(), 20u);
  EXPECT_NEAR(g.front(), 1e-2, 1e-15);
  EXPECT_NEAR(g.back(), 1e6, 1e-6);
  for (std::size_t i = 2; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], g[1] / g[0], 1e-9);
}

TEST(Gcv, SmoothingReducesErrorOnNoisySine) {
  const auto grid = default_penalty_grid();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<double> truth;
    const auto y = noisy_sine(seed, 200, 0.2, &truth);
    const auto x = smooth(y, gcv_select(y, grid));
    EXPECT_LT(rmse(x, truth), 0.7 * rmse(y, truth)) << "seed " << seed;
  }
}

TEST(Bisquare, WeightsInUnitIntervalAndOutliersZeroed) {
  std::vector<double> r = {0.1, -0.2, 0.05, 0.0, -0.1, 0.15, 50.0};
  const auto w = bisquare_weights(r);
  for (double x : w) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
  EXPECT_DOUBLE_EQ(w.back(), 0.0);
  EXPECT_GT(w[3], 0.9);
  const auto flat = bisquare_weights(std::vector<double>(10, 0.0));
  for (double x : flat) EXPECT_DOUBLE_EQ(x, 1.0);
}

TEST(RobustSmooth, ResistsSpikes) {
  std::vector<double> truth;
  auto y = noisy_sine(9, 200, 0.05, &truth);
  const auto grid = default_penalty_grid();
  const auto clean_fit = smooth(y, gcv_select(y, grid));
  y[50] += 5.0;
  y[120] -= 5.0;
  const auto robust = robust_smooth(y, grid);
  EXPECT_LT(std::abs(robust[50] - truth[50]), 0.1);
  EXPECT_LT(std::abs(robust[120] - truth[120]), 0.1);
  EXPECT_LT(rmse(robust, truth), 2.0 * rmse(clean_fit, truth));
}

TEST(RobustSmooth, NoiseFreeSignalKeepsShape) {
  std::vector<double> y(161);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = std::max(0.0, static_cast<double>(i) * 5.0 - 150.0) / 1000.0;
    y[i] = 15.0 - 15.0 * (1.0 - (1.0 + 40.0 * t) * std::exp(-40.0 * t));
  }
  const auto x = robust_smooth(y, default_penalty_grid());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(x[i], y[i], 0.05);
}

TEST(Velocity, CentralDifferencesOfQuadratic) {
  std::vector<double> y(11);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.5 * static_cast<double>(i * i);
  const auto v = velocity(y, 1000.0);
  for (std::size_t i = 1; i + 1 < y.size(); ++i) EXPECT_NEAR(v[i], 1000.0 * static_cast<double>(i), 1e-9);
  EXPECT_NEAR(v.front(), 500.0, 1e-9);
  EXPECT_THROW(velocity(std::vector<double>{1, 2}, 200.0), DataError);
}

TEST(Noise, ZeroModelIsIdentity) {
  Trajectory t{"LA", 200, 0, {1.0, 2.0, 3.0}};
  auto rng = keyed_stream(1, {2, 3});
  const auto before = t.samples;
  add_measurement_noise(t, 0.0, rng);
  EXPECT_EQ(t.samples, before);
  EXPECT_EQ(gaussian(rng, 0.0), 0.0);
  const NoiseModel zero{0, 0, 0, 0, 9};
  EXPECT_TRUE(zero.is_zero());
}

TEST(Noise, KeyedStreamsAreReproducibleAndDistinct) {
  auto a = keyed_stream(42, {1, 2, 3});
  auto b = keyed_stream(42, {1, 2, 3});
  auto c = keyed_stream(42, {1, 3, 2});
  auto d = keyed_stream(43, {1, 2, 3});
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

TEST(Noise, MeasurementNoiseHasRequestedSpread) {
  Trajectory t{"LA", 200, 0, std::vector<double>(20000, 0.0)};
  auto rng = keyed_stream(5, {1});
  add_measurement_noise(t, 0.3, rng);
  double ss = 0.0;
  for (double x : t.samples) ss += x * x;
  EXPECT_NEAR(std::sqrt(ss / static_cast<double>(t.samples.size())), 0.3, 0.01);
}
