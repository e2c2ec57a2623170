#include "artic/signal_smoothing.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "artic/error.h"

namespace artic {

namespace {

void check_input(std::span<const double> y) {
  if (y.size() < 3) throw DataError(fmt::format("smoothing needs >= 3 samples, got {}", y.size()));
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("smoothing input contains non-finite samples");
  }
}

// Symmetric pentadiagonal matrix stored by its three upper bands.
struct Pentadiagonal {
  std::vector<double> d;   // A(i, i)
  std::vector<double> e1;  // A(i, i + 1)
  std::vector<double> e2;  // A(i, i + 2)
};

// W + s * D2'D2, assembled row by row of D2 = [1 -2 1].
Pentadiagonal penalized_system(std::span<const double> weights, double s) {
  const std::size_t n = weights.size();
  Pentadiagonal a{std::vector<double>(weights.begin(), weights.end()),
                  std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  constexpr double kRow[3] = {1.0, -2.0, 1.0};
  for (std::size_t r = 0; r + 2 < n; ++r) {
    for (int p = 0; p < 3; ++p) {
      a.d[r + p] += s * kRow[p] * kRow[p];
      if (p < 2) a.e1[r + p] += s * kRow[p] * kRow[p + 1];
    }
    a.e2[r] += s * kRow[0] * kRow[2];
  }
  return a;
}

// LDL' solve for a symmetric positive definite pentadiagonal system.
std::vector<double> solve_pentadiagonal(const Pentadiagonal& a, std::vector<double> b) {
  const std::size_t n = a.d.size();
  std::vector<double> diag(n), l1(n, 0.0), l2(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= 2) l2[i] = a.e2[i - 2] / diag[i - 2];
    if (i >= 1) {
      const double carry = i >= 2 ? l2[i] * diag[i - 2] * l1[i - 1] : 0.0;
      l1[i] = (a.e1[i - 1] - carry) / diag[i - 1];
    }
    diag[i] = a.d[i];
    if (i >= 1) diag[i] -= l1[i] * l1[i] * diag[i - 1];
    if (i >= 2) diag[i] -= l2[i] * l2[i] * diag[i - 2];
    if (!(diag[i] > 0.0)) throw DataError("penalized system is not positive definite");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= 1) b[i] -= l1[i] * b[i - 1];
    if (i >= 2) b[i] -= l2[i] * b[i - 2];
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= diag[i];
  for (std::size_t k = n; k-- > 0;) {
    if (k + 1 < n) b[k] -= l1[k + 1] * b[k + 1];
    if (k + 2 < n) b[k] -= l2[k + 2] * b[k + 2];
  }
  return b;
}

// Eigenvalues of D2'D2, cached per length.
const std::vector<double>& penalty_eigenvalues(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::vector<double>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r + 2 < n; ++r) {
    const double row[3] = {1.0, -2.0, 1.0};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        p(static_cast<Eigen::Index>(r + i), static_cast<Eigen::Index>(r + j)) += row[i] * row[j];
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(p, Eigen::EigenvaluesOnly);
  std::vector<double> mu_values(solver.eigenvalues().data(),
                                solver.eigenvalues().data() + solver.eigenvalues().size());
  for (double& m : mu_values) m = std::max(m, 0.0);
  return cache.emplace(n, std::move(mu_values)).first->second;
}

double weighted_gcv(std::span<const double> y, std::span<const double> w, double s) {
  const std::size_t n = y.size();
  const auto x = smooth_weighted(y, w, s);
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) rss += w[i] * (y[i] - x[i]) * (y[i] - x[i]);
  const double frac = 1.0 - hat_trace(n, s) / static_cast<double>(n);
  if (!(frac > 0.0)) throw DataError("GCV is degenerate: trace(H) >= n");
  return rss / static_cast<double>(n) / (frac * frac);
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<double> smooth(std::span<const double> y, double s) {
  const std::vector<double> ones(y.size(), 1.0);
  return smooth_weighted(y, ones, s);
}

std::vector<double> smooth_weighted(std::span<const double> y, std::span<const double> weights,
                                    double s) {
  check_input(y);
  if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError(fmt::format("penalty s = {} must be >= 0", s));
  if (weights.size() != y.size()) throw DataError("weights and samples differ in length");
  std::size_t positive = 0;
  std::vector<double> rhs(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw DataError("weights must be >= 0");
    if (weights[i] > 0.0) ++positive;
    rhs[i] = weights[i] * y[i];
  }
  if (positive < 2) throw DataError("weighted smoothing needs >= 2 positive weights");
  if (s == 0.0 && positive == y.size()) return {y.begin(), y.end()};
  return solve_pentadiagonal(penalized_system(weights, s), std::move(rhs));
}

double hat_trace(std::size_t n, double s) {
  double tr = 0.0;
  for (double mu : penalty_eigenvalues(n)) tr += 1.0 / (1.0 + s * mu);
  return tr;
}

double gcv_score(std::span<const double> y, double s) {
  const std::vector<double> ones(y.size(), 1.0);
  return weighted_gcv(y, ones, s);
}

std::vector<double> default_penalty_grid() {
  constexpr int kPoints = 20;
  std::vector<double> grid(kPoints);
  for (int i = 0; i < kPoints; ++i) grid[i] = std::pow(10.0, -2.0 + 8.0 * i / (kPoints - 1));
  return grid;
}

double gcv_select(std::span<const double> y, std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("empty penalty grid");
  double best_s = grid.front();
  double best = std::numeric_limits<double>::infinity();
  for (double s : grid) {
    const double score = gcv_score(y, s);
    if (score < best) {
      best = score;
      best_s = s;
    }
  }
  return best_s;
}

std::vector<double> bisquare_weights(std::span<const double> residuals, double min_cut) {
  std::vector<double> r(residuals.begin(), residuals.end());
  const double med = median(r);
  std::vector<double> dev(r.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    dev[i] = std::abs(r[i] - med);
    scale = std::max(scale, std::abs(r[i]));
  }
  const double mad = median(dev);
  std::vector<double> w(r.size(), 1.0);
  if (!(mad > 1e-12 * std::max(scale, 1.0))) return w;
  const double cut = std::max(4.685 * mad / 0.6745, min_cut);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double u = r[i] / cut;
    w[i] = std::abs(u) < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
  }
  return w;
}

std::vector<double> robust_smooth(std::span<const double> y, std::span<const double> grid,
                                  int iterations) {
  if (iterations < 1) throw ConfigError("robust_smooth needs >= 1 iteration");
  if (grid.empty()) throw ConfigError("empty penalty grid");
  check_input(y);
  std::vector<double> x = smooth(y, gcv_select(y, grid));
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double min_cut = 1e-3 * (*hi - *lo);
  std::vector<double> resid(y.size());
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < y.size(); ++i) resid[i] = y[i] - x[i];
    const auto w = bisquare_weights(resid, min_cut);
    double best_s = grid.front();
    double best = std::numeric_limits<double>::infinity();
    for (double s : grid) {
      const double score = weighted_gcv(y, w, s);
      if (score < best) {
        best = score;
        best_s = s;
      }
    }
    x = smooth_weighted(y, w, best_s);
  }
  return x;
}

std::vector<double> velocity(std::span<const double> y, double sample_rate_hz) {
  const std::size_t n = y.size();
  if (n < 3) throw DataError(fmt::format("velocity needs >= 3 samples, got {}", n));
  std::vector<double> v(n);
  v[0] = (y[1] - y[0]) * sample_rate_hz;
  v[n - 1] = (y[n - 1] - y[n - 2]) * sample_rate_hz;
  for (std::size_t i = 1; i + 1 < n; ++i) v[i] = 0.5 * (y[i + 1] - y[i - 1]) * sample_rate_hz;
  return v;
}

std::vector<double> velocity(const Trajectory& traj) {
  return velocity(traj.samples, traj.sample_rate_hz);
}

std::mt19937_64 keyed_stream(std::uint64_t seed, std::span<const std::uint64_t> key) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : key) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return std::mt19937_64(h);
}

std::mt19937_64 keyed_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
  return keyed_stream(seed, std::span<const std::uint64_t>(key.begin(), key.size()));
}

double gaussian(std::mt19937_64& rng, double sd) {
  if (sd == 0.0) return 0.0;
  std::normal_distribution<double> dist(0.0, sd);
  return dist(rng);
}

void add_measurement_noise(Trajectory& traj, double sd_mm, std::mt19937_64& rng) {
  if (sd_mm == 0.0) return;
  for (double& v : traj.samples) v += gaussian(rng, sd_mm);
}

}  // namespace artic
