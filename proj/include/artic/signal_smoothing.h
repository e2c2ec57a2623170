#pragma once

// Penalized least-squares smoothing with GCV-selected penalty, its robust
// (bisquare-reweighted) variant, differentiation, and the noise model used to
// synthesise tokens.
//
// The smoother solves   argmin_x |y - x|^2_W + s |D2 x|^2
// with D2 the (n-2) x n second-difference operator, so constants and straight
// lines pass through unchanged for every s.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "artic/task_dynamics.h"

namespace artic {

// Throws DataError on fewer than 3 samples or non-finite input and
// ConfigError on s < 0.
std::vector<double> smooth(std::span<const double> y, double s);

// Weighted variant: solves (W + s D2'D2) x = W y. Weights must be >= 0 with
// at least two positive.
std::vector<double> smooth_weighted(std::span<const double> y, std::span<const double> weights,
                                    double s);

// Trace of the unweighted hat matrix (I + s D2'D2)^-1, i.e. sum_i 1/(1 + s mu_i)
// over the eigenvalues mu_i of D2'D2.
double hat_trace(std::size_t n, double s);

// GCV(s) = (|y - x_s|^2 / n) / (1 - tr(H_s)/n)^2. Throws DataError when
// tr(H_s) >= n.
double gcv_score(std::span<const double> y, double s);

// 20 log-spaced values over [1e-2, 1e6].
std::vector<double> default_penalty_grid();

// Grid value with the smallest GCV score (first one on ties).
double gcv_select(std::span<const double> y, std::span<const double> grid);

// Tukey bisquare weights (1 - (r / (4.685 * MAD / 0.6745))^2)^2, clipped at
// zero. Residuals with zero spread give unit weights. The cutoff is never
// below min_cut.
std::vector<double> bisquare_weights(std::span<const double> residuals, double min_cut = 0.0);

// Plain GCV smooth followed by `iterations` bisquare reweighting passes, each
// refitting with a penalty chosen by weighted GCV. The bisquare cutoff is
// floored at 1e-3 of the data range so noise-free input is not downweighted
// for its own smoothing bias.
std::vector<double> robust_smooth(std::span<const double> y, std::span<const double> grid,
                                  int iterations = 3);

// Central differences inside, one-sided at the ends, in mm/s.
std::vector<double> velocity(const Trajectory& traj);
std::vector<double> velocity(std::span<const double> samples, double sample_rate_hz);

// ---------------------------------------------------------------------------
// Noise model
// ---------------------------------------------------------------------------

struct NoiseModel {
  double position_sd_mm = 0.1;       // additive white measurement noise
  double duration_jitter_sd = 0.15;  // lognormal sd on activation durations
  double timing_jitter_sd_ms = 8.0;  // Gaussian sd on activation onsets
  double target_jitter_sd_mm = 0.5;
  std::uint64_t seed = 20240501;

  bool is_zero() const {
    return position_sd_mm == 0.0 && duration_jitter_sd == 0.0 && timing_jitter_sd_ms == 0.0 &&
           target_jitter_sd_mm == 0.0;
  }
};

// Counter-based stream: the generator state depends only on the seed and the
// key, never on how many other streams were drawn before.
std::mt19937_64 keyed_stream(std::uint64_t seed, std::span<const std::uint64_t> key);
std::mt19937_64 keyed_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> key);

// Gaussian draw with the given sd; returns exactly 0 without consuming the
// generator when sd == 0.
double gaussian(std::mt19937_64& rng, double sd);

// Adds white noise in place; sd == 0 leaves samples bit-identical.
void add_measurement_noise(Trajectory& traj, double sd_mm, std::mt19937_64& rng);

}  // namespace artic
