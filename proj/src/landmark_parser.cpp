#include "artic/landmark_parser.h"

#include <cmath>

#include <fmt/format.h>

#include "artic/signal_smoothing.h"

namespace artic {

namespace {

using Kind = LandmarkError::Kind;

// Time at which the linear segment between samples i and i+1 meets level.
double crossing_time(const Trajectory& traj, std::span<const double> v, std::size_t i,
                     double level) {
  const double dv = v[i + 1] - v[i];
  const double frac = dv == 0.0 ? 0.0 : (level - v[i]) / dv;
  return traj.time_at(i) + frac * traj.period_ms();
}

}  // namespace

GestureLandmarks find_gesture(const Trajectory& traj, TimeWindow window, Direction direction,
                              double threshold, double velocity_floor_mm_s) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw LandmarkError(Kind::kBadThreshold, fmt::format("threshold {} outside (0, 1)", threshold));
  }
  if (traj.samples.size() < 3) {
    throw LandmarkError(Kind::kBadWindow, "trajectory has fewer than 3 samples");
  }
  constexpr double kEps = 1e-9;
  if (!(window.start_ms < window.end_ms) || window.start_ms < traj.t0_ms - kEps ||
      window.end_ms > traj.end_ms() + kEps) {
    throw LandmarkError(Kind::kBadWindow,
                        fmt::format("window [{}, {}] ms outside trajectory [{}, {}] ms",
                                    window.start_ms, window.end_ms, traj.t0_ms, traj.end_ms()));
  }
  const double period = traj.period_ms();
  const auto first = static_cast<std::size_t>(std::ceil((window.start_ms - traj.t0_ms) / period - kEps));
  const auto last = std::min(
      traj.samples.size() - 1,
      static_cast<std::size_t>(std::floor((window.end_ms - traj.t0_ms) / period + kEps)));
  if (last < first + 2) throw LandmarkError(Kind::kBadWindow, "window spans fewer than 3 samples");

  // Velocity projected on the constriction direction.
  const double sign = direction == Direction::kIncreasing ? 1.0 : -1.0;
  std::vector<double> toward = velocity(traj);
  for (double& v : toward) v *= sign;

  std::size_t peak = first;
  for (std::size_t i = first; i <= last; ++i) {
    if (toward[i] > toward[peak]) peak = i;
  }
  if (!(toward[peak] >= velocity_floor_mm_s)) {
    throw LandmarkError(Kind::kNoMovement,
                        fmt::format("{}: peak velocity toward constriction {:.3f} mm/s below floor",
                                    traj.channel, toward[peak]));
  }
  const double level_to = threshold * toward[peak];

  std::size_t i = peak;
  while (i > first && toward[i - 1] >= level_to) --i;
  if (i == first) {
    throw LandmarkError(Kind::kThresholdNotCrossed, fmt::format("{}: no Onset crossing in window", traj.channel));
  }
  const double onset = crossing_time(traj, toward, i - 1, level_to);

  std::size_t j = peak;
  while (j < last && toward[j + 1] >= level_to) ++j;
  if (j == last) {
    throw LandmarkError(Kind::kThresholdNotCrossed, fmt::format("{}: no Target crossing in window", traj.channel));
  }
  const double target = crossing_time(traj, toward, j, level_to);

  // Movement away from constriction after the Target.
  std::vector<double> away(toward.size());
  for (std::size_t k = 0; k < toward.size(); ++k) away[k] = -toward[k];
  std::size_t peak_away = j + 1;
  for (std::size_t k = j + 1; k <= last; ++k) {
    if (away[k] > away[peak_away]) peak_away = k;
  }
  if (!(away[peak_away] >= velocity_floor_mm_s)) {
    throw LandmarkError(Kind::kNoReturnMovement,
                        fmt::format("{}: no movement away from constriction in window", traj.channel));
  }
  const double level_away = threshold * away[peak_away];

  std::size_t r = peak_away;
  while (r > j && away[r - 1] >= level_away) --r;
  const double release = crossing_time(traj, away, r - 1, level_away);

  std::size_t o = peak_away;
  while (o < last && away[o + 1] >= level_away) ++o;
  if (o == last) {
    throw LandmarkError(Kind::kThresholdNotCrossed, fmt::format("{}: no Offset crossing in window", traj.channel));
  }
  const double offset = crossing_time(traj, away, o, level_away);

  return GestureLandmarks{.onset_ms = onset,
                          .target_ms = target,
                          .release_ms = release,
                          .offset_ms = offset,
                          .peak_to = {sign * toward[peak], traj.time_at(peak)},
                          .peak_away = {-sign * away[peak_away], traj.time_at(peak_away)},
                          .direction = direction};
}

Trajectory compute_la(const SensorTrace& upper, const SensorTrace& lower) {
  if (upper.points.size() != lower.points.size()) {
    throw DataError(fmt::format("sensor traces differ in length ({} vs {})", upper.points.size(),
                                lower.points.size()));
  }
  if (upper.sample_rate_hz != lower.sample_rate_hz) throw DataError("sensor traces differ in sample rate");
  Trajectory la{"LA", upper.sample_rate_hz, upper.t0_ms, {}};
  la.samples.reserve(upper.points.size());
  for (std::size_t i = 0; i < upper.points.size(); ++i) {
    la.samples.push_back(std::hypot(upper.points[i].x - lower.points[i].x,
                                    upper.points[i].y - lower.points[i].y));
  }
  return la;
}

}  // namespace artic
