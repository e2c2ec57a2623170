#pragma once

// Critically damped tract-variable dynamics driven by a gestural score.
//
//   x'' = k* (x0* - x) - 2 zeta sqrt(k*) x'
//
// where (x0*, k*, zeta) blend the gestures active on the tract variable.

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "artic/gestural_score.h"

namespace artic {

struct BlendedParams {
  double target_mm = 0.0;
  double stiffness_s2 = 0.0;
  double damping_ratio = 1.0;
};

// Blending-strength weighted means of target and stiffness; damping is the
// largest of the active gestures. Throws ConfigError on an empty list or on
// gestures from different tract variables.
BlendedParams blend_parameters(std::span<const Gesture> active);

// Uniformly sampled 1-D kinematic channel.
struct Trajectory {
  std::string channel;
  double sample_rate_hz = 200.0;
  double t0_ms = 0.0;
  std::vector<double> samples;

  double period_ms() const { return 1000.0 / sample_rate_hz; }
  double time_at(std::size_t i) const { return t0_ms + static_cast<double>(i) * period_ms(); }
  double end_ms() const { return samples.empty() ? t0_ms : time_at(samples.size() - 1); }
};

inline constexpr double kDefaultRelaxationStiffness = 100.0;

// Fixed-step RK4 from rest at the neutral values. Step boundaries are aligned
// with every activation edge and output sample, so blended parameters are
// constant within a step. Throws ConfigError on an invalid score or dt and
// DataError on divergence.
std::map<TractVar, Trajectory> integrate(
    const GesturalScore& score, double dt_ms,
    double relaxation_stiffness_s2 = kDefaultRelaxationStiffness);

struct StepState {
  double position_mm = 0.0;  // displacement from the start value
  double velocity_mm_s = 0.0;
};

// Closed-form critically damped step response from rest:
//   x(t) = delta (1 - (1 + w t) e^{-w t}),  v(t) = delta w^2 t e^{-w t}.
// Throws std::domain_error for negative t.
StepState analytic_step_response(double delta_mm, double omega_n, double t_ms);

// CSV with header t_ms,<channel>... and 6 decimal places. All trajectories
// must share sample rate, start time and length.
void write_trajectory_csv(std::ostream& out, const std::vector<Trajectory>& channels);
void write_trajectory_csv(std::ostream& out, const std::map<TractVar, Trajectory>& channels);
// Throws DataError on malformed input or a non-uniform time column.
std::vector<Trajectory> read_trajectory_csv(std::istream& in);

}  // namespace artic
