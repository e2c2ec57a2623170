#pragma once

// Velocity-threshold gesture parsing. Onset and Target sit where the speed
// toward constriction crosses a fraction of its peak; Release and Offset do
// the same for the movement away from constriction.

#include <span>
#include <string>

#include "artic/error.h"
#include "artic/task_dynamics.h"

namespace artic {

// Which way "toward constriction" moves on the channel.
enum class Direction { kIncreasing, kDecreasing };

struct VelocityPeak {
  double velocity_mm_s = 0.0;  // signed
  double time_ms = 0.0;
};

struct GestureLandmarks {
  double onset_ms = 0.0;
  double target_ms = 0.0;
  double release_ms = 0.0;
  double offset_ms = 0.0;
  VelocityPeak peak_to;
  VelocityPeak peak_away;
  Direction direction = Direction::kIncreasing;
};

class LandmarkError : public DataError {
 public:
  enum class Kind { kNoMovement, kNoReturnMovement, kThresholdNotCrossed, kBadWindow, kBadThreshold };

  LandmarkError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct TimeWindow {
  double start_ms = 0.0;
  double end_ms = 0.0;
};

inline constexpr double kDefaultThreshold = 0.2;
inline constexpr double kDefaultVelocityFloor = 5.0;  // mm/s

// Parses the dominant movement toward constriction inside the window and the
// subsequent movement away from it. Crossing times are linearly
// interpolated between samples.
GestureLandmarks find_gesture(const Trajectory& traj, TimeWindow window, Direction direction,
                              double threshold = kDefaultThreshold,
                              double velocity_floor_mm_s = kDefaultVelocityFloor);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct SensorTrace {
  double sample_rate_hz = 200.0;
  double t0_ms = 0.0;
  std::vector<Point2> points;
};

// Lip aperture as the pointwise Euclidean distance between two sensors.
Trajectory compute_la(const SensorTrace& upper, const SensorTrace& lower);

}  // namespace artic
