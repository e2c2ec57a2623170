#pragma once

// Data model for articulatory gestures and gestural scores.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace artic {

// Controlled vocal-tract dimensions. TB_CL is positive toward the front.
enum class TractVar { kLA, kTbCl, kTbCd };

std::string_view to_string(TractVar tv);
std::optional<TractVar> tract_var_from_string(std::string_view name);

struct TractVariable {
  TractVar name = TractVar::kLA;
  double neutral_mm = 0.0;  // rest value when no gesture is active
};

struct Gesture {
  std::string id;
  TractVar tract_variable = TractVar::kLA;
  double target_mm = 0.0;
  double stiffness_s2 = 400.0;  // k; natural frequency is sqrt(k)
  double damping_ratio = 1.0;
  double blending_strength = 1.0;
  double t_on_ms = 0.0;
  double t_off_ms = 0.0;
  std::string descriptor;

  bool active_at(double t_ms) const { return t_on_ms <= t_ms && t_ms < t_off_ms; }
  double natural_frequency() const;
};

struct GesturalScore {
  std::vector<TractVariable> tract_variables;
  std::vector<Gesture> gestures;
  double duration_ms = 0.0;
  double sample_rate_hz = 200.0;

  const TractVariable* find_tract_variable(TractVar tv) const;
  const Gesture* find_gesture(std::string_view id) const;
  Gesture* find_gesture(std::string_view id);
};

bool operator==(const TractVariable& a, const TractVariable& b);
bool operator==(const Gesture& a, const Gesture& b);
bool operator==(const GesturalScore& a, const GesturalScore& b);

struct Violation {
  std::string subject;  // gesture id, tract variable name, or "score"
  std::string reason;
};

constexpr double kMinActivationMs = 10.0;
constexpr double kMinSampleRateHz = 100.0;

// Reports every invariant violation; an empty result means the score is valid.
std::vector<Violation> validate_score(const GesturalScore& score);

// Gesture ids active at t (t_on <= t < t_off), grouped by tract variable.
// Throws std::out_of_range when t lies outside [0, duration].
std::map<TractVar, std::vector<std::string>> active_gestures(const GesturalScore& score,
                                                             double t_ms);

// ---------------------------------------------------------------------------
// Preset scenarios
// ---------------------------------------------------------------------------

enum class Condition { kUnderlying, kAssimilatory, kSequence };

std::string_view to_string(Condition c);
// Throws ConfigError on an unknown name.
Condition condition_from_string(std::string_view name);

// Speaker-level parameters for the preset scores. Spatial values are scale
// conventions: only the signs and orderings of the targets carry meaning.
struct ScenarioParams {
  double duration_ms = 800.0;
  double sample_rate_hz = 200.0;

  double la_neutral_mm = 15.0;
  double tb_cl_neutral_mm = 0.0;
  double tb_cd_neutral_mm = 10.0;

  double labial_target_mm = 0.0;    // lip closure
  double palatal_target_mm = 12.0;  // tongue body fronting
  double velar_target_mm = -1.5;    // tongue body retraction

  double labial_stiffness_s2 = 1600.0;
  double palatal_stiffness_s2 = 1600.0;
  double velar_stiffness_s2 = 25600.0;

  double labial_blending = 1.0;
  double palatal_blending = 8.0;
  double velar_blending = 1.0;

  // Activation lasts until the parsed Target landmark plus a hold; the
  // scale factors carry multiplicative duration jitter.
  double hold_ms = 80.0;
  double labial_duration_scale = 1.0;
  double palatal_duration_scale = 1.0;

  double labial_onset_ms = 150.0;
  // Extra shift of the palatal onset relative to its coupled time (jitter).
  double palatal_onset_shift_ms = 0.0;
  // ASSIMILATORY: palatal onset lags the labial onset by this much.
  double eccentric_delay_ms = 25.0;
  // SEQUENCE: palatal onset = labial offset + this constant.
  double sequence_offset_ms = -60.0;
  // SEQUENCE: also add a velar gesture in-phase with the labial gesture.
  bool sequence_with_velar = false;

  bool include_vowel = false;
  double vowel_target_mm = -4.0;
  double vowel_activation_ms = 200.0;
};

// Activation duration whose movement reaches the 20%-of-peak-velocity Target
// landmark, plus the hold.
double activation_duration_ms(double stiffness_s2, double hold_ms);

// Gesture ids used by the presets.
inline constexpr std::string_view kLabialId = "lab";
inline constexpr std::string_view kPalatalId = "pal";
inline constexpr std::string_view kVelarId = "vel";
inline constexpr std::string_view kVowelId = "vow";

GesturalScore preset_scenario(Condition condition, const ScenarioParams& params);
GesturalScore preset_scenario(std::string_view name, const ScenarioParams& params);

// ---------------------------------------------------------------------------
// Score file (JSON)
// ---------------------------------------------------------------------------

std::string score_to_json(const GesturalScore& score);
// Throws ConfigError on malformed input.
GesturalScore score_from_json(std::string_view text);
GesturalScore read_score_file(const std::string& path);
void write_score_file(const std::string& path, const GesturalScore& score);

}  // namespace artic
