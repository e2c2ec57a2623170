#pragma once

// End-to-end scenario runner: simulated speakers produce noisy tokens that go
// through smoothing, landmark parsing and the coordination diagnostics.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artic/coupling_planner.h"
#include "artic/diagnostics.h"
#include "artic/gestural_score.h"
#include "artic/signal_smoothing.h"
#include "artic/task_dynamics.h"

namespace artic {

struct SpeakerVariation {
  double stiffness_rel_sd = 0.15;  // one multiplier per speaker, shared by all gestures
  double target_sd_mm = 1.0;
};

// How the eccentric palatal delay reaches the score.
enum class TimingRoute { kActivation, kCoupling };

struct ScenarioConfig {
  int n_speakers = 4;
  int tokens_per_condition = 144;
  std::vector<Condition> conditions = {Condition::kUnderlying, Condition::kAssimilatory,
                                       Condition::kSequence};
  double eccentric_delay_ms = 25.0;
  double velar_blending_strength = 1.0;
  SpeakerVariation speaker_variation;
  NoiseModel noise;
  std::uint64_t seed = 20240501;
  double sample_rate_hz = 200.0;
  double dt_ms = 0.5;
  double relaxation_stiffness_s2 = 1600.0;
  TimingRoute timing_route = TimingRoute::kActivation;
  std::vector<std::string> items = {"item1"};
  int n_perm = kDefaultPermutations;
  double parse_window_margin_ms = 150.0;
  ScenarioParams params;  // speaker-level means before variation
};

// Throws ConfigError describing the first problem.
void validate_config(const ScenarioConfig& config);

// JSON with the ScenarioConfig field names; omitted keys keep their defaults
// and unknown keys are rejected. `noise.seed` defaults to `seed`.
ScenarioConfig config_from_json(std::string_view text);
ScenarioConfig read_config_file(const std::string& path);
std::string config_to_json(const ScenarioConfig& config);

// Per speaker x condition regression of lag on g1 duration in raw units;
// speaker "ALL" rows hold the pooled within-speaker z-scored regression.
struct SummaryRow {
  std::string speaker;
  Condition condition = Condition::kUnderlying;
  RegressionResult regression;
  bool degenerate = false;
  double mean_lag_ms = 0.0;
  double mean_tb_z = 0.0;
};

struct SpeakerContrast {
  std::string speaker;
  Contrast tb_mm;
  std::optional<Contrast> tb_z;
};

struct ExclusionCounts {
  std::size_t total = 0;
  std::size_t parse_failures = 0;
  std::size_t duration = 0;  // tokens flagged on g1 duration
  std::size_t lag = 0;       // tokens flagged on lag
  double duration_fraction() const { return total ? double(duration) / double(total) : 0.0; }
  double lag_fraction() const { return total ? double(lag) / double(total) : 0.0; }
};

struct ExperimentReport {
  std::vector<SummaryRow> summary;
  std::map<Condition, Coordination> classifications;
  std::map<Condition, RegressionResult> pooled;
  std::optional<Contrast> lag_contrast;
  std::optional<Contrast> tb_contrast_mm;
  std::optional<Contrast> tb_contrast_z;
  std::vector<SpeakerContrast> speaker_tb_contrasts;
  ExclusionCounts exclusions;
  std::vector<std::string> notes;  // degenerate statistics and similar
  std::vector<std::string> files;
  std::string config_json;  // echo of the generating config, if any
};

struct AnalysisOptions {
  int n_perm = kDefaultPermutations;
  std::uint64_t seed = 20240501;
  double outlier_k = 3.0;
};

// Recomputes exclusions (other than parse failures), TB z-scores and every
// statistic from the token table alone. Outliers and z-scores are taken per
// speaker within each coordination family: {UNDERLYING, ASSIMILATORY} and
// {SEQUENCE}.
ExperimentReport analyze_tokens(std::vector<TokenRecord>& tokens, const AnalysisOptions& options);

struct TokenTrajectories {
  std::string label;  // e.g. S1_ASSIMILATORY_000
  std::vector<Trajectory> channels;
};

struct ScenarioRun {
  std::vector<TokenRecord> tokens;
  std::vector<TokenTrajectories> trajectories;  // first token per speaker x condition
  ExperimentReport report;
};

// Parse failures mark the token excluded with reason "parse_failure"; more
// than 20% failures throws DataError.
ScenarioRun run_scenario(const ScenarioConfig& config);

// Speaker-level parameters for speaker index s (0-based).
ScenarioParams speaker_params(const ScenarioConfig& config, int speaker);

// Applies the token-level noise model to speaker parameters.
ScenarioParams jitter_params(const ScenarioParams& params, const NoiseModel& noise,
                             std::mt19937_64& rng);

// Palatal onset delay produced by routing the eccentric delay through the
// coupling planner as a relative phase.
double coupled_eccentric_delay_ms(double eccentric_delay_ms, double omega0_rad_s = kDefaultOmega0);

struct TokenMeasurement {
  GestureLandmarks labial;
  GestureLandmarks palatal;
  Intervals intervals;
  double tb_pos_mm = 0.0;
};

// Smooth -> parse -> measure for one synthetic token. Throws on parse
// failure.
TokenMeasurement measure_token(const GesturalScore& score,
                               const std::map<TractVar, Trajectory>& measured,
                               double window_margin_ms);

// Writes tokens.csv, summary.csv, report.json, trajectories/ and plots into
// out_dir and records the paths in run.report.files.
void write_run(ScenarioRun& run, const std::string& out_dir);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::string report_to_json(const ExperimentReport& report);

// Competing accounts of the delayed palatal onset.
struct BlendingSweepPoint {
  double velar_blending = 1.0;
  double lag_contrast_ms = 0.0;
  double tb_contrast_mm = 0.0;
  double tb_contrast_z = 0.0;
};

struct Exp54Report {
  // (A) blending only: no eccentric delay, equal stiffness.
  std::vector<BlendingSweepPoint> blending_sweep;
  // (B) palatal anti-phase to the labial gesture (coupled to its offset).
  RegressionResult anti_phase_pooled;
  Coordination anti_phase_class = Coordination::kIndeterminate;
  // (C) eccentric velar/palatal timing.
  Coordination eccentric_underlying_class = Coordination::kIndeterminate;
  Coordination eccentric_assimilatory_class = Coordination::kIndeterminate;
  double eccentric_lag_contrast_ms = 0.0;
  double eccentric_tb_contrast_mm = 0.0;
};

inline const std::vector<double> kBlendingSweep = {0.25, 0.5, 1.0, 2.0, 4.0};

Exp54Report experiment_54(const ScenarioConfig& config);
std::string exp54_to_json(const Exp54Report& report);

}  // namespace artic
