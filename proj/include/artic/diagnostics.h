#pragma once

// Measurement intervals and statistics for the complex-segment vs
// segment-sequence diagnostic: per-token intervals, per-speaker
// normalisation, outlier removal, OLS with permutation tests, condition
// contrasts and the coordination classifier.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "artic/gestural_score.h"
#include "artic/landmark_parser.h"

namespace artic {

struct TokenRecord {
  std::string speaker;
  Condition condition = Condition::kUnderlying;
  std::string item;
  int rep = 0;
  double g1_onset_ms = 0.0;
  double g1_offset_ms = 0.0;
  double g2_onset_ms = 0.0;
  double g1_duration_ms = 0.0;
  double lag_ms = 0.0;
  double tb_pos_mm = 0.0;
  double tb_pos_z = std::numeric_limits<double>::quiet_NaN();  // set by normalisation
  bool excluded = false;
  std::string exclusion_reason;
};

struct Intervals {
  double g1_duration_ms = 0.0;
  double lag_ms = 0.0;
};

// g1 duration = g1 Offset - g1 Onset; lag = g2 Onset - g1 Onset.
Intervals intervals(const GestureLandmarks& g1, const GestureLandmarks& g2);

// Linear interpolation; throws std::out_of_range outside the trajectory.
double tb_at(const Trajectory& traj, double t_ms);

// Within-group z-scores with the n-1 standard deviation. Throws DataError
// naming the group when it has fewer than 2 values or zero spread.
std::vector<double> zscore_by_group(std::span<const double> values,
                                    std::span<const std::string> groups);

struct OutlierStats {
  struct Group {
    std::string speaker;
    double duration_mean, duration_sd, lag_mean, lag_sd;
  };
  std::vector<Group> groups;
};

// Per-speaker means and sample SDs of g1 duration and lag over tokens that
// are not already excluded.
OutlierStats outlier_stats(std::span<const TokenRecord> tokens);

struct OutlierSplit {
  std::vector<TokenRecord> kept;
  std::vector<TokenRecord> removed;  // excluded, with the offending measures
};

// Single pass: a token is removed when its g1 duration or lag lies more than
// k SDs from its speaker's mean. Reasons are "g1_duration", "lag" or
// "g1_duration;lag". Tokens excluded on entry go to `removed` untouched.
OutlierSplit remove_outliers(std::span<const TokenRecord> tokens, double k = 3.0);
OutlierSplit remove_outliers(std::span<const TokenRecord> tokens, double k,
                             const OutlierStats& frozen);

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
  double p_perm = std::numeric_limits<double>::quiet_NaN();
};

// Throws DataError for n < 3, mismatched lengths or var(x) == 0.
RegressionResult ols(std::span<const double> x, std::span<const double> y);

inline constexpr int kDefaultPermutations = 10000;

// Two-sided permutation p for the OLS slope: (#{|slope*| >= |slope|} + 1) /
// (n_perm + 1). When `strata` is given, y is shuffled within each stratum.
// Throws DataError for n < 5 or var(x) == 0 and ConfigError for n_perm < 1.
double perm_test_slope(std::span<const double> x, std::span<const double> y, int n_perm,
                       std::uint64_t seed, std::span<const std::string> strata = {});

enum class Measure { kLag, kTbPos, kTbPosZ };

struct Contrast {
  double difference = 0.0;  // mean(ASSIMILATORY) - mean(UNDERLYING)
  double p_perm = 1.0;
  std::size_t n_underlying = 0;
  std::size_t n_assimilatory = 0;
};

// Label permutations stratified within speaker; excluded tokens are skipped.
// Throws DataError when either condition is missing.
Contrast condition_contrast(std::span<const TokenRecord> tokens, Measure measure,
                            int n_perm = kDefaultPermutations, std::uint64_t seed = 1);

enum class Coordination { kComplex, kSequence, kIndeterminate };
std::string_view to_string(Coordination c);

struct Classification {
  Coordination label = Coordination::kIndeterminate;
  RegressionResult pooled;  // lag on g1 duration, both z-scored within speaker
};

inline constexpr std::size_t kMinClassificationTokens = 20;

// Decision rule on the pooled within-speaker z-scored regression:
//   SEQUENCE       slope > 0, p < 0.01, r2 > 0.25
//   COMPLEX        p >= 0.05, r2 < 0.1
//   INDETERMINATE  otherwise
// Throws DataError for fewer than 20 usable tokens.
Classification classify_coordination(std::span<const TokenRecord> tokens,
                                     int n_perm = kDefaultPermutations, std::uint64_t seed = 1);

// ---------------------------------------------------------------------------
// Token table CSV
// ---------------------------------------------------------------------------

void write_token_csv(std::ostream& out, std::span<const TokenRecord> tokens);
// Throws DataError on malformed rows.
std::vector<TokenRecord> read_token_csv(std::istream& in);

// Rounds every numeric field to the 6 decimals the CSV stores, so in-memory
// analysis matches analysis of the written file.
void quantize(TokenRecord& token);

}  // namespace artic
