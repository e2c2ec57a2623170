#include "artic/scenario.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "artic/coupling_planner.h"
#include "artic/landmark_parser.h"
#include "artic/plots.h"

namespace artic {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMaxParseFailureFraction = 0.2;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  auto rng = keyed_stream(seed, {0xD1A6ULL, k});
  return rng();
}

std::string speaker_id(int s) { return fmt::format("S{}", s + 1); }

// ---------------------------------------------------------------------------
// Config JSON helpers
// ---------------------------------------------------------------------------

class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(fmt::format("{} must be an object", where_));
  }

  template <typename T>
  void read(const char* key, T& field) {
    seen_.push_back(key);
    if (auto it = obj_.find(key); it != obj_.end()) {
      try {
        field = it->template get<T>();
      } catch (const json::exception&) {
        throw ConfigError(fmt::format("{}.{} has the wrong type", where_, key));
      }
    }
  }

  const json* child(const char* key) {
    seen_.push_back(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void reject_unknown() const {
    for (const auto& [key, _] : obj_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw ConfigError(fmt::format("unknown key '{}' in {}", key, where_));
      }
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::vector<std::string> seen_;
};

template <typename Visitor>
void visit_params(ScenarioParams& p, Visitor&& v) {
  v("duration_ms", p.duration_ms);
  v("la_neutral_mm", p.la_neutral_mm);
  v("tb_cl_neutral_mm", p.tb_cl_neutral_mm);
  v("tb_cd_neutral_mm", p.tb_cd_neutral_mm);
  v("labial_target_mm", p.labial_target_mm);
  v("palatal_target_mm", p.palatal_target_mm);
  v("velar_target_mm", p.velar_target_mm);
  v("labial_stiffness_s2", p.labial_stiffness_s2);
  v("palatal_stiffness_s2", p.palatal_stiffness_s2);
  v("velar_stiffness_s2", p.velar_stiffness_s2);
  v("labial_blending", p.labial_blending);
  v("palatal_blending", p.palatal_blending);
  v("hold_ms", p.hold_ms);
  v("labial_onset_ms", p.labial_onset_ms);
  v("sequence_offset_ms", p.sequence_offset_ms);
  v("sequence_with_velar", p.sequence_with_velar);
  v("include_vowel", p.include_vowel);
  v("vowel_target_mm", p.vowel_target_mm);
  v("vowel_activation_ms", p.vowel_activation_ms);
}

template <typename Visitor>
void visit_noise(NoiseModel& n, Visitor&& v) {
  v("position_sd_mm", n.position_sd_mm);
  v("duration_jitter_sd", n.duration_jitter_sd);
  v("timing_jitter_sd_ms", n.timing_jitter_sd_ms);
  v("target_jitter_sd_mm", n.target_jitter_sd_mm);
}

// ---------------------------------------------------------------------------
// Analysis helpers
// ---------------------------------------------------------------------------

bool in_family(Condition c, bool sequence_family) {
  return (c == Condition::kSequence) == sequence_family;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void validate_config(const ScenarioConfig& c) {
  if (c.n_speakers < 1) throw ConfigError("n_speakers must be >= 1");
  if (c.tokens_per_condition < static_cast<int>(kMinClassificationTokens)) {
    throw ConfigError(fmt::format("tokens_per_condition must be >= {}", kMinClassificationTokens));
  }
  if (c.conditions.empty()) throw ConfigError("conditions must not be empty");
  if (!(c.sample_rate_hz >= kMinSampleRateHz)) throw ConfigError("sample_rate_hz must be >= 100");
  if (!(c.dt_ms > 0.0 && c.dt_ms <= 1.0)) throw ConfigError("dt_ms must lie in (0, 1]");
  if (!(c.relaxation_stiffness_s2 > 0.0)) throw ConfigError("relaxation_stiffness_s2 must be > 0");
  if (!(c.velar_blending_strength > 0.0)) throw ConfigError("velar_blending_strength must be > 0");
  if (c.items.empty()) throw ConfigError("items must not be empty");
  if (c.n_perm < 1) throw ConfigError("n_perm must be >= 1");
  if (!(c.parse_window_margin_ms >= 0.0)) throw ConfigError("parse_window_margin_ms must be >= 0");
  const auto& n = c.noise;
  if (n.position_sd_mm < 0 || n.duration_jitter_sd < 0 || n.timing_jitter_sd_ms < 0 ||
      n.target_jitter_sd_mm < 0) {
    throw ConfigError("noise standard deviations must be >= 0");
  }
  if (c.speaker_variation.stiffness_rel_sd < 0 || c.speaker_variation.target_sd_mm < 0) {
    throw ConfigError("speaker_variation standard deviations must be >= 0");
  }
  ScenarioParams p = c.params;
  p.sample_rate_hz = c.sample_rate_hz;
  for (Condition cond : c.conditions) {
    const auto violations = validate_score(preset_scenario(cond, p));
    if (!violations.empty()) {
      throw ConfigError(fmt::format("{} preset invalid: {}: {}", to_string(cond),
                                    violations.front().subject, violations.front().reason));
    }
  }
}

ScenarioConfig config_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  ScenarioConfig c;
  ObjectReader top(doc, "config");
  top.read("n_speakers", c.n_speakers);
  top.read("tokens_per_condition", c.tokens_per_condition);
  top.read("eccentric_delay_ms", c.eccentric_delay_ms);
  top.read("velar_blending_strength", c.velar_blending_strength);
  top.read("seed", c.seed);
  top.read("sample_rate_hz", c.sample_rate_hz);
  top.read("dt_ms", c.dt_ms);
  top.read("relaxation_stiffness_s2", c.relaxation_stiffness_s2);
  top.read("items", c.items);
  top.read("n_perm", c.n_perm);
  top.read("parse_window_margin_ms", c.parse_window_margin_ms);
  c.noise.seed = c.seed;

  if (const json* conds = top.child("conditions")) {
    if (!conds->is_array()) throw ConfigError("conditions must be an array");
    c.conditions.clear();
    for (const auto& name : *conds) {
      if (!name.is_string()) throw ConfigError("conditions must hold names");
      c.conditions.push_back(condition_from_string(name.get<std::string>()));
    }
  }
  if (const json* route = top.child("timing_route")) {
    const auto r = route->is_string() ? route->get<std::string>() : std::string();
    if (r == "activation") {
      c.timing_route = TimingRoute::kActivation;
    } else if (r == "coupling") {
      c.timing_route = TimingRoute::kCoupling;
    } else {
      throw ConfigError("timing_route must be \"activation\" or \"coupling\"");
    }
  }
  if (const json* sv = top.child("speaker_variation")) {
    ObjectReader r(*sv, "speaker_variation");
    r.read("stiffness_rel_sd", c.speaker_variation.stiffness_rel_sd);
    r.read("target_sd_mm", c.speaker_variation.target_sd_mm);
    r.reject_unknown();
  }
  if (const json* noise = top.child("noise")) {
    ObjectReader r(*noise, "noise");
    visit_noise(c.noise, [&](const char* k, auto& f) { r.read(k, f); });
    r.read("seed", c.noise.seed);
    r.reject_unknown();
  }
  if (const json* params = top.child("params")) {
    ObjectReader r(*params, "params");
    visit_params(c.params, [&](const char* k, auto& f) { r.read(k, f); });
    r.reject_unknown();
  }
  top.reject_unknown();
  validate_config(c);
  return c;
}

ScenarioConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::string config_to_json(const ScenarioConfig& config) {
  ScenarioConfig c = config;
  json doc;
  doc["n_speakers"] = c.n_speakers;
  doc["tokens_per_condition"] = c.tokens_per_condition;
  doc["conditions"] = json::array();
  for (Condition cond : c.conditions) doc["conditions"].push_back(to_string(cond));
  doc["eccentric_delay_ms"] = c.eccentric_delay_ms;
  doc["velar_blending_strength"] = c.velar_blending_strength;
  doc["speaker_variation"] = {{"stiffness_rel_sd", c.speaker_variation.stiffness_rel_sd},
                              {"target_sd_mm", c.speaker_variation.target_sd_mm}};
  json noise;
  visit_noise(c.noise, [&](const char* k, auto& f) { noise[k] = f; });
  noise["seed"] = c.noise.seed;
  doc["noise"] = noise;
  doc["seed"] = c.seed;
  doc["sample_rate_hz"] = c.sample_rate_hz;
  doc["dt_ms"] = c.dt_ms;
  doc["relaxation_stiffness_s2"] = c.relaxation_stiffness_s2;
  doc["timing_route"] = c.timing_route == TimingRoute::kActivation ? "activation" : "coupling";
  doc["items"] = c.items;
  doc["n_perm"] = c.n_perm;
  doc["parse_window_margin_ms"] = c.parse_window_margin_ms;
  json params;
  visit_params(c.params, [&](const char* k, auto& f) { params[k] = f; });
  doc["params"] = params;
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Token generation
// ---------------------------------------------------------------------------

ScenarioParams speaker_params(const ScenarioConfig& config, int speaker) {
  auto rng = keyed_stream(config.seed, {1, static_cast<std::uint64_t>(speaker)});
  const auto& var = config.speaker_variation;
  ScenarioParams p = config.params;
  p.sample_rate_hz = config.sample_rate_hz;
  p.eccentric_delay_ms = config.timing_route == TimingRoute::kCoupling
                             ? coupled_eccentric_delay_ms(config.eccentric_delay_ms)
                             : config.eccentric_delay_ms;
  p.velar_blending = config.velar_blending_strength;

  const double stiffness_scale = std::max(0.3, 1.0 + gaussian(rng, var.stiffness_rel_sd));
  p.labial_stiffness_s2 *= stiffness_scale;
  p.palatal_stiffness_s2 *= stiffness_scale;
  p.velar_stiffness_s2 *= stiffness_scale;
  p.labial_target_mm += gaussian(rng, var.target_sd_mm);
  p.palatal_target_mm += gaussian(rng, var.target_sd_mm);
  p.velar_target_mm += gaussian(rng, var.target_sd_mm);
  return p;
}

ScenarioParams jitter_params(const ScenarioParams& params, const NoiseModel& noise,
                             std::mt19937_64& rng) {
  // Draw order is fixed so that equal keys give equal jitter in every condition.
  ScenarioParams p = params;
  p.labial_onset_ms += gaussian(rng, noise.timing_jitter_sd_ms);
  p.palatal_onset_shift_ms += gaussian(rng, noise.timing_jitter_sd_ms);
  p.labial_duration_scale *= std::exp(gaussian(rng, noise.duration_jitter_sd));
  p.palatal_duration_scale *= std::exp(gaussian(rng, noise.duration_jitter_sd));
  p.labial_target_mm += gaussian(rng, noise.target_jitter_sd_mm);
  p.palatal_target_mm += gaussian(rng, noise.target_jitter_sd_mm);
  p.velar_target_mm += gaussian(rng, noise.target_jitter_sd_mm);
  return p;
}

double coupled_eccentric_delay_ms(double eccentric_delay_ms, double omega0_rad_s) {
  const double period_ms = 1000.0 * 2.0 * std::numbers::pi / omega0_rad_s;
  CouplingGraph graph;
  graph.nodes = {std::string(kLabialId), std::string(kPalatalId)};
  graph.reference = std::string(kLabialId);
  graph.omega0_rad_s = omega0_rad_s;
  graph.edges.push_back({std::string(kLabialId), std::string(kPalatalId),
                         wrap_phase(2.0 * std::numbers::pi * eccentric_delay_ms / period_ms), 1.0});
  const auto onsets = phases_to_onsets(solve_phases_ls(graph), omega0_rad_s, 0.0);
  return onsets.at(std::string(kPalatalId)) - onsets.at(std::string(kLabialId));
}

TokenMeasurement measure_token(const GesturalScore& score,
                               const std::map<TractVar, Trajectory>& measured,
                               double window_margin_ms) {
  const Gesture* lab = score.find_gesture(kLabialId);
  const Gesture* pal = score.find_gesture(kPalatalId);
  if (!lab || !pal) throw DataError("score lacks the labial or palatal gesture");

  const auto grid = default_penalty_grid();
  auto smoothed = [&](TractVar tv) {
    const auto it = measured.find(tv);
    if (it == measured.end()) throw DataError(fmt::format("missing {} channel", to_string(tv)));
    Trajectory t = it->second;
    t.samples = robust_smooth(it->second.samples, grid);
    return t;
  };
  const Trajectory la = smoothed(TractVar::kLA);
  const Trajectory tb = smoothed(TractVar::kTbCl);

  auto window = [&](const Trajectory& t, const Gesture& g) {
    return TimeWindow{std::max(t.t0_ms, g.t_on_ms - window_margin_ms),
                      std::min(t.end_ms(), g.t_off_ms + window_margin_ms)};
  };

  TokenMeasurement m;
  m.labial = find_gesture(la, window(la, *lab), Direction::kDecreasing);
  m.palatal = find_gesture(tb, window(tb, *pal), Direction::kIncreasing);
  m.intervals = intervals(m.labial, m.palatal);
  m.tb_pos_mm = tb_at(tb, m.palatal.onset_ms);
  return m;
}

ScenarioRun run_scenario(const ScenarioConfig& config) {
  validate_config(config);
  ScenarioRun run;
  std::size_t failures = 0;
  std::string first_failure;

  for (int s = 0; s < config.n_speakers; ++s) {
    const ScenarioParams sp = speaker_params(config, s);
    for (Condition cond : config.conditions) {
      for (int k = 0; k < config.tokens_per_condition; ++k) {
        // Keyed without the condition: token k of every condition sees the same
        // jitter and measurement noise.
        auto rng = keyed_stream(config.noise.seed,
                                {2, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(k)});
        TokenRecord rec;
        rec.speaker = speaker_id(s);
        rec.condition = cond;
        rec.item = config.items[static_cast<std::size_t>(k) % config.items.size()];
        rec.rep = k / static_cast<int>(config.items.size());
        try {
          const GesturalScore score = preset_scenario(cond, jitter_params(sp, config.noise, rng));
          auto traj = integrate(score, config.dt_ms, config.relaxation_stiffness_s2);
          for (auto& [tv, t] : traj) add_measurement_noise(t, config.noise.position_sd_mm, rng);
          const TokenMeasurement m = measure_token(score, traj, config.parse_window_margin_ms);
          rec.g1_onset_ms = m.labial.onset_ms;
          rec.g1_offset_ms = m.labial.offset_ms;
          rec.g2_onset_ms = m.palatal.onset_ms;
          rec.g1_duration_ms = m.intervals.g1_duration_ms;
          rec.lag_ms = m.intervals.lag_ms;
          rec.tb_pos_mm = m.tb_pos_mm;
          if (k == 0) {
            TokenTrajectories tt{fmt::format("{}_{}_{:03d}", rec.speaker, to_string(cond), k), {}};
            for (auto& [tv, t] : traj) tt.channels.push_back(t);
            run.trajectories.push_back(std::move(tt));
          }
        } catch (const Error& e) {
          ++failures;
          if (first_failure.empty()) first_failure = e.what();
          rec.g1_onset_ms = rec.g1_offset_ms = rec.g2_onset_ms = kNaN;
          rec.g1_duration_ms = rec.lag_ms = rec.tb_pos_mm = kNaN;
          rec.excluded = true;
          rec.exclusion_reason = "parse_failure";
        }
        quantize(rec);
        run.tokens.push_back(std::move(rec));
      }
    }
  }

  const double fail_frac = static_cast<double>(failures) / static_cast<double>(run.tokens.size());
  if (fail_frac > kMaxParseFailureFraction) {
    throw DataError(fmt::format("{} of {} tokens failed to parse ({:.1f}%); first error: {}",
                                failures, run.tokens.size(), 100.0 * fail_frac, first_failure));
  }

  run.report = analyze_tokens(run.tokens, {config.n_perm, config.seed, 3.0});
  run.report.config_json = config_to_json(config);
  return run;
}

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

ExperimentReport analyze_tokens(std::vector<TokenRecord>& tokens, const AnalysisOptions& options) {
  ExperimentReport report;
  for (auto& t : tokens) {
    t.tb_pos_z = kNaN;
    if (t.exclusion_reason != "parse_failure") {
      t.excluded = false;
      t.exclusion_reason.clear();
    }
  }
  report.exclusions.total = tokens.size();
  report.exclusions.parse_failures = static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(), [](const auto& t) { return t.excluded; }));

  // Outliers, then TB z-scores, per speaker within each coordination family.
  for (bool seq_family : {false, true}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (in_family(tokens[i].condition, seq_family)) idx.push_back(i);
    }
    if (idx.empty()) continue;
    std::vector<TokenRecord> family;
    for (std::size_t i : idx) family.push_back(tokens[i]);
    const auto stats = outlier_stats(family);
    for (std::size_t i : idx) {
      const auto split = remove_outliers(std::span<const TokenRecord>(&tokens[i], 1),
                                         options.outlier_k, stats);
      if (!split.removed.empty() && !tokens[i].excluded) {
        tokens[i] = split.removed.front();
        if (tokens[i].exclusion_reason.find("g1_duration") != std::string::npos) {
          ++report.exclusions.duration;
        }
        if (tokens[i].exclusion_reason.find("lag") != std::string::npos) ++report.exclusions.lag;
      }
    }

    std::map<std::string, std::vector<std::size_t>> by_speaker;
    for (std::size_t i : idx) {
      if (!tokens[i].excluded) by_speaker[tokens[i].speaker].push_back(i);
    }
    for (const auto& [speaker, rows] : by_speaker) {
      std::vector<double> v;
      for (std::size_t i : rows) v.push_back(tokens[i].tb_pos_mm);
      const std::vector<std::string> labels(v.size(), speaker);
      try {
        const auto z = zscore_by_group(v, labels);
        for (std::size_t r = 0; r < rows.size(); ++r) tokens[rows[r]].tb_pos_z = z[r];
      } catch (const DataError& e) {
        report.notes.push_back(fmt::format("tb_pos_z undefined: {}", e.what()));
      }
    }
  }

  // Per speaker x condition regressions in raw units.
  std::vector<std::string> speakers;
  std::vector<Condition> conditions;
  for (const auto& t : tokens) {
    if (std::find(speakers.begin(), speakers.end(), t.speaker) == speakers.end()) speakers.push_back(t.speaker);
    if (std::find(conditions.begin(), conditions.end(), t.condition) == conditions.end()) {
      conditions.push_back(t.condition);
    }
  }
  std::uint64_t row_key = 0;
  for (Condition cond : conditions) {
    for (const auto& sp : speakers) {
      std::vector<double> x, y, z;
      for (const auto& t : tokens) {
        if (t.excluded || t.condition != cond || t.speaker != sp) continue;
        x.push_back(t.g1_duration_ms);
        y.push_back(t.lag_ms);
        if (std::isfinite(t.tb_pos_z)) z.push_back(t.tb_pos_z);
      }
      ++row_key;
      if (x.empty()) continue;
      SummaryRow row{sp, cond, {}, false, mean_of(y), mean_of(z)};
      row.regression.n = x.size();
      try {
        row.regression = ols(x, y);
        row.regression.p_perm = perm_test_slope(x, y, options.n_perm, derive_seed(options.seed, row_key));
      } catch (const DataError& e) {
        row.degenerate = true;
        row.regression.slope = row.regression.intercept = row.regression.r2 = kNaN;
        report.notes.push_back(fmt::format("{} {}: regression degenerate: {}", sp, to_string(cond), e.what()));
      }
      report.summary.push_back(row);
    }
  }

  // Pooled classification per condition.
  for (Condition cond : conditions) {
    std::vector<TokenRecord> subset;
    std::vector<double> lags, zs;
    for (const auto& t : tokens) {
      if (t.condition != cond) continue;
      subset.push_back(t);
      if (!t.excluded) {
        lags.push_back(t.lag_ms);
        if (std::isfinite(t.tb_pos_z)) zs.push_back(t.tb_pos_z);
      }
    }
    SummaryRow row{"ALL", cond, {}, false, mean_of(lags), mean_of(zs)};
    try {
      const auto cls = classify_coordination(
          subset, options.n_perm, derive_seed(options.seed, 1000 + static_cast<std::uint64_t>(cond)));
      report.classifications[cond] = cls.label;
      report.pooled[cond] = cls.pooled;
      row.regression = cls.pooled;
    } catch (const DataError& e) {
      report.classifications[cond] = Coordination::kIndeterminate;
      row.degenerate = true;
      row.regression.slope = row.regression.intercept = row.regression.r2 = kNaN;
      row.regression.n = lags.size();
      report.notes.push_back(fmt::format("{} classification degenerate: {}", to_string(cond), e.what()));
    }
    report.summary.push_back(row);
  }

  // Condition contrasts.
  const bool has_u = std::find(conditions.begin(), conditions.end(), Condition::kUnderlying) != conditions.end();
  const bool has_a = std::find(conditions.begin(), conditions.end(), Condition::kAssimilatory) != conditions.end();
  if (has_u && has_a) {
    const std::uint64_t cs = derive_seed(options.seed, 2000);
    auto try_contrast = [&](std::span<const TokenRecord> toks, Measure m, std::uint64_t seed,
                            const std::string& label) -> std::optional<Contrast> {
      try {
        return condition_contrast(toks, m, options.n_perm, seed);
      } catch (const DataError& e) {
        report.notes.push_back(fmt::format("{} contrast undefined: {}", label, e.what()));
        return std::nullopt;
      }
    };
    report.lag_contrast = try_contrast(tokens, Measure::kLag, cs, "lag");
    report.tb_contrast_mm = try_contrast(tokens, Measure::kTbPos, cs + 1, "tb_pos_mm");
    report.tb_contrast_z = try_contrast(tokens, Measure::kTbPosZ, cs + 2, "tb_pos_z");
    std::uint64_t k = 0;
    for (const auto& sp : speakers) {
      std::vector<TokenRecord> mine;
      for (const auto& t : tokens) {
        if (t.speaker == sp) mine.push_back(t);
      }
      ++k;
      auto mm = try_contrast(mine, Measure::kTbPos, derive_seed(options.seed, 3000 + k), sp + " tb_pos_mm");
      if (!mm) continue;
      report.speaker_tb_contrasts.push_back(
          {sp, *mm, try_contrast(mine, Measure::kTbPosZ, derive_seed(options.seed, 4000 + k), sp + " tb_pos_z")});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  auto num = [](double v) { return std::isfinite(v) ? fmt::format("{:.6f}", v) : std::string(); };
  out << "speaker,condition,n,slope,intercept,r2,p_perm,mean_lag_ms,mean_tb_z\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.speaker, to_string(r.condition),
                       r.regression.n, num(r.regression.slope), num(r.regression.intercept),
                       num(r.regression.r2), num(r.regression.p_perm), num(r.mean_lag_ms),
                       num(r.mean_tb_z));
  }
}

namespace {

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json regression_json(const RegressionResult& r) {
  return {{"slope", num_or_null(r.slope)}, {"intercept", num_or_null(r.intercept)},
          {"r2", num_or_null(r.r2)},       {"n", r.n},
          {"p_perm", num_or_null(r.p_perm)}};
}

json contrast_json(const std::optional<Contrast>& c) {
  if (!c) return nullptr;
  return {{"difference", c->difference}, {"p_perm", c->p_perm},
          {"n_underlying", c->n_underlying}, {"n_assimilatory", c->n_assimilatory}};
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  json doc;
  doc["summary"] = json::array();
  for (const auto& r : report.summary) {
    json row = regression_json(r.regression);
    row["speaker"] = r.speaker;
    row["condition"] = to_string(r.condition);
    row["degenerate"] = r.degenerate;
    row["mean_lag_ms"] = num_or_null(r.mean_lag_ms);
    row["mean_tb_z"] = num_or_null(r.mean_tb_z);
    doc["summary"].push_back(row);
  }
  doc["classifications"] = json::object();
  for (const auto& [c, label] : report.classifications) doc["classifications"][std::string(to_string(c))] = to_string(label);
  doc["contrasts"] = {{"lag_ms", contrast_json(report.lag_contrast)},
                      {"tb_pos_mm", contrast_json(report.tb_contrast_mm)},
                      {"tb_pos_z", contrast_json(report.tb_contrast_z)}};
  doc["speaker_tb_contrasts"] = json::array();
  for (const auto& s : report.speaker_tb_contrasts) {
    doc["speaker_tb_contrasts"].push_back(
        {{"speaker", s.speaker}, {"tb_pos_mm", contrast_json(s.tb_mm)}, {"tb_pos_z", contrast_json(s.tb_z)}});
  }
  const auto& ex = report.exclusions;
  doc["exclusions"] = {{"total", ex.total},
                       {"parse_failures", ex.parse_failures},
                       {"g1_duration", ex.duration},
                       {"lag", ex.lag},
                       {"g1_duration_fraction", ex.duration_fraction()},
                       {"lag_fraction", ex.lag_fraction()},
                       {"reference_g1_duration_fraction", 0.006},
                       {"reference_lag_fraction", 0.016}};
  doc["notes"] = report.notes;
  doc["files"] = report.files;
  doc["config"] = report.config_json.empty() ? json(nullptr) : json::parse(report.config_json);
  return doc.dump(2);
}

void write_run(ScenarioRun& run, const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir / "trajectories");
  auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw Error(fmt::format("cannot write '{}'", p.string()));
    return out;
  };
  std::vector<std::string> files;
  {
    auto out = open(dir / "tokens.csv");
    write_token_csv(out, run.tokens);
    files.push_back((dir / "tokens.csv").string());
  }
  {
    auto out = open(dir / "summary.csv");
    write_summary_csv(out, run.report.summary);
    files.push_back((dir / "summary.csv").string());
  }
  for (const auto& tt : run.trajectories) {
    const fs::path p = dir / "trajectories" / (tt.label + ".csv");
    auto out = open(p);
    write_trajectory_csv(out, tt.channels);
    files.push_back(p.string());
  }
  for (auto& p : emit_plots(run.tokens, out_dir)) files.push_back(std::move(p));
  files.push_back((dir / "report.json").string());
  run.report.files = files;
  auto out = open(dir / "report.json");
  out << report_to_json(run.report) << '\n';
}

// ---------------------------------------------------------------------------
// Competing accounts of the delayed palatal onset
// ---------------------------------------------------------------------------

Exp54Report experiment_54(const ScenarioConfig& config) {
  Exp54Report out;

  // (A) Blending only: palatal and velar start together, equal stiffness.
  ScenarioConfig a = config;
  a.conditions = {Condition::kUnderlying, Condition::kAssimilatory};
  a.eccentric_delay_ms = 0.0;
  a.params.velar_stiffness_s2 = a.params.palatal_stiffness_s2;
  for (double w : kBlendingSweep) {
    a.velar_blending_strength = w;
    const auto run = run_scenario(a);
    const auto& r = run.report;
    if (!r.lag_contrast || !r.tb_contrast_mm) throw DataError("blending sweep produced no contrast");
    out.blending_sweep.push_back({w, r.lag_contrast->difference, r.tb_contrast_mm->difference,
                                  r.tb_contrast_z ? r.tb_contrast_z->difference : kNaN});
  }

  // (B) Palatal onset coupled to the labial offset, velar in-phase with labial.
  ScenarioConfig b = config;
  b.conditions = {Condition::kSequence};
  b.params.sequence_with_velar = true;
  {
    const auto run = run_scenario(b);
    out.anti_phase_class = run.report.classifications.at(Condition::kSequence);
    out.anti_phase_pooled = run.report.pooled.count(Condition::kSequence)
                                ? run.report.pooled.at(Condition::kSequence)
                                : RegressionResult{};
  }

  // (C) Eccentric velar-palatal timing with in-phase labial-palatal coupling.
  ScenarioConfig c = config;
  c.conditions = {Condition::kUnderlying, Condition::kAssimilatory};
  {
    const auto run = run_scenario(c);
    const auto& r = run.report;
    out.eccentric_underlying_class = r.classifications.at(Condition::kUnderlying);
    out.eccentric_assimilatory_class = r.classifications.at(Condition::kAssimilatory);
    out.eccentric_lag_contrast_ms = r.lag_contrast ? r.lag_contrast->difference : kNaN;
    out.eccentric_tb_contrast_mm = r.tb_contrast_mm ? r.tb_contrast_mm->difference : kNaN;
  }
  return out;
}

std::string exp54_to_json(const Exp54Report& r) {
  json doc;
  doc["blending_only"] = json::array();
  for (const auto& p : r.blending_sweep) {
    doc["blending_only"].push_back({{"velar_blending_strength", p.velar_blending},
                                    {"lag_contrast_ms", p.lag_contrast_ms},
                                    {"tb_contrast_mm", p.tb_contrast_mm},
                                    {"tb_contrast_z", num_or_null(p.tb_contrast_z)}});
  }
  doc["anti_phase"] = regression_json(r.anti_phase_pooled);
  doc["anti_phase"]["classification"] = to_string(r.anti_phase_class);
  doc["eccentric"] = {{"underlying_classification", to_string(r.eccentric_underlying_class)},
                      {"assimilatory_classification", to_string(r.eccentric_assimilatory_class)},
                      {"lag_contrast_ms", r.eccentric_lag_contrast_ms},
                      {"tb_contrast_mm", r.eccentric_tb_contrast_mm}};
  return doc.dump(2);
}

}  // namespace artic
