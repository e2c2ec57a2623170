#include "artic/gestural_score.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "artic/error.h"

namespace artic {

namespace {

using nlohmann::json;

// Critically damped step response reaches 20% of peak velocity on the way
// down at u = omega_n * t with u * exp(-u) = 0.2 / e.
constexpr double kTargetLandmarkU = 3.994308;

}  // namespace

std::string_view to_string(TractVar tv) {
  switch (tv) {
    case TractVar::kLA:
      return "LA";
    case TractVar::kTbCl:
      return "TB_CL";
    case TractVar::kTbCd:
      return "TB_CD";
  }
  return "?";
}

std::optional<TractVar> tract_var_from_string(std::string_view name) {
  if (name == "LA") return TractVar::kLA;
  if (name == "TB_CL") return TractVar::kTbCl;
  if (name == "TB_CD") return TractVar::kTbCd;
  return std::nullopt;
}

double Gesture::natural_frequency() const { return std::sqrt(stiffness_s2); }

const TractVariable* GesturalScore::find_tract_variable(TractVar tv) const {
  for (const auto& v : tract_variables) {
    if (v.name == tv) return &v;
  }
  return nullptr;
}

const Gesture* GesturalScore::find_gesture(std::string_view id) const {
  for (const auto& g : gestures) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

Gesture* GesturalScore::find_gesture(std::string_view id) {
  for (auto& g : gestures) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

bool operator==(const TractVariable& a, const TractVariable& b) {
  return a.name == b.name && a.neutral_mm == b.neutral_mm;
}

bool operator==(const Gesture& a, const Gesture& b) {
  return a.id == b.id && a.tract_variable == b.tract_variable && a.target_mm == b.target_mm &&
         a.stiffness_s2 == b.stiffness_s2 && a.damping_ratio == b.damping_ratio &&
         a.blending_strength == b.blending_strength && a.t_on_ms == b.t_on_ms &&
         a.t_off_ms == b.t_off_ms && a.descriptor == b.descriptor;
}

bool operator==(const GesturalScore& a, const GesturalScore& b) {
  return a.tract_variables == b.tract_variables && a.gestures == b.gestures &&
         a.duration_ms == b.duration_ms && a.sample_rate_hz == b.sample_rate_hz;
}

std::vector<Violation> validate_score(const GesturalScore& score) {
  std::vector<Violation> out;
  auto add = [&out](std::string subject, std::string reason) {
    out.push_back({std::move(subject), std::move(reason)});
  };

  if (!(score.duration_ms > 0.0) || !std::isfinite(score.duration_ms)) {
    add("score", "duration must be positive and finite");
  }
  if (!(score.sample_rate_hz >= kMinSampleRateHz) || !std::isfinite(score.sample_rate_hz)) {
    add("score", fmt::format("sample_rate >= {} Hz", kMinSampleRateHz));
  }

  std::set<TractVar> names;
  for (const auto& tv : score.tract_variables) {
    const std::string name(to_string(tv.name));
    if (!names.insert(tv.name).second) add(name, "duplicate tract variable");
    if (!std::isfinite(tv.neutral_mm)) add(name, "neutral value must be finite");
  }

  std::set<std::string> ids;
  for (const auto& g : score.gestures) {
    if (g.id.empty()) add("score", "gesture with empty id");
    if (!ids.insert(g.id).second) add(g.id, "duplicate gesture id");
    if (!names.contains(g.tract_variable)) {
      add(g.id, fmt::format("unknown tract variable {}", to_string(g.tract_variable)));
    }
    if (!std::isfinite(g.target_mm)) add(g.id, "target must be finite");
    if (!(g.stiffness_s2 > 0.0) || !std::isfinite(g.stiffness_s2)) add(g.id, "stiffness > 0");
    if (!(g.blending_strength > 0.0) || !std::isfinite(g.blending_strength)) {
      add(g.id, "blending_strength > 0");
    }
    if (!(g.damping_ratio >= 1.0) || !std::isfinite(g.damping_ratio)) {
      add(g.id, "damping_ratio >= 1");
    }
    if (!(g.t_on_ms < g.t_off_ms)) {
      add(g.id, "t_on < t_off");
    } else if (g.t_off_ms - g.t_on_ms < kMinActivationMs) {
      add(g.id, fmt::format("activation shorter than {} ms", kMinActivationMs));
    }
    if (g.t_on_ms < 0.0 || g.t_off_ms > score.duration_ms || !std::isfinite(g.t_on_ms) ||
        !std::isfinite(g.t_off_ms)) {
      add(g.id, "activation outside [0, duration]");
    }
  }
  return out;
}

std::map<TractVar, std::vector<std::string>> active_gestures(const GesturalScore& score,
                                                             double t_ms) {
  if (!(t_ms >= 0.0 && t_ms <= score.duration_ms)) {
    throw std::out_of_range(
        fmt::format("t = {} ms outside [0, {}] ms", t_ms, score.duration_ms));
  }
  std::map<TractVar, std::vector<std::string>> out;
  for (const auto& g : score.gestures) {
    if (g.active_at(t_ms)) out[g.tract_variable].push_back(g.id);
  }
  return out;
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kUnderlying:
      return "UNDERLYING";
    case Condition::kAssimilatory:
      return "ASSIMILATORY";
    case Condition::kSequence:
      return "SEQUENCE";
  }
  return "?";
}

Condition condition_from_string(std::string_view name) {
  if (name == "UNDERLYING") return Condition::kUnderlying;
  if (name == "ASSIMILATORY") return Condition::kAssimilatory;
  if (name == "SEQUENCE") return Condition::kSequence;
  throw ConfigError(fmt::format("unknown scenario '{}'", name));
}

double activation_duration_ms(double stiffness_s2, double hold_ms) {
  return 1000.0 * kTargetLandmarkU / std::sqrt(stiffness_s2) + hold_ms;
}

GesturalScore preset_scenario(Condition condition, const ScenarioParams& p) {
  GesturalScore score;
  score.duration_ms = p.duration_ms;
  score.sample_rate_hz = p.sample_rate_hz;
  score.tract_variables = {{TractVar::kLA, p.la_neutral_mm},
                           {TractVar::kTbCl, p.tb_cl_neutral_mm},
                           {TractVar::kTbCd, p.tb_cd_neutral_mm}};

  const double lab_on = p.labial_onset_ms;
  const double lab_off =
      lab_on + activation_duration_ms(p.labial_stiffness_s2, p.hold_ms) * p.labial_duration_scale;
  const double pal_dur =
      activation_duration_ms(p.palatal_stiffness_s2, p.hold_ms) * p.palatal_duration_scale;

  Gesture lab{.id = std::string(kLabialId),
              .tract_variable = TractVar::kLA,
              .target_mm = p.labial_target_mm,
              .stiffness_s2 = p.labial_stiffness_s2,
              .damping_ratio = 1.0,
              .blending_strength = p.labial_blending,
              .t_on_ms = lab_on,
              .t_off_ms = lab_off,
              .descriptor = "clo labial"};

  double pal_on = lab_on + p.palatal_onset_shift_ms;
  if (condition == Condition::kAssimilatory) pal_on += p.eccentric_delay_ms;
  if (condition == Condition::kSequence) pal_on = lab_off + p.sequence_offset_ms + p.palatal_onset_shift_ms;

  Gesture pal{.id = std::string(kPalatalId),
              .tract_variable = TractVar::kTbCl,
              .target_mm = p.palatal_target_mm,
              .stiffness_s2 = p.palatal_stiffness_s2,
              .damping_ratio = 1.0,
              .blending_strength = p.palatal_blending,
              .t_on_ms = pal_on,
              .t_off_ms = pal_on + pal_dur,
              .descriptor = "narrow palatal"};

  score.gestures = {lab, pal};

  // The velar gesture is timed eccentrically to the palatal gesture: it starts
  // eccentric_delay earlier (with the labial gesture) and ends with it.
  const bool add_velar = condition == Condition::kAssimilatory ||
                         (condition == Condition::kSequence && p.sequence_with_velar);
  if (add_velar) {
    const double vel_on = condition == Condition::kAssimilatory
                              ? pal.t_on_ms - p.eccentric_delay_ms
                              : lab_on;
    score.gestures.push_back(Gesture{.id = std::string(kVelarId),
                                     .tract_variable = TractVar::kTbCl,
                                     .target_mm = p.velar_target_mm,
                                     .stiffness_s2 = p.velar_stiffness_s2,
                                     .damping_ratio = 1.0,
                                     .blending_strength = p.velar_blending,
                                     .t_on_ms = vel_on,
                                     .t_off_ms = pal.t_off_ms,
                                     .descriptor = "crit velar"});
  }

  if (p.include_vowel) {
    score.gestures.push_back(Gesture{.id = std::string(kVowelId),
                                     .tract_variable = TractVar::kTbCl,
                                     .target_mm = p.vowel_target_mm,
                                     .stiffness_s2 = p.palatal_stiffness_s2,
                                     .damping_ratio = 1.0,
                                     .blending_strength = 1.0,
                                     .t_on_ms = pal.t_off_ms,
                                     .t_off_ms = pal.t_off_ms + p.vowel_activation_ms,
                                     .descriptor = "back vowel"});
  }
  return score;
}

GesturalScore preset_scenario(std::string_view name, const ScenarioParams& params) {
  return preset_scenario(condition_from_string(name), params);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

std::string score_to_json(const GesturalScore& score) {
  json doc;
  doc["duration_ms"] = score.duration_ms;
  doc["sample_rate_hz"] = score.sample_rate_hz;
  doc["tract_variables"] = json::array();
  for (const auto& tv : score.tract_variables) {
    doc["tract_variables"].push_back({{"name", to_string(tv.name)}, {"neutral_mm", tv.neutral_mm}});
  }
  doc["gestures"] = json::array();
  for (const auto& g : score.gestures) {
    doc["gestures"].push_back({{"id", g.id},
                               {"tract_variable", to_string(g.tract_variable)},
                               {"target_mm", g.target_mm},
                               {"stiffness_s2", g.stiffness_s2},
                               {"damping_ratio", g.damping_ratio},
                               {"blending_strength", g.blending_strength},
                               {"t_on_ms", g.t_on_ms},
                               {"t_off_ms", g.t_off_ms},
                               {"descriptor", g.descriptor}});
  }
  return doc.dump(2);
}

namespace {

TractVar parse_tv(const json& j) {
  const auto name = j.get<std::string>();
  auto tv = tract_var_from_string(name);
  if (!tv) throw ConfigError(fmt::format("unknown tract variable '{}'", name));
  return *tv;
}

}  // namespace

GesturalScore score_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    GesturalScore score;
    score.duration_ms = doc.at("duration_ms").get<double>();
    score.sample_rate_hz = doc.at("sample_rate_hz").get<double>();
    for (const auto& tv : doc.at("tract_variables")) {
      score.tract_variables.push_back({parse_tv(tv.at("name")), tv.at("neutral_mm").get<double>()});
    }
    for (const auto& g : doc.at("gestures")) {
      score.gestures.push_back(Gesture{.id = g.at("id").get<std::string>(),
                                       .tract_variable = parse_tv(g.at("tract_variable")),
                                       .target_mm = g.at("target_mm").get<double>(),
                                       .stiffness_s2 = g.at("stiffness_s2").get<double>(),
                                       .damping_ratio = g.value("damping_ratio", 1.0),
                                       .blending_strength = g.value("blending_strength", 1.0),
                                       .t_on_ms = g.at("t_on_ms").get<double>(),
                                       .t_off_ms = g.at("t_off_ms").get<double>(),
                                       .descriptor = g.value("descriptor", std::string())});
    }
    return score;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed score file: {}", e.what()));
  }
}

GesturalScore read_score_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open score file '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return score_from_json(buf.str());
}

void write_score_file(const std::string& path, const GesturalScore& score) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path));
  out << score_to_json(score) << '\n';
}

}  // namespace artic
