#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "artic/error.h"
#include "artic/gestural_score.h"

using namespace artic;

namespace {

GesturalScore two_gesture_score() {
  GesturalScore s;
  s.duration_ms = 500;
  s.sample_rate_hz = 200;
  s.tract_variables = {{TractVar::kLA, 15.0}, {TractVar::kTbCl, 0.0}};
  s.gestures = {
      Gesture{"a", TractVar::kLA, 0.0, 400, 1.0, 1.0, 100, 250, "clo labial"},
      Gesture{"b", TractVar::kTbCl, 12.0, 400, 1.0, 1.0, 120, 300, "narrow palatal"},
  };
  return s;
}

bool mentions(const std::vector<Violation>& v, std::string_view subject, std::string_view fragment) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) {
    return x.subject == subject && x.reason.find(fragment) != std::string::npos;
  });
}

}  // namespace

TEST(GesturalScore, ValidScoreHasNoViolations) {
  EXPECT_TRUE(validate_score(two_gesture_score()).empty());
}

TEST(GesturalScore, ReversedActivationGivesOneViolation) {
  auto s = two_gesture_score();
  std::swap(s.gestures[0].t_on_ms, s.gestures[0].t_off_ms);
  const auto v = validate_score(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].subject, "a");
}

TEST(GesturalScore, ReportsEachBrokenField) {
  auto s = two_gesture_score();
  s.gestures[0].stiffness_s2 = 0.0;
  s.gestures[1].blending_strength = -1.0;
  s.gestures[1].damping_ratio = 0.5;
  const auto v = validate_score(s);
  EXPECT_TRUE(mentions(v, "a", "stiffness"));
  EXPECT_TRUE(mentions(v, "b", "blending"));
  EXPECT_TRUE(mentions(v, "b", "damping"));
}

TEST(GesturalScore, ShortActivationRejected) {
  auto s = two_gesture_score();
  s.gestures[0].t_off_ms = s.gestures[0].t_on_ms + 5.0;
  EXPECT_EQ(validate_score(s).size(), 1u);
}

TEST(GesturalScore, ActivationOutsideScoreRejected) {
  auto s = two_gesture_score();
  s.gestures[1].t_off_ms = 600;
  EXPECT_FALSE(validate_score(s).empty());
}

TEST(GesturalScore, DuplicateIdsAndMissingTractVariable) {
  auto s = two_gesture_score();
  s.gestures[1].id = "a";
  s.gestures.push_back(Gesture{"c", TractVar::kTbCd, 2.0, 400, 1.0, 1.0, 0, 50, ""});
  const auto v = validate_score(s);
  EXPECT_TRUE(mentions(v, "a", "duplicate"));
  EXPECT_FALSE(v.empty());
  EXPECT_GE(v.size(), 2u);
}

TEST(GesturalScore, LowSampleRateRejected) {
  auto s = two_gesture_score();
  s.sample_rate_hz = 50;
  EXPECT_FALSE(validate_score(s).empty());
}

TEST(GesturalScore, ActiveGesturesHalfOpenInterval) {
  const auto s = two_gesture_score();
  auto at = [&](double t) { return active_gestures(s, t); };
  EXPECT_TRUE(at(99.999).empty());
  EXPECT_EQ(at(100).at(TractVar::kLA), std::vector<std::string>{"a"});
  EXPECT_EQ(at(250).count(TractVar::kLA), 0u);
  EXPECT_EQ(at(250).at(TractVar::kTbCl), std::vector<std::string>{"b"});
  EXPECT_THROW(at(-1), std::out_of_range);
  EXPECT_THROW(at(501), std::out_of_range);
}

TEST(GesturalScore, ConditionNames) {
  for (auto c : {Condition::kUnderlying, Condition::kAssimilatory, Condition::kSequence}) {
    EXPECT_EQ(condition_from_string(to_string(c)), c);
  }
  EXPECT_THROW(condition_from_string("PLAIN"), ConfigError);
}

TEST(Presets, AssimilatoryDiffersByVelarAndDelayOnly) {
  ScenarioParams p;
  const auto u = preset_scenario(Condition::kUnderlying, p);
  const auto a = preset_scenario(Condition::kAssimilatory, p);
  ASSERT_EQ(u.gestures.size(), 2u);
  ASSERT_EQ(a.gestures.size(), 3u);
  EXPECT_EQ(u.tract_variables, a.tract_variables);
  EXPECT_EQ(*u.find_gesture(kLabialId), *a.find_gesture(kLabialId));

  Gesture shifted = *u.find_gesture(kPalatalId);
  shifted.t_on_ms += p.eccentric_delay_ms;
  shifted.t_off_ms += p.eccentric_delay_ms;
  EXPECT_EQ(shifted, *a.find_gesture(kPalatalId));

  const Gesture& vel = *a.find_gesture(kVelarId);
  EXPECT_EQ(vel.tract_variable, TractVar::kTbCl);
  EXPECT_LT(vel.target_mm, p.tb_cl_neutral_mm);
  EXPECT_DOUBLE_EQ(vel.t_on_ms, a.find_gesture(kLabialId)->t_on_ms);
  EXPECT_DOUBLE_EQ(vel.t_off_ms, a.find_gesture(kPalatalId)->t_off_ms);
}

TEST(Presets, PalatalDelayFollowsParameter) {
  ScenarioParams p;
  for (double d : {0.0, 10.0, 25.0, 40.0}) {
    p.eccentric_delay_ms = d;
    const auto a = preset_scenario(Condition::kAssimilatory, p);
    EXPECT_DOUBLE_EQ(a.find_gesture(kPalatalId)->t_on_ms - a.find_gesture(kLabialId)->t_on_ms, d);
  }
}

TEST(Presets, SequenceTiesPalatalToLabialOffset) {
  ScenarioParams p;
  p.labial_duration_scale = 1.3;
  const auto s = preset_scenario(Condition::kSequence, p);
  EXPECT_DOUBLE_EQ(s.find_gesture(kPalatalId)->t_on_ms,
                   s.find_gesture(kLabialId)->t_off_ms + p.sequence_offset_ms);
  EXPECT_EQ(s.find_gesture(kVelarId), nullptr);
  p.sequence_with_velar = true;
  EXPECT_NE(preset_scenario(Condition::kSequence, p).find_gesture(kVelarId), nullptr);
}

TEST(Presets, VowelOnlyOnRequest) {
  ScenarioParams p;
  for (auto c : {Condition::kUnderlying, Condition::kAssimilatory, Condition::kSequence}) {
    EXPECT_EQ(preset_scenario(c, p).find_gesture(kVowelId), nullptr);
  }
  p.include_vowel = true;
  const auto u = preset_scenario(Condition::kUnderlying, p);
  ASSERT_NE(u.find_gesture(kVowelId), nullptr);
  EXPECT_DOUBLE_EQ(u.find_gesture(kVowelId)->t_on_ms, u.find_gesture(kPalatalId)->t_off_ms);
}

TEST(Presets, AllPresetsValidUnderRandomJitter) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    ScenarioParams p;
    p.labial_onset_ms += 10 * n(rng);
    p.palatal_onset_shift_ms = 10 * n(rng);
    p.labial_duration_scale = std::exp(0.2 * n(rng));
    p.palatal_duration_scale = std::exp(0.2 * n(rng));
    p.labial_stiffness_s2 *= std::exp(0.2 * n(rng));
    for (auto c : {Condition::kUnderlying, Condition::kAssimilatory, Condition::kSequence}) {
      EXPECT_TRUE(validate_score(preset_scenario(c, p)).empty()) << "trial " << trial;
    }
  }
}

TEST(ScoreJson, RoundTrip) {
  ScenarioParams p;
  p.include_vowel = true;
  const auto a = preset_scenario(Condition::kAssimilatory, p);
  EXPECT_EQ(score_from_json(score_to_json(a)), a);
}

TEST(ScoreJson, MalformedInputIsConfigError) {
  EXPECT_THROW(score_from_json("{"), ConfigError);
  EXPECT_THROW(score_from_json(R"({"tract_variables": 3})"), ConfigError);
  auto text = score_to_json(two_gesture_score());
  const auto pos = text.find("\"LA\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 4, "\"XX\"");
  EXPECT_THROW(score_from_json(text), ConfigError);
}

TEST(ActivationDuration, ScalesWithInverseFrequency) {
  const double d400 = activation_duration_ms(400, 0);
  const double d1600 = activation_duration_ms(1600, 0);
  EXPECT_NEAR(d400, 2.0 * d1600, 1e-9);
  EXPECT_NEAR(activation_duration_ms(1600, 80) - d1600, 80.0, 1e-9);
}
