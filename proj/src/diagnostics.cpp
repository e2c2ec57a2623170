#include "artic/diagnostics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "artic/signal_smoothing.h"

namespace artic {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(std::span<const double> v) {
  MeanSd out;
  if (v.empty()) return out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return out;
}

double measure_of(const TokenRecord& t, Measure m) {
  switch (m) {
    case Measure::kLag:
      return t.lag_ms;
    case Measure::kTbPos:
      return t.tb_pos_mm;
    case Measure::kTbPosZ:
      return t.tb_pos_z;
  }
  return kNaN;
}

// Groups row indices by label, preserving first-seen order.
std::vector<std::vector<std::size_t>> group_indices(std::span<const std::string> labels) {
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = slot.emplace(labels[i], groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

}  // namespace

Intervals intervals(const GestureLandmarks& g1, const GestureLandmarks& g2) {
  return {g1.offset_ms - g1.onset_ms, g2.onset_ms - g1.onset_ms};
}

double tb_at(const Trajectory& traj, double t_ms) {
  constexpr double kEps = 1e-9;
  if (traj.samples.empty() || t_ms < traj.t0_ms - kEps || t_ms > traj.end_ms() + kEps) {
    throw std::out_of_range(fmt::format("t = {} ms outside trajectory [{}, {}] ms", t_ms,
                                        traj.t0_ms, traj.end_ms()));
  }
  const double pos = std::clamp((t_ms - traj.t0_ms) / traj.period_ms(), 0.0,
                                static_cast<double>(traj.samples.size() - 1));
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= traj.samples.size()) return traj.samples.back();
  const double frac = pos - static_cast<double>(i);
  return traj.samples[i] + frac * (traj.samples[i + 1] - traj.samples[i]);
}

std::vector<double> zscore_by_group(std::span<const double> values,
                                    std::span<const std::string> groups) {
  if (values.size() != groups.size()) throw DataError("values and group labels differ in length");
  std::vector<double> z(values.size());
  for (const auto& idx : group_indices(groups)) {
    std::vector<double> v;
    v.reserve(idx.size());
    for (std::size_t i : idx) v.push_back(values[i]);
    const auto ms = mean_sd(v);
    if (idx.size() < 2 || !(ms.sd > 0.0)) {
      throw DataError(fmt::format("group '{}' has zero spread; cannot z-score", groups[idx.front()]));
    }
    for (std::size_t i : idx) z[i] = (values[i] - ms.mean) / ms.sd;
  }
  return z;
}

OutlierStats outlier_stats(std::span<const TokenRecord> tokens) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_speaker;
  std::vector<std::string> order;
  for (const auto& t : tokens) {
    if (t.excluded) continue;
    if (!by_speaker.contains(t.speaker)) order.push_back(t.speaker);
    by_speaker[t.speaker].first.push_back(t.g1_duration_ms);
    by_speaker[t.speaker].second.push_back(t.lag_ms);
  }
  OutlierStats stats;
  for (const auto& sp : order) {
    const auto& [dur, lag] = by_speaker[sp];
    const auto d = mean_sd(dur);
    const auto l = mean_sd(lag);
    stats.groups.push_back({sp, d.mean, d.sd, l.mean, l.sd});
  }
  return stats;
}

OutlierSplit remove_outliers(std::span<const TokenRecord> tokens, double k) {
  return remove_outliers(tokens, k, outlier_stats(tokens));
}

OutlierSplit remove_outliers(std::span<const TokenRecord> tokens, double k,
                             const OutlierStats& frozen) {
  OutlierSplit split;
  for (const auto& t : tokens) {
    if (t.excluded) {
      split.removed.push_back(t);
      continue;
    }
    const auto it = std::find_if(frozen.groups.begin(), frozen.groups.end(),
                                 [&](const auto& g) { return g.speaker == t.speaker; });
    if (it == frozen.groups.end()) {
      split.kept.push_back(t);
      continue;
    }
    const bool dur_out = std::abs(t.g1_duration_ms - it->duration_mean) > k * it->duration_sd;
    const bool lag_out = std::abs(t.lag_ms - it->lag_mean) > k * it->lag_sd;
    if (!dur_out && !lag_out) {
      split.kept.push_back(t);
      continue;
    }
    TokenRecord r = t;
    r.excluded = true;
    r.exclusion_reason = dur_out && lag_out ? "g1_duration;lag" : dur_out ? "g1_duration" : "lag";
    split.removed.push_back(std::move(r));
  }
  return split;
}

RegressionResult ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("ols: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw DataError(fmt::format("ols needs n >= 3, got {}", n));
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DataError("ols: var(x) = 0");
  RegressionResult r;
  r.n = n;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 0.0;
  return r;
}

double perm_test_slope(std::span<const double> x, std::span<const double> y, int n_perm,
                       std::uint64_t seed, std::span<const std::string> strata) {
  if (n_perm < 1) throw ConfigError("perm_test_slope needs n_perm >= 1");
  if (x.size() != y.size()) throw DataError("perm_test_slope: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 5) throw DataError(fmt::format("perm_test_slope needs n >= 5, got {}", n));
  if (!strata.empty() && strata.size() != n) throw DataError("strata length mismatch");

  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<double> cx(n);
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cx[i] = x[i] - mx;
    sxx += cx[i] * cx[i];
  }
  if (!(sxx > 0.0)) throw DataError("perm_test_slope: var(x) = 0");

  // With x centred, slope = sum(cx * y) / sxx for any ordering of y.
  auto abs_slope = [&](const std::vector<double>& yy) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cx[i] * yy[i];
    return std::abs(s / sxx);
  };

  std::vector<double> yy(y.begin(), y.end());
  const double observed = abs_slope(yy);
  const double cutoff = observed * (1.0 - 1e-12);

  std::vector<std::vector<std::size_t>> groups;
  if (strata.empty()) {
    groups.emplace_back(n);
    std::iota(groups.front().begin(), groups.front().end(), std::size_t{0});
  } else {
    groups = group_indices(strata);
  }

  auto rng = keyed_stream(seed, {0x51095ULL});
  std::vector<double> buf;
  long hits = 0;
  for (int p = 0; p < n_perm; ++p) {
    for (const auto& g : groups) {
      buf.clear();
      for (std::size_t i : g) buf.push_back(yy[i]);
      std::shuffle(buf.begin(), buf.end(), rng);
      for (std::size_t k = 0; k < g.size(); ++k) yy[g[k]] = buf[k];
    }
    if (abs_slope(yy) >= cutoff) ++hits;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(n_perm + 1);
}

Contrast condition_contrast(std::span<const TokenRecord> tokens, Measure measure, int n_perm,
                            std::uint64_t seed) {
  if (n_perm < 1) throw ConfigError("condition_contrast needs n_perm >= 1");
  std::vector<double> values;
  std::vector<char> is_assim;
  std::vector<std::string> speakers;
  for (const auto& t : tokens) {
    if (t.excluded) continue;
    if (t.condition != Condition::kUnderlying && t.condition != Condition::kAssimilatory) continue;
    const double v = measure_of(t, measure);
    if (!std::isfinite(v)) continue;
    values.push_back(v);
    is_assim.push_back(t.condition == Condition::kAssimilatory ? 1 : 0);
    speakers.push_back(t.speaker);
  }
  Contrast c;
  c.n_assimilatory = static_cast<std::size_t>(std::count(is_assim.begin(), is_assim.end(), 1));
  c.n_underlying = is_assim.size() - c.n_assimilatory;
  if (c.n_assimilatory == 0 || c.n_underlying == 0) {
    throw DataError("condition_contrast needs both UNDERLYING and ASSIMILATORY tokens");
  }

  auto diff = [&](const std::vector<char>& labels) {
    double sa = 0.0, su = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) (labels[i] ? sa : su) += values[i];
    return sa / static_cast<double>(c.n_assimilatory) - su / static_cast<double>(c.n_underlying);
  };
  c.difference = diff(is_assim);
  const double cutoff = std::abs(c.difference) * (1.0 - 1e-12);

  const auto groups = group_indices(speakers);
  auto rng = keyed_stream(seed, {0xC0417ULL});
  std::vector<char> labels = is_assim;
  std::vector<char> buf;
  long hits = 0;
  for (int p = 0; p < n_perm; ++p) {
    for (const auto& g : groups) {
      buf.clear();
      for (std::size_t i : g) buf.push_back(labels[i]);
      std::shuffle(buf.begin(), buf.end(), rng);
      for (std::size_t k = 0; k < g.size(); ++k) labels[g[k]] = buf[k];
    }
    if (std::abs(diff(labels)) >= cutoff) ++hits;
  }
  c.p_perm = static_cast<double>(hits + 1) / static_cast<double>(n_perm + 1);
  return c;
}

std::string_view to_string(Coordination c) {
  switch (c) {
    case Coordination::kComplex:
      return "COMPLEX";
    case Coordination::kSequence:
      return "SEQUENCE";
    case Coordination::kIndeterminate:
      return "INDETERMINATE";
  }
  return "?";
}

Classification classify_coordination(std::span<const TokenRecord> tokens, int n_perm,
                                     std::uint64_t seed) {
  std::vector<double> dur, lag;
  std::vector<std::string> speakers;
  for (const auto& t : tokens) {
    if (t.excluded) continue;
    dur.push_back(t.g1_duration_ms);
    lag.push_back(t.lag_ms);
    speakers.push_back(t.speaker);
  }
  if (dur.size() < kMinClassificationTokens) {
    throw DataError(fmt::format("classification needs >= {} tokens, got {}",
                                kMinClassificationTokens, dur.size()));
  }
  const auto zd = zscore_by_group(dur, speakers);
  const auto zl = zscore_by_group(lag, speakers);

  Classification out;
  out.pooled = ols(zd, zl);
  out.pooled.p_perm = perm_test_slope(zd, zl, n_perm, seed, speakers);
  const auto& r = out.pooled;
  if (r.slope > 0.0 && r.p_perm < 0.01 && r.r2 > 0.25) {
    out.label = Coordination::kSequence;
  } else if (r.p_perm >= 0.05 && r.r2 < 0.1) {
    out.label = Coordination::kComplex;
  } else {
    out.label = Coordination::kIndeterminate;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kTokenHeader =
    "speaker,condition,item,rep,g1_onset_ms,g1_offset_ms,g2_onset_ms,g1_duration_ms,lag_ms,"
    "tb_pos_mm,tb_pos_z,excluded,exclusion_reason";

std::string fixed6(double v) { return std::isfinite(v) ? fmt::format("{:.6f}", v) : std::string(); }

double parse_field(const std::string& s, std::size_t row) {
  if (s.empty()) return kNaN;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError(fmt::format("token CSV row {}: '{}' is not a number", row, s));
  }
  return v;
}

void check_text(const std::string& s) {
  if (s.find_first_of(",\n\r\"") != std::string::npos) {
    throw DataError(fmt::format("text field '{}' contains CSV metacharacters", s));
  }
}

}  // namespace

void quantize(TokenRecord& t) {
  for (double* f : {&t.g1_onset_ms, &t.g1_offset_ms, &t.g2_onset_ms, &t.g1_duration_ms, &t.lag_ms,
                    &t.tb_pos_mm, &t.tb_pos_z}) {
    if (std::isfinite(*f)) *f = parse_field(fixed6(*f), 0);
  }
}

void write_token_csv(std::ostream& out, std::span<const TokenRecord> tokens) {
  out << kTokenHeader << '\n';
  for (const auto& t : tokens) {
    check_text(t.speaker);
    check_text(t.item);
    check_text(t.exclusion_reason);
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", t.speaker, to_string(t.condition),
                       t.item, t.rep, fixed6(t.g1_onset_ms), fixed6(t.g1_offset_ms),
                       fixed6(t.g2_onset_ms), fixed6(t.g1_duration_ms), fixed6(t.lag_ms),
                       fixed6(t.tb_pos_mm), fixed6(t.tb_pos_z), t.excluded ? 1 : 0,
                       t.exclusion_reason);
  }
}

std::vector<TokenRecord> read_token_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty token CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTokenHeader) throw DataError("token CSV header does not match the expected columns");

  std::vector<TokenRecord> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 13) throw DataError(fmt::format("token CSV row {}: expected 13 fields", row));

    TokenRecord t;
    t.speaker = f[0];
    try {
      t.condition = condition_from_string(f[1]);
    } catch (const ConfigError&) {
      throw DataError(fmt::format("token CSV row {}: unknown condition '{}'", row, f[1]));
    }
    t.item = f[2];
    t.rep = static_cast<int>(parse_field(f[3], row));
    t.g1_onset_ms = parse_field(f[4], row);
    t.g1_offset_ms = parse_field(f[5], row);
    t.g2_onset_ms = parse_field(f[6], row);
    t.g1_duration_ms = parse_field(f[7], row);
    t.lag_ms = parse_field(f[8], row);
    t.tb_pos_mm = parse_field(f[9], row);
    t.tb_pos_z = parse_field(f[10], row);
    if (f[11] != "0" && f[11] != "1") {
      throw DataError(fmt::format("token CSV row {}: excluded must be 0 or 1", row));
    }
    t.excluded = f[11] == "1";
    t.exclusion_reason = f[12];
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace artic
