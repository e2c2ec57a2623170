#include "artic/task_dynamics.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "artic/error.h"

namespace artic {

namespace {

constexpr double kTimeEps = 1e-9;

struct State {
  double x;
  double v;
};

// One RK4 step of the linear second-order system with constant parameters.
State rk4_step(State s, const BlendedParams& p, double h_s) {
  const double k = p.stiffness_s2;
  const double b = 2.0 * p.damping_ratio * std::sqrt(k);
  auto accel = [&](double x, double v) { return k * (p.target_mm - x) - b * v; };

  const double k1x = s.v;
  const double k1v = accel(s.x, s.v);
  const double k2x = s.v + 0.5 * h_s * k1v;
  const double k2v = accel(s.x + 0.5 * h_s * k1x, k2x);
  const double k3x = s.v + 0.5 * h_s * k2v;
  const double k3v = accel(s.x + 0.5 * h_s * k2x, k3x);
  const double k4x = s.v + h_s * k3v;
  const double k4v = accel(s.x + h_s * k3x, k4x);
  return {s.x + h_s / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
          s.v + h_s / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
}

}  // namespace

BlendedParams blend_parameters(std::span<const Gesture> active) {
  if (active.empty()) throw ConfigError("blend_parameters: no active gestures");
  const TractVar tv = active.front().tract_variable;
  double wsum = 0.0, target = 0.0, stiffness = 0.0, zeta = 0.0;
  for (const auto& g : active) {
    if (g.tract_variable != tv) {
      throw ConfigError("blend_parameters: gestures span several tract variables");
    }
    wsum += g.blending_strength;
    target += g.blending_strength * g.target_mm;
    stiffness += g.blending_strength * g.stiffness_s2;
    zeta = std::max(zeta, g.damping_ratio);
  }
  return {target / wsum, stiffness / wsum, zeta};
}

std::map<TractVar, Trajectory> integrate(const GesturalScore& score, double dt_ms,
                                         double relaxation_stiffness_s2) {
  if (auto v = validate_score(score); !v.empty()) {
    throw ConfigError(fmt::format("invalid score: {}: {}", v.front().subject, v.front().reason));
  }
  const double period_ms = 1000.0 / score.sample_rate_hz;
  if (!(dt_ms > 0.0) || dt_ms > 1.0 || dt_ms > period_ms + kTimeEps) {
    throw ConfigError(fmt::format("dt = {} ms must lie in (0, min(1, {})] ms", dt_ms, period_ms));
  }
  if (!(relaxation_stiffness_s2 > 0.0)) throw ConfigError("relaxation stiffness must be > 0");

  const auto n_samples =
      static_cast<std::size_t>(std::llround(score.duration_ms * score.sample_rate_hz / 1000.0)) + 1;
  const double end_ms = static_cast<double>(n_samples - 1) * period_ms;

  // Step boundaries: every sample time and every activation edge.
  std::vector<double> breaks;
  breaks.reserve(n_samples + 2 * score.gestures.size());
  for (std::size_t i = 0; i < n_samples; ++i) breaks.push_back(static_cast<double>(i) * period_ms);
  for (const auto& g : score.gestures) {
    for (double t : {g.t_on_ms, g.t_off_ms}) {
      if (t > 0.0 && t < end_ms) breaks.push_back(t);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) { return std::abs(a - b) < kTimeEps; }),
               breaks.end());

  std::map<TractVar, Trajectory> out;
  for (const auto& tv : score.tract_variables) {
    std::vector<Gesture> mine;
    for (const auto& g : score.gestures) {
      if (g.tract_variable == tv.name) mine.push_back(g);
    }

    Trajectory traj{std::string(to_string(tv.name)), score.sample_rate_hz, 0.0, {}};
    traj.samples.reserve(n_samples);
    State s{tv.neutral_mm, 0.0};
    traj.samples.push_back(s.x);
    const BlendedParams relax{tv.neutral_mm, relaxation_stiffness_s2, 1.0};

    std::vector<Gesture> active;
    std::size_t next_sample = 1;
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
      const double a_ms = breaks[b];
      const double b_ms = breaks[b + 1];
      active.clear();
      for (const auto& g : mine) {
        if (g.t_on_ms <= a_ms + kTimeEps && a_ms + kTimeEps < g.t_off_ms) active.push_back(g);
      }
      const BlendedParams p = active.empty() ? relax : blend_parameters(active);

      const auto m = static_cast<int>(std::ceil((b_ms - a_ms) / dt_ms - kTimeEps));
      const double h_s = (b_ms - a_ms) / m / 1000.0;
      for (int k = 0; k < m; ++k) s = rk4_step(s, p, h_s);
      if (!std::isfinite(s.x) || !std::isfinite(s.v)) {
        throw DataError(fmt::format("integration diverged on {} at {} ms", traj.channel, b_ms));
      }
      if (next_sample < n_samples &&
          std::abs(b_ms - static_cast<double>(next_sample) * period_ms) < kTimeEps) {
        traj.samples.push_back(s.x);
        ++next_sample;
      }
    }
    out.emplace(tv.name, std::move(traj));
  }
  return out;
}

StepState analytic_step_response(double delta_mm, double omega_n, double t_ms) {
  if (t_ms < 0.0) throw std::domain_error("analytic_step_response: negative t");
  const double t = t_ms / 1000.0;
  const double decay = std::exp(-omega_n * t);
  return {delta_mm * (1.0 - (1.0 + omega_n * t) * decay),
          delta_mm * omega_n * omega_n * t * decay};
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_trajectory_csv(std::ostream& out, const std::vector<Trajectory>& channels) {
  if (channels.empty()) return;
  const Trajectory& first = channels.front();
  for (const auto& c : channels) {
    if (c.samples.size() != first.samples.size() || c.sample_rate_hz != first.sample_rate_hz ||
        c.t0_ms != first.t0_ms) {
      throw DataError("trajectory CSV channels must share sampling");
    }
  }
  out << "t_ms";
  for (const auto& c : channels) out << ',' << c.channel;
  out << '\n';
  std::string line;
  for (std::size_t i = 0; i < first.samples.size(); ++i) {
    line = fmt::format("{:.6f}", first.time_at(i));
    for (const auto& c : channels) fmt::format_to(std::back_inserter(line), ",{:.6f}", c.samples[i]);
    out << line << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const std::map<TractVar, Trajectory>& channels) {
  // Column order follows the header convention LA, TB_CL, TB_CD.
  std::vector<Trajectory> ordered;
  for (TractVar tv : {TractVar::kLA, TractVar::kTbCl, TractVar::kTbCd}) {
    if (auto it = channels.find(tv); it != channels.end()) ordered.push_back(it->second);
  }
  write_trajectory_csv(out, ordered);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& s, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(fmt::format("row {}: '{}' is not a number", row, s));
  }
}

}  // namespace

std::vector<Trajectory> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty trajectory CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.front() != "t_ms") {
    throw DataError("trajectory CSV must start with a t_ms column");
  }
  std::vector<double> times;
  std::vector<std::vector<double>> cols(header.size() - 1);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(fmt::format("row {}: expected {} fields", row, header.size()));
    }
    times.push_back(parse_number(cells[0], row));
    for (std::size_t c = 1; c < cells.size(); ++c) cols[c - 1].push_back(parse_number(cells[c], row));
  }
  if (times.size() < 2) throw DataError("trajectory CSV needs at least two rows");
  const double period = times[1] - times[0];
  if (!(period > 0.0)) throw DataError("trajectory time column must increase");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[0] - static_cast<double>(i) * period) > 1e-3) {
      throw DataError(fmt::format("non-uniform sampling near t = {} ms", times[i]));
    }
  }
  // Rates are recovered from the rounded time column; snap to whole Hz.
  double rate = 1000.0 / period;
  if (std::abs(rate - std::round(rate)) < 1e-3) rate = std::round(rate);

  std::vector<Trajectory> out;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.push_back(Trajectory{header[c + 1], rate, times[0], std::move(cols[c])});
  }
  return out;
}

}  // namespace artic
