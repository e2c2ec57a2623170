#include "artic/plots.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "artic/error.h"

namespace artic {

namespace {

struct Range {
  double lo = 0.0, hi = 1.0;

  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Pads flat or empty ranges so the mapping stays finite.
  Range padded() const {
    if (!(hi > lo)) return {lo - 1.0, lo + 1.0};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
  }
};

Range range_of(const std::vector<double>& v) {
  Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double x : v) r.include(x);
  if (!std::isfinite(r.lo)) return {0.0, 1.0};
  return r.padded();
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(double w, double h) {
  return fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "viewBox=\"0 0 {:.0f} {:.0f}\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      w, h, w, h);
}

std::string text(double x, double y, std::string_view s, std::string_view anchor = "middle") {
  return fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"{}\">{}</text>\n", x, y, anchor,
                     escape(s));
}

// Median and quartiles with linear interpolation between order statistics.
double quantile(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double f = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + f * (sorted[i + 1] - sorted[i]);
}

bool usable(const TokenRecord& t) {
  return !t.excluded && std::isfinite(t.g1_duration_ms) && std::isfinite(t.lag_ms);
}

}  // namespace

std::string render_scatter_svg(std::span<const TokenRecord> tokens) {
  std::vector<std::string> speakers;
  std::vector<Condition> conditions;
  std::vector<double> xs, ys;
  for (const auto& t : tokens) {
    if (!usable(t)) continue;
    if (std::find(speakers.begin(), speakers.end(), t.speaker) == speakers.end()) speakers.push_back(t.speaker);
    if (std::find(conditions.begin(), conditions.end(), t.condition) == conditions.end()) {
      conditions.push_back(t.condition);
    }
    xs.push_back(t.g1_duration_ms);
    ys.push_back(t.lag_ms);
  }
  std::sort(conditions.begin(), conditions.end());
  const Range xr = range_of(xs), yr = range_of(ys);

  constexpr double kPanelW = 220, kPanelH = 180, kMargin = 50;
  const double cols = std::max<std::size_t>(1, conditions.size());
  const double rows = std::max<std::size_t>(1, speakers.size());
  const double width = kMargin + cols * (kPanelW + kMargin);
  const double height = kMargin + rows * (kPanelH + kMargin);

  std::string svg = header(width, height);
  svg += text(width / 2, 20, "Lag vs G1 duration (ms)");

  for (std::size_t r = 0; r < speakers.size(); ++r) {
    for (std::size_t c = 0; c < conditions.size(); ++c) {
      const double x0 = kMargin + static_cast<double>(c) * (kPanelW + kMargin);
      const double y0 = kMargin + static_cast<double>(r) * (kPanelH + kMargin);
      auto px = [&](double x) { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * kPanelW; };
      auto py = [&](double y) { return y0 + kPanelH - (y - yr.lo) / (yr.hi - yr.lo) * kPanelH; };

      svg += fmt::format(
          "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"none\" stroke=\"black\"/>\n",
          x0, y0, kPanelW, kPanelH);
      svg += text(x0 + kPanelW / 2, y0 - 6,
                  fmt::format("{} {}", speakers[r], to_string(conditions[c])));
      svg += text(x0 + kPanelW / 2, y0 + kPanelH + 28, "g1_duration_ms");
      svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" "
                         "transform=\"rotate(-90 {:.1f} {:.1f})\">lag_ms</text>\n",
                         x0 - 30, y0 + kPanelH / 2, x0 - 30, y0 + kPanelH / 2);
      svg += text(x0, y0 + kPanelH + 14, fmt::format("{:.0f}", xr.lo));
      svg += text(x0 + kPanelW, y0 + kPanelH + 14, fmt::format("{:.0f}", xr.hi));
      svg += text(x0 - 4, y0 + kPanelH, fmt::format("{:.0f}", yr.lo), "end");
      svg += text(x0 - 4, y0 + 10, fmt::format("{:.0f}", yr.hi), "end");

      std::vector<double> px_, py_;
      for (const auto& t : tokens) {
        if (!usable(t) || t.speaker != speakers[r] || t.condition != conditions[c]) continue;
        px_.push_back(t.g1_duration_ms);
        py_.push_back(t.lag_ms);
        svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n",
                           px(t.g1_duration_ms), py(t.lag_ms));
      }
      std::string label = "slope = n/a";
      try {
        const auto fit = ols(px_, py_);
        const double a = xr.lo, b = xr.hi;
        svg += fmt::format(
            "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"firebrick\" stroke-width=\"1.5\"/>\n",
            px(a), py(fit.intercept + fit.slope * a), px(b), py(fit.intercept + fit.slope * b));
        label = fmt::format("slope = {:.3f}", fit.slope);
      } catch (const DataError&) {
        // Too few points or no spread in duration: draw the points only.
      }
      svg += text(x0 + 6, y0 + 14, label, "start");
    }
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_box_svg(const std::string& title, const std::string& y_label,
                           const std::vector<std::pair<std::string, std::vector<double>>>& groups) {
  std::vector<double> all;
  for (const auto& [_, v] : groups) {
    for (double x : v) {
      if (std::isfinite(x)) all.push_back(x);
    }
  }
  const Range yr = range_of(all);
  constexpr double kBoxW = 80, kPlotH = 300, kLeft = 70, kTop = 40;
  const double width = kLeft + std::max<std::size_t>(1, groups.size()) * (kBoxW + 30) + 20;
  const double height = kTop + kPlotH + 50;
  auto py = [&](double y) { return kTop + kPlotH - (y - yr.lo) / (yr.hi - yr.lo) * kPlotH; };

  std::string svg = header(width, height);
  svg += text(width / 2, 20, title);
  svg += fmt::format("<text x=\"20\" y=\"{:.1f}\" text-anchor=\"middle\" "
                     "transform=\"rotate(-90 20 {:.1f})\">{}</text>\n",
                     kTop + kPlotH / 2, kTop + kPlotH / 2, escape(y_label));
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft - 10,
                     kTop, kTop + kPlotH);
  for (int k = 0; k <= 4; ++k) {
    const double v = yr.lo + (yr.hi - yr.lo) * k / 4.0;
    svg += text(kLeft - 14, py(v) + 4, fmt::format("{:.2f}", v), "end");
  }

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double cx = kLeft + static_cast<double>(g) * (kBoxW + 30) + kBoxW / 2;
    svg += text(cx, kTop + kPlotH + 20, groups[g].first);
    std::vector<double> v;
    for (double x : groups[g].second) {
      if (std::isfinite(x)) v.push_back(x);
    }
    if (v.empty()) {
      svg += text(cx, kTop + kPlotH / 2, "no data");
      continue;
    }
    std::sort(v.begin(), v.end());
    const double q1 = quantile(v, 0.25), med = quantile(v, 0.5), q3 = quantile(v, 0.75);
    const double iqr = q3 - q1;
    const double lo_fence = q1 - 1.5 * iqr, hi_fence = q3 + 1.5 * iqr;
    const double wlo = *std::find_if(v.begin(), v.end(), [&](double x) { return x >= lo_fence; });
    const double whi = *std::find_if(v.rbegin(), v.rend(), [&](double x) { return x <= hi_fence; });
    const double x0 = cx - kBoxW / 2;

    svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.2f}\" x2=\"{0:.1f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n",
                       cx, py(wlo), py(q1));
    svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.2f}\" x2=\"{0:.1f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n",
                       cx, py(q3), py(whi));
    svg += fmt::format(
        "<rect x=\"{:.1f}\" y=\"{:.2f}\" width=\"{:.0f}\" height=\"{:.2f}\" fill=\"lightsteelblue\" stroke=\"black\"/>\n",
        x0, py(q3), kBoxW, std::max(0.5, py(q1) - py(q3)));
    svg += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.2f}\" x2=\"{:.1f}\" y2=\"{:.2f}\" stroke=\"black\" stroke-width=\"2\"/>\n",
                       x0, py(med), x0 + kBoxW, py(med));
    for (double x : v) {
      if (x < wlo || x > whi) {
        svg += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.2f}\" r=\"2\" fill=\"none\" stroke=\"black\"/>\n", cx, py(x));
      }
    }
    svg += text(cx, kTop + kPlotH + 34, fmt::format("n={}", v.size()));
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::string> emit_plots(std::span<const TokenRecord> tokens, const std::string& out_dir) {
  if (std::none_of(tokens.begin(), tokens.end(), usable)) throw DataError("no usable tokens to plot");

  std::map<Condition, std::vector<double>> lag_by_cond, tb_by_cond;
  std::map<std::string, std::vector<double>> tb_by_speaker;
  for (const auto& t : tokens) {
    if (!usable(t)) continue;
    lag_by_cond[t.condition].push_back(t.lag_ms);
    tb_by_cond[t.condition].push_back(t.tb_pos_z);
    tb_by_speaker[t.speaker].push_back(t.tb_pos_mm);
  }
  auto named = [](const auto& m) {
    std::vector<std::pair<std::string, std::vector<double>>> out;
    for (const auto& [k, v] : m) {
      if constexpr (std::is_same_v<std::decay_t<decltype(k)>, Condition>) {
        out.emplace_back(std::string(to_string(k)), v);
      } else {
        out.emplace_back(k, v);
      }
    }
    return out;
  };

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  const std::vector<std::pair<std::string, std::string>> figures = {
      {"scatter_lag_vs_duration.svg", render_scatter_svg(tokens)},
      {"box_lag_by_condition.svg", render_box_svg("Lag by condition", "lag_ms", named(lag_by_cond))},
      {"box_tb_by_condition.svg",
       render_box_svg("TB position at palatal onset", "tb_pos_z", named(tb_by_cond))},
      {"box_tb_by_speaker.svg", render_box_svg("TB position by speaker", "tb_pos_mm", named(tb_by_speaker))},
  };
  std::vector<std::string> paths;
  for (const auto& [name, body] : figures) {
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << body;
    paths.push_back(path.string());
  }
  return paths;
}

}  // namespace artic
