// Command-line front end: simulate, parse, analyze, plan, demo, exp54.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "artic/coupling_planner.h"
#include "artic/error.h"
#include "artic/landmark_parser.h"
#include "artic/scenario.h"
#include "artic/signal_smoothing.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

void print_overview(const artic::ExperimentReport& r, std::ostream& out) {
  for (const auto& [cond, label] : r.classifications) {
    const auto it = r.pooled.find(cond);
    if (it == r.pooled.end()) {
      out << fmt::format("{:<13} {}\n", artic::to_string(cond), artic::to_string(label));
      continue;
    }
    const auto& p = it->second;
    out << fmt::format("{:<13} {:<13} slope={:.3f} r2={:.3f} p={:.4f} n={}\n", artic::to_string(cond),
                       artic::to_string(label), p.slope, p.r2, p.p_perm, p.n);
  }
  if (r.lag_contrast) {
    out << fmt::format("lag contrast (A-U): {:.2f} ms, p={:.4f}\n", r.lag_contrast->difference,
                       r.lag_contrast->p_perm);
  }
  if (r.tb_contrast_mm) {
    out << fmt::format("TB contrast (A-U): {:.3f} mm", r.tb_contrast_mm->difference);
    if (r.tb_contrast_z) out << fmt::format(", {:.3f} z", r.tb_contrast_z->difference);
    out << '\n';
  }
  const auto& ex = r.exclusions;
  out << fmt::format("excluded: {} parse failures, {:.2f}% g1 duration, {:.2f}% lag of {} tokens\n",
                     ex.parse_failures, 100.0 * ex.duration_fraction(), 100.0 * ex.lag_fraction(), ex.total);
}

int run_simulate(const artic::ScenarioConfig& config, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  auto run = artic::run_scenario(config);
  artic::write_run(run, out_dir);
  print_overview(run.report, std::cout);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  std::cout << fmt::format("wrote {} files to {} in {:.1f} s\n", run.report.files.size(), out_dir,
                           elapsed.count());
  return 0;
}

std::pair<double, double> parse_window(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw artic::ConfigError("--window-ms expects a:b");
  try {
    return {std::stod(spec.substr(0, colon)), std::stod(spec.substr(colon + 1))};
  } catch (const std::exception&) {
    throw artic::ConfigError(fmt::format("bad --window-ms '{}'", spec));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Articulatory gesture simulator and EMA-style coordination analysis"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  auto* simulate = app.add_subcommand("simulate", "Simulate a scenario and analyse the tokens");
  simulate->add_option("--config", config_path, "Scenario config (JSON)")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();

  std::string traj_path, channel = "LA", window_spec, direction = "dec";
  double threshold = 0.2;
  bool smooth_first = false;
  auto* parse = app.add_subcommand("parse", "Find gesture landmarks in a trajectory CSV");
  parse->add_option("trajectory", traj_path, "Trajectory CSV")->required();
  parse->add_option("--channel", channel, "Channel name");
  parse->add_option("--window-ms", window_spec, "Search window a:b in ms")->required();
  parse->add_option("--direction", direction, "Constriction direction")
      ->check(CLI::IsMember({"inc", "dec"}));
  parse->add_option("--threshold", threshold, "Velocity threshold fraction");
  parse->add_flag("--smooth", smooth_first, "Robust GCV smoothing before parsing");

  std::string tokens_path;
  int n_perm = artic::kDefaultPermutations;
  std::uint64_t seed = 20240501;
  auto* analyze = app.add_subcommand("analyze", "Recompute statistics from a token table");
  analyze->add_option("--tokens", tokens_path, "Token CSV")->required();
  analyze->add_option("--out", out_dir, "Output directory")->required();
  analyze->add_option("--n-perm", n_perm, "Permutations per test");
  analyze->add_option("--seed", seed, "Permutation seed");

  std::string graph_path;
  double t_ref_ms = 0.0;
  auto* plan = app.add_subcommand("plan", "Solve a coupling graph for onset times");
  plan->add_option("--graph", graph_path, "Coupling graph (JSON)")->required();
  plan->add_option("--t-ref-ms", t_ref_ms, "Onset of the reference gesture");
  bool plan_oscillator = false;
  plan->add_flag("--oscillator", plan_oscillator, "Use the oscillator simulation instead of least squares");

  std::string demo_out = "demo_out";
  auto* demo = app.add_subcommand("demo", "Default scenario end to end");
  demo->add_option("--out", demo_out, "Output directory");

  auto* exp54 = app.add_subcommand("exp54", "Blending-only, anti-phase and eccentric accounts");
  exp54->add_option("--config", config_path, "Scenario config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return run_simulate(artic::read_config_file(config_path), out_dir);

    if (*demo) return run_simulate(artic::ScenarioConfig{}, demo_out);

    if (*parse) {
      std::ifstream in(traj_path);
      if (!in) throw artic::DataError(fmt::format("cannot open '{}'", traj_path));
      const auto channels = artic::read_trajectory_csv(in);
      const auto it = std::find_if(channels.begin(), channels.end(),
                                   [&](const auto& t) { return t.channel == channel; });
      if (it == channels.end()) throw artic::ConfigError(fmt::format("no channel '{}'", channel));
      artic::Trajectory traj = *it;
      if (smooth_first) traj.samples = artic::robust_smooth(traj.samples, artic::default_penalty_grid());
      const auto [a, b] = parse_window(window_spec);
      const auto dir = direction == "inc" ? artic::Direction::kIncreasing : artic::Direction::kDecreasing;
      const auto g = artic::find_gesture(traj, {a, b}, dir, threshold);
      std::cout << "channel,onset_ms,target_ms,release_ms,offset_ms,pv_to,pv_away\n"
                << fmt::format("{},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f}\n", channel, g.onset_ms,
                               g.target_ms, g.release_ms, g.offset_ms, g.peak_to.velocity_mm_s,
                               g.peak_away.velocity_mm_s);
      return 0;
    }

    if (*analyze) {
      std::ifstream in(tokens_path);
      if (!in) throw artic::DataError(fmt::format("cannot open '{}'", tokens_path));
      artic::ScenarioRun run;
      run.tokens = artic::read_token_csv(in);
      run.report = artic::analyze_tokens(run.tokens, {n_perm, seed, 3.0});
      artic::write_run(run, out_dir);
      print_overview(run.report, std::cout);
      return 0;
    }

    if (*plan) {
      const auto graph = artic::read_graph_file(graph_path);
      // The oscillator starts from the least-squares phases.
      const auto ls = artic::solve_phases_ls(graph);
      const auto sol = plan_oscillator ? artic::simulate_phases(graph, ls.phases) : ls;
      const auto onsets = artic::phases_to_onsets(sol, graph.omega0_rad_s, t_ref_ms);
      std::cout << "node,psi_rad,onset_ms\n";
      for (const auto& node : graph.nodes) {
        std::cout << fmt::format("{},{:.6f},{:.3f}\n", node, sol.phases.at(node), onsets.at(node));
      }
      return 0;
    }

    if (*exp54) {
      const auto report = artic::experiment_54(artic::read_config_file(config_path));
      std::cout << artic::exp54_to_json(report) << '\n';
      return 0;
    }
  } catch (const artic::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const artic::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return 0;
}
