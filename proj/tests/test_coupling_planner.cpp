#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "artic/coupling_planner.h"
#include "artic/error.h"

using namespace artic;

namespace {

constexpr double kPi = std::numbers::pi;

CouplingGraph c_center() {
  CouplingGraph g;
  g.nodes = {"C1", "C2", "V"};
  g.reference = "V";
  g.edges = {{"C1", "V", 0.0, 1.0}, {"C2", "V", 0.0, 1.0}, {"C1", "C2", kPi, 1.0}};
  return g;
}

// Brute-force oracle: minimise the least-squares phase energy over psi_C1 and
// psi_C2 (psi_V = 0) on a grid, then refine by golden-section search.
std::pair<double, double> c_center_oracle() {
  auto energy = [](double a, double b) {
    return (0.0 - a) * (0.0 - a) + (0.0 - b) * (0.0 - b) + (b - a - kPi) * (b - a - kPi);
  };
  double best_a = 0, best_b = 0, best = energy(0, 0);
  for (double a = -kPi; a <= kPi; a += 1e-3) {
    for (double b = -kPi; b <= kPi; b += 1e-3) {
      if (const double e = energy(a, b); e < best) {
        best = e;
        best_a = a;
        best_b = b;
      }
    }
  }
  // Coordinate descent with golden-section line searches.
  auto golden = [](auto f, double lo, double hi) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i = 0; i < 200; ++i) {
      const double m1 = hi - r * (hi - lo), m2 = lo + r * (hi - lo);
      if (f(m1) < f(m2)) {
        hi = m2;
      } else {
        lo = m1;
      }
    }
    return 0.5 * (lo + hi);
  };
  for (int sweep = 0; sweep < 50; ++sweep) {
    best_a = golden([&](double a) { return energy(a, best_b); }, best_a - 0.01, best_a + 0.01);
    best_b = golden([&](double b) { return energy(best_a, b); }, best_b - 0.01, best_b + 0.01);
  }
  return {best_a, best_b};
}

CouplingGraph random_tree(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> phase(-3.0, 3.0), weight(0.5, 2.0);
  CouplingGraph g;
  for (int k = 0; k < n; ++k) g.nodes.push_back("n" + std::to_string(k));
  g.reference = g.nodes[0];
  for (int k = 1; k < n; ++k) {
    std::uniform_int_distribution<int> parent(0, k - 1);
    g.edges.push_back({g.nodes[static_cast<std::size_t>(parent(rng))], g.nodes[static_cast<std::size_t>(k)],
                       phase(rng), weight(rng)});
  }
  return g;
}

}  // namespace

TEST(WrapPhase, HalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_phase(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_phase(-kPi), kPi);
  EXPECT_NEAR(wrap_phase(3 * kPi / 2), -kPi / 2, 1e-12);
  EXPECT_NEAR(wrap_phase(0.3 + 8 * kPi), 0.3, 1e-12);
}

TEST(CCenter, OracleIsPlusMinusPiOverThree) {
  const auto [a, b] = c_center_oracle();
  EXPECT_NEAR(a, -kPi / 3, 1e-6);
  EXPECT_NEAR(b, kPi / 3, 1e-6);
}

TEST(CCenter, LeastSquaresMatchesOracle) {
  const auto [a, b] = c_center_oracle();
  const auto sol = solve_phases_ls(c_center());
  EXPECT_NEAR(sol.phases.at("C1"), a, 1e-3);
  EXPECT_NEAR(sol.phases.at("C2"), b, 1e-3);
  EXPECT_DOUBLE_EQ(sol.phases.at("V"), 0.0);
}

TEST(CCenter, OscillatorMatchesOracle) {
  const auto [a, b] = c_center_oracle();
  const auto sol = simulate_phases(c_center(), {{"C1", -0.4}, {"C2", 0.2}});
  ASSERT_TRUE(sol.converged);
  EXPECT_NEAR(sol.phases.at("C1"), a, 1e-3);
  EXPECT_NEAR(sol.phases.at("C2"), b, 1e-3);
}

TEST(CCenter, OscillatorMirrorBasin) {
  // pi and -pi are the same target, so the mirrored ordering is also stable.
  const auto sol = simulate_phases(c_center(), {{"C1", 0.4}, {"C2", -0.2}});
  ASSERT_TRUE(sol.converged);
  EXPECT_NEAR(sol.phases.at("C1"), kPi / 3, 1e-3);
  EXPECT_NEAR(sol.phases.at("C2"), -kPi / 3, 1e-3);
}

TEST(CCenter, OnsetsOrderedAroundVowel) {
  const auto sol = solve_phases_ls(c_center());
  const auto on = phases_to_onsets(sol, kDefaultOmega0, 100.0);
  EXPECT_DOUBLE_EQ(on.at("V"), 100.0);
  EXPECT_NEAR(on.at("C1"), 100.0 - 400.0 / 6.0, 1e-3 * 400.0);
  EXPECT_NEAR(on.at("C2"), 100.0 + 400.0 / 6.0, 1e-3 * 400.0);
}

TEST(Trees, LeastSquaresReproducesEdgeTargets) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_tree(rng, 2 + trial % 7);
    const auto sol = solve_phases_ls(g);
    for (const auto& e : g.edges) {
      EXPECT_NEAR(sol.phases.at(e.j) - sol.phases.at(e.i), e.target_phase_rad, 1e-6);
    }
    EXPECT_LT(sol.residual, 1e-6);
  }
}

TEST(Trees, OscillatorReproducesEdgeTargets) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = random_tree(rng, 3 + trial % 3);
    const auto sol = simulate_phases(g, {});
    ASSERT_TRUE(sol.converged);
    for (const auto& e : g.edges) {
      EXPECT_NEAR(wrap_phase(sol.phases.at(e.j) - sol.phases.at(e.i) - e.target_phase_rad), 0.0, 1e-3);
    }
  }
}

TEST(Planner, InPhaseAndAntiPhasePairs) {
  CouplingGraph g;
  g.nodes = {"a", "b"};
  g.reference = "a";
  g.edges = {{"a", "b", 0.0, 1.0}};
  EXPECT_NEAR(solve_phases_ls(g).phases.at("b"), 0.0, 1e-12);
  g.edges[0].target_phase_rad = kPi;
  const auto sol = solve_phases_ls(g);
  const auto on = phases_to_onsets(sol, kDefaultOmega0, 0.0);
  EXPECT_NEAR(on.at("b") - on.at("a"), 200.0, 1e-6);
}

TEST(Planner, ReferenceIsZeroForAnyChoice) {
  auto g = c_center();
  for (const auto& ref : g.nodes) {
    g.reference = ref;
    EXPECT_DOUBLE_EQ(solve_phases_ls(g).phases.at(ref), 0.0);
  }
}

TEST(Planner, DisconnectedGraphNamesUnreachableNodes) {
  CouplingGraph g;
  g.nodes = {"a", "b", "c", "d"};
  g.reference = "a";
  g.edges = {{"a", "b", 0.0, 1.0}, {"c", "d", 0.0, 1.0}};
  try {
    solve_phases_ls(g);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('c'), std::string::npos);
    EXPECT_NE(msg.find('d'), std::string::npos);
  }
}

TEST(Planner, RejectsBadInput) {
  auto g = c_center();
  g.edges[0].weight = 0.0;
  EXPECT_THROW(validate_graph(g), ConfigError);
  g = c_center();
  g.edges[0].j = "X";
  EXPECT_THROW(validate_graph(g), ConfigError);
  g = c_center();
  g.reference = "Q";
  EXPECT_THROW(validate_graph(g), ConfigError);
  EXPECT_THROW(simulate_phases(c_center(), {}, {.dt_s = 0.01}), ConfigError);
}

TEST(Planner, NonConvergedSolutionHasNoOnsets) {
  auto sol = solve_phases_ls(c_center());
  sol.converged = false;
  EXPECT_THROW(phases_to_onsets(sol, kDefaultOmega0, 0.0), DataError);
}

TEST(Planner, OscillatorTimeLimitReportsNonConvergence) {
  const auto sol = simulate_phases(c_center(), {{"C1", 2.5}}, {.dt_s = 1e-4, .t_max_s = 0.01});
  EXPECT_FALSE(sol.converged);
}

TEST(GraphJson, ParsesSpecifiedKeys) {
  const auto g = graph_from_json(R"({
    "omega0_rad_s": 10.0, "reference": "V", "nodes": ["C1", "C2", "V"],
    "edges": [{"i": "C1", "j": "V", "phi_rad": 0.0, "weight": 1.0},
              {"i": "C2", "j": "V", "phi_rad": 0.0},
              {"i": "C1", "j": "C2", "phi_rad": 3.141592653589793, "weight": 2.0}]})");
  EXPECT_DOUBLE_EQ(g.omega0_rad_s, 10.0);
  ASSERT_EQ(g.edges.size(), 3u);
  EXPECT_DOUBLE_EQ(g.edges[1].weight, 1.0);
  EXPECT_DOUBLE_EQ(g.edges[2].weight, 2.0);
  EXPECT_THROW(graph_from_json("[]"), ConfigError);
}
