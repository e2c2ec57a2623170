#pragma once

// Planning oscillators coupled by target relative phases. Gesture onsets
// follow from the steady-state phases of the ensemble.
//
// Sign convention: a positive relative phase psi_j - psi_i means gesture j
// starts later than gesture i.

#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace artic {

struct CouplingEdge {
  std::string i;
  std::string j;
  double target_phase_rad = 0.0;  // demand psi_j - psi_i = target, in (-pi, pi]
  double weight = 1.0;
};

inline constexpr double kDefaultOmega0 = 2.0 * std::numbers::pi / 0.4;  // T0 = 400 ms

struct CouplingGraph {
  std::vector<std::string> nodes;
  std::string reference;
  std::vector<CouplingEdge> edges;
  double omega0_rad_s = kDefaultOmega0;
};

enum class PhaseMethod { kLeastSquares, kOscillator };

struct PhaseSolution {
  std::map<std::string, double> phases;  // reference node is 0
  PhaseMethod method = PhaseMethod::kLeastSquares;
  bool converged = false;
  double residual = 0.0;  // max |wrap(psi_j - psi_i - target)| over edges
};

// Wraps to (-pi, pi].
double wrap_phase(double rad);

// Throws ConfigError on unknown nodes, bad weights or phases, and on a
// disconnected graph (the message lists the unreachable nodes).
void validate_graph(const CouplingGraph& graph);

// Weighted least-squares phases from the graph Laplacian normal equations.
PhaseSolution solve_phases_ls(const CouplingGraph& graph);

struct OscillatorOptions {
  double dt_s = 1e-4;
  double t_max_s = 120.0;
  // Converged once every relative phase moves slower than this for
  // `window` consecutive steps.
  double rate_tol_rad_s = 1e-6;
  int window = 100;
};

// Gradient-flow integration of the coupled phase oscillators (explicit
// Euler). Missing init entries start at 0. Throws ConfigError when dt is not
// in (0, 1e-3] s.
PhaseSolution simulate_phases(const CouplingGraph& graph,
                              const std::map<std::string, double>& init,
                              const OscillatorOptions& options = {});

// onset_i = t_ref + psi_i / (2 pi) * T0, T0 = 2 pi / omega0 in ms. Throws
// DataError when the solution did not converge.
std::map<std::string, double> phases_to_onsets(const PhaseSolution& solution, double omega0_rad_s,
                                               double t_ref_ms);

// Graph file (JSON): {omega0_rad_s, reference, nodes, edges:[{i, j, phi_rad, weight}]}.
CouplingGraph graph_from_json(std::string_view text);
CouplingGraph read_graph_file(const std::string& path);

}  // namespace artic
