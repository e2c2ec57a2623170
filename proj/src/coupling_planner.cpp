#include "artic/coupling_planner.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "artic/error.h"

namespace artic {

namespace {

constexpr double kPi = std::numbers::pi;

std::map<std::string, int> index_nodes(const CouplingGraph& graph) {
  std::map<std::string, int> idx;
  for (const auto& n : graph.nodes) idx.emplace(n, static_cast<int>(idx.size()));
  return idx;
}

double max_edge_residual(const CouplingGraph& graph, const std::map<std::string, double>& phases) {
  double worst = 0.0;
  for (const auto& e : graph.edges) {
    const double r = wrap_phase(phases.at(e.j) - phases.at(e.i) - e.target_phase_rad);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace

double wrap_phase(double rad) {
  double w = std::remainder(rad, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

void validate_graph(const CouplingGraph& graph) {
  if (graph.nodes.empty()) throw ConfigError("coupling graph has no nodes");
  const auto idx = index_nodes(graph);
  if (idx.size() != graph.nodes.size()) throw ConfigError("duplicate node ids in coupling graph");
  if (!idx.contains(graph.reference)) {
    throw ConfigError(fmt::format("reference '{}' is not a node", graph.reference));
  }
  if (!(graph.omega0_rad_s > 0.0) || !std::isfinite(graph.omega0_rad_s)) {
    throw ConfigError("omega0 must be positive");
  }
  for (const auto& e : graph.edges) {
    if (!idx.contains(e.i) || !idx.contains(e.j)) {
      throw ConfigError(fmt::format("edge ({}, {}) names an unknown node", e.i, e.j));
    }
    if (e.i == e.j) throw ConfigError(fmt::format("self-loop on '{}'", e.i));
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw ConfigError(fmt::format("edge ({}, {}) weight must be > 0", e.i, e.j));
    }
    if (!(e.target_phase_rad > -kPi && e.target_phase_rad <= kPi)) {
      throw ConfigError(fmt::format("edge ({}, {}) target phase outside (-pi, pi]", e.i, e.j));
    }
  }

  // Breadth-first reachability from the reference.
  std::set<std::string> seen{graph.reference};
  std::vector<std::string> frontier{graph.reference};
  while (!frontier.empty()) {
    const std::string cur = frontier.back();
    frontier.pop_back();
    for (const auto& e : graph.edges) {
      const std::string* next = nullptr;
      if (e.i == cur) next = &e.j;
      if (e.j == cur) next = &e.i;
      if (next && seen.insert(*next).second) frontier.push_back(*next);
    }
  }
  if (seen.size() != graph.nodes.size()) {
    std::vector<std::string> missing;
    for (const auto& n : graph.nodes) {
      if (!seen.contains(n)) missing.push_back(n);
    }
    throw ConfigError(fmt::format("coupling graph is disconnected; unreachable: {}",
                                  fmt::join(missing, ", ")));
  }
}

PhaseSolution solve_phases_ls(const CouplingGraph& graph) {
  validate_graph(graph);
  const auto idx = index_nodes(graph);
  const int n = static_cast<int>(graph.nodes.size());
  const int ref = idx.at(graph.reference);

  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (const auto& e : graph.edges) {
    const int i = idx.at(e.i);
    const int j = idx.at(e.j);
    lap(i, i) += e.weight;
    lap(j, j) += e.weight;
    lap(i, j) -= e.weight;
    lap(j, i) -= e.weight;
    rhs(j) += e.weight * e.target_phase_rad;
    rhs(i) -= e.weight * e.target_phase_rad;
  }

  // Pin the reference phase by dropping its row and column.
  std::vector<int> free;
  for (int k = 0; k < n; ++k) {
    if (k != ref) free.push_back(k);
  }
  const int m = static_cast<int>(free.size());
  Eigen::VectorXd psi_full = Eigen::VectorXd::Zero(n);
  if (m > 0) {
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd b(m);
    for (int r = 0; r < m; ++r) {
      b(r) = rhs(free[r]);
      for (int c = 0; c < m; ++c) a(r, c) = lap(free[r], free[c]);
    }
    const Eigen::VectorXd psi = a.ldlt().solve(b);
    for (int r = 0; r < m; ++r) psi_full(free[r]) = psi(r);
  }

  PhaseSolution sol;
  sol.method = PhaseMethod::kLeastSquares;
  sol.converged = true;
  for (const auto& [name, k] : idx) sol.phases[name] = psi_full(k);
  sol.residual = max_edge_residual(graph, sol.phases);
  return sol;
}

PhaseSolution simulate_phases(const CouplingGraph& graph,
                              const std::map<std::string, double>& init,
                              const OscillatorOptions& options) {
  validate_graph(graph);
  if (!(options.dt_s > 0.0 && options.dt_s <= 1e-3)) {
    throw ConfigError(fmt::format("oscillator dt must lie in (0, 1e-3] s, got {}", options.dt_s));
  }
  const auto idx = index_nodes(graph);
  const int n = static_cast<int>(graph.nodes.size());

  struct IndexedEdge {
    int i, j;
    double phi, a;
  };
  std::vector<IndexedEdge> edges;
  for (const auto& e : graph.edges) {
    edges.push_back({idx.at(e.i), idx.at(e.j), e.target_phase_rad, e.weight});
  }

  std::vector<double> theta(n, 0.0);
  for (const auto& [name, value] : init) {
    auto it = idx.find(name);
    if (it == idx.end()) throw ConfigError(fmt::format("init names unknown node '{}'", name));
    theta[it->second] = value;
  }

  std::vector<double> rate(n);
  const auto steps = static_cast<long>(std::ceil(options.t_max_s / options.dt_s));
  int quiet = 0;
  bool converged = false;
  for (long s = 0; s < steps; ++s) {
    // theta_dot = omega0 - dV/dtheta, V = sum -a cos(theta_j - theta_i - phi).
    std::fill(rate.begin(), rate.end(), graph.omega0_rad_s);
    for (const auto& e : edges) {
      const double f = e.a * std::sin(theta[e.j] - theta[e.i] - e.phi);
      rate[e.i] += f;
      rate[e.j] -= f;
    }
    for (int k = 0; k < n; ++k) theta[k] += options.dt_s * rate[k];

    // The fastest-changing relative phase moves at max(rate) - min(rate).
    const auto [lo, hi] = std::minmax_element(rate.begin(), rate.end());
    if (*hi - *lo < options.rate_tol_rad_s) {
      if (++quiet >= options.window) {
        converged = true;
        break;
      }
    } else {
      quiet = 0;
    }
  }

  PhaseSolution sol;
  sol.method = PhaseMethod::kOscillator;
  sol.converged = converged;
  const double ref = theta[idx.at(graph.reference)];
  for (const auto& [name, k] : idx) sol.phases[name] = wrap_phase(theta[k] - ref);
  sol.phases[graph.reference] = 0.0;
  sol.residual = max_edge_residual(graph, sol.phases);
  return sol;
}

std::map<std::string, double> phases_to_onsets(const PhaseSolution& solution, double omega0_rad_s,
                                               double t_ref_ms) {
  if (!solution.converged) throw DataError("phase solution did not converge");
  if (!(omega0_rad_s > 0.0)) throw ConfigError("omega0 must be positive");
  const double period_ms = 1000.0 * 2.0 * kPi / omega0_rad_s;
  std::map<std::string, double> onsets;
  for (const auto& [name, psi] : solution.phases) {
    onsets[name] = t_ref_ms + psi / (2.0 * kPi) * period_ms;
  }
  return onsets;
}

CouplingGraph graph_from_json(std::string_view text) {
  using nlohmann::json;
  try {
    const json doc = json::parse(text);
    CouplingGraph g;
    g.omega0_rad_s = doc.value("omega0_rad_s", kDefaultOmega0);
    g.reference = doc.at("reference").get<std::string>();
    g.nodes = doc.at("nodes").get<std::vector<std::string>>();
    for (const auto& e : doc.at("edges")) {
      g.edges.push_back({e.at("i").get<std::string>(), e.at("j").get<std::string>(),
                         e.at("phi_rad").get<double>(), e.value("weight", 1.0)});
    }
    return g;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed coupling graph: {}", e.what()));
  }
}

CouplingGraph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open graph file '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return graph_from_json(buf.str());
}

}  // namespace artic
