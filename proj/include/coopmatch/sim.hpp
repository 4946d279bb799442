#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coopmatch/controllers.hpp"
#include "coopmatch/graph.hpp"
#include "coopmatch/plant.hpp"
#include "coopmatch/synthesis.hpp"

namespace coopmatch {

inline constexpr double kBlowupThreshold = 1e9;
inline constexpr double kMaxDiscontinuousStep = 1e-3;

struct AgentInit {
  Vector z;
  Vector x;
  Vector chain_ext;
  Vector xi;
  std::optional<Vector> eta;
  std::optional<double> theta;

  friend bool operator==(const AgentInit& a, const AgentInit& b);
};

struct InitialConditions {
  enum class Mode {
    random,         // every coordinate uniform in [-box, box], theta in [0, box]
    explicit_values,
    perfect_start,  // random leader and z, compensators and chains on the matched manifold
  };
  Mode mode = Mode::random;
  std::uint64_t seed = 1;
  double box = 3.0;
  Vector w0;                     // explicit_values
  std::vector<AgentInit> agents;  // explicit_values

  friend bool operator==(const InitialConditions& a, const InitialConditions& b);
};

std::string to_string(InitialConditions::Mode mode);

struct Scenario {
  std::string name = "scenario";
  Digraph graph = Digraph::empty(1);
  LeaderModel leader{{0.0}, 1.0};
  LeaderInputPolicy input_policy;
  std::vector<AgentModel> agents;
  ControllerConfig controller;
  InitialConditions initial;
  double dt = 1e-3;
  double t_final = 30.0;
};

/// Throws ValidationError naming the violated assumption.
void validate_scenario(const Scenario& scn);

struct ResolvedInitialState {
  Vector w0;
  std::vector<AgentInit> agents;
};

/// Materializes the initial conditions; the random draw order is fixed
/// (w, then per agent z, x, chain_ext, xi, eta, theta) and independent of
/// the selected control law.
ResolvedInitialState resolve_initial_state(const Scenario& scn);

struct AgentSeries {
  Matrix z;
  Matrix x;
  Matrix chain_ext;
  Matrix xi;
  Matrix eta;  // zero columns unless the law carries an observer
  Vector theta;  // empty unless the law carries an adaptive gain
  Vector u;
  Vector y;
  Vector e;
  Vector eta_error;  // ‖η_i - w‖, empty without observer
};

struct SimTrace {
  std::string scenario_name;
  ControlLaw law = ControlLaw::adaptive;
  std::optional<std::uint64_t> seed;
  Vector times;
  Matrix w;
  Vector v;
  Vector y_r;
  std::vector<AgentSeries> agents;
  SynthesisResult synthesis;

  std::size_t size() const { return static_cast<std::size_t>(times.size()); }
};

/// Synthesis for the scenario's selected law.
SynthesisResult synthesize_for(const Scenario& scn);

/// Integrates leader, agents and compensators on the grid t_k = k dt.
/// Smooth laws use classical RK4; the sign-based law uses explicit Euler.
SimTrace run(const Scenario& scn);

struct ObserverFit {
  double c0 = 0.0;
  double lambda0 = 0.0;
  double r_squared = 0.0;
  std::size_t samples = 0;
  bool converged_at_start = false;
};

inline constexpr double kObserverFloor = 1e-8;

/// Least-squares fit of log‖η_i - w‖ = log c0 - λ0 t over the samples
/// preceding the first drop below kObserverFloor.
std::vector<ObserverFit> observer_convergence(const SimTrace& trace);

struct AgentTracking {
  double tail_max_error = 0.0;
  std::optional<double> final_theta;
  std::optional<double> theta_tail_delta;
};

struct TrackingReport {
  double tail_fraction = 0.0;
  double tail_start = 0.0;
  std::vector<AgentTracking> agents;

  double max_tail_error() const;
};

TrackingReport tracking_report(const SimTrace& trace, double tail_fraction);

}  // namespace coopmatch
