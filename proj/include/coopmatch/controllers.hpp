#pragma once

#include <optional>
#include <span>
#include <string>

#include "coopmatch/graph.hpp"
#include "coopmatch/plant.hpp"
#include "coopmatch/synthesis.hpp"

namespace coopmatch {

enum class ControlLaw {
  full_order,     // distributed leader observer + chain compensator
  reduced_order,  // static coupling K on neighbor disagreement
  adaptive,       // sign-based law with adaptive gain, never reads v
  saturated,      // continuous approximation of `adaptive` with leakage
};

std::string to_string(ControlLaw law);
ControlLaw control_law_from_string(const std::string& s);

/// Laws that read the leader input v directly.
constexpr bool uses_leader_input(ControlLaw law) {
  return law == ControlLaw::full_order || law == ControlLaw::reduced_order;
}
constexpr bool needs_feedback_gain(ControlLaw law) { return law == ControlLaw::reduced_order; }
constexpr bool needs_observer_gain(ControlLaw law) { return law == ControlLaw::full_order; }
constexpr bool has_theta(ControlLaw law) { return law == ControlLaw::adaptive || law == ControlLaw::saturated; }

struct ControllerConfig {
  ControlLaw law = ControlLaw::adaptive;
  SynthesisOptions synthesis;
  double epsilon = 0.01;  // saturated only
  double sigma = 0.01;    // saturated only
};

/// Per-agent dynamic compensator.
struct CompensatorState {
  Vector chain_ext;             // x_{i(nx+1)} .. x_{i n0}
  Vector xi;                    // estimate of z_i
  std::optional<Vector> eta;    // leader-state estimate (full_order)
  std::optional<double> theta;  // adaptive gain (adaptive, saturated)
};

struct NeighborPacket {
  std::size_t sender = 0;
  Vector xhat;                // col(x_1..x_n0), w for the leader
  std::optional<Vector> eta;  // w for the leader
};

struct ControlOutput {
  double u = 0.0;
  CompensatorState derivative;
};

/// col(x, chain_ext), the agent's copy of the leader coordinates.
Vector stacked_state(const AgentState& s, const CompensatorState& comp);

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// x/ε inside [-ε, ε], sgn(x) outside.
double sat(double v, double epsilon);

using Neighbors = std::span<const Digraph::Neighbor>;
using Packets = std::span<const NeighborPacket>;

ControlOutput full_order_step(const AgentModel& agent, const LeaderModel& leader, const CompensatorState& comp,
                              const AgentState& s, Neighbors neighbors, Packets packets, double v,
                              const SynthesisResult& gains);

ControlOutput reduced_order_step(const AgentModel& agent, const LeaderModel& leader, const CompensatorState& comp,
                                 const AgentState& s, Neighbors neighbors, Packets packets, double v,
                                 const SynthesisResult& gains);

ControlOutput adaptive_step(const AgentModel& agent, const LeaderModel& leader, const CompensatorState& comp,
                            const AgentState& s, Neighbors neighbors, Packets packets, const SynthesisResult& gains);

ControlOutput saturated_adaptive_step(const AgentModel& agent, const LeaderModel& leader,
                                      const CompensatorState& comp, const AgentState& s, Neighbors neighbors,
                                      Packets packets, const SynthesisResult& gains, double epsilon, double sigma);

/// Dispatches on config.law. `v` is ignored by the adaptive laws.
ControlOutput controller_step(const ControllerConfig& config, const AgentModel& agent, const LeaderModel& leader,
                              const CompensatorState& comp, const AgentState& s, Neighbors neighbors,
                              Packets packets, double v, const SynthesisResult& gains);

}  // namespace coopmatch
