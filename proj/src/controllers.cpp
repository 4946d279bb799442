#include "coopmatch/controllers.hpp"

#include <cmath>

#include "coopmatch/errors.hpp"

namespace coopmatch {

std::string to_string(ControlLaw law) {
  switch (law) {
    case ControlLaw::full_order: return "full_order";
    case ControlLaw::reduced_order: return "reduced_order";
    case ControlLaw::adaptive: return "adaptive";
    case ControlLaw::saturated: return "saturated";
  }
  return "adaptive";
}

ControlLaw control_law_from_string(const std::string& s) {
  if (s == "full_order") return ControlLaw::full_order;
  if (s == "reduced_order") return ControlLaw::reduced_order;
  if (s == "adaptive") return ControlLaw::adaptive;
  if (s == "saturated") return ControlLaw::saturated;
  throw InvalidParameter("unknown controller '" + s + "'");
}

Vector stacked_state(const AgentState& s, const CompensatorState& comp) {
  Vector out(s.x.size() + comp.chain_ext.size());
  out << s.x, comp.chain_ext;
  return out;
}

double sat(double v, double epsilon) { return std::abs(v) <= epsilon ? v / epsilon : sgn(v); }

namespace {

const NeighborPacket& packet_from(Packets packets, std::size_t sender) {
  for (const auto& p : packets) {
    if (p.sender == sender) return p;
  }
  throw MissingNeighborData("no packet from neighbor " + std::to_string(sender));
}

void check_dims(const AgentModel& agent, const LeaderModel& leader, const CompensatorState& comp,
                const AgentState& s) {
  if (static_cast<std::size_t>(s.x.size()) != agent.nx() || static_cast<std::size_t>(s.z.size()) != agent.nz() ||
      static_cast<std::size_t>(comp.xi.size()) != agent.nz() ||
      static_cast<std::size_t>(comp.chain_ext.size()) + agent.nx() != leader.dim()) {
    throw InvalidParameter("agent '" + agent.name() + "': state dimensions do not match the model");
  }
}

// Σ a_ij (x̂_i - x̂_j), with x̂_0 = w arriving in the leader's packet.
Vector xhat_disagreement(const Vector& xhat, Neighbors neighbors, Packets packets) {
  Vector sum = Vector::Zero(xhat.size());
  for (const auto& nb : neighbors) sum += nb.weight * (xhat - packet_from(packets, nb.node).xhat);
  return sum;
}

Vector eta_disagreement(const Vector& eta, Neighbors neighbors, Packets packets) {
  Vector sum = Vector::Zero(eta.size());
  for (const auto& nb : neighbors) {
    const auto& p = packet_from(packets, nb.node);
    if (!p.eta) throw MissingNeighborData("packet from " + std::to_string(nb.node) + " carries no observer state");
    sum += nb.weight * (eta - *p.eta);
  }
  return sum;
}

// Shared first line u = -g(ξ, x) + x_{i(nx+1)} and the chain integrators.
// `top` is the right-hand side of the last chain coordinate; when the
// agent has no chain extension it acts directly through u.
ControlOutput assemble(const AgentModel& agent, const CompensatorState& comp, const AgentState& s, double top) {
  ControlOutput out;
  const double cancel = -agent.g(comp.xi, s.x);
  const Eigen::Index m = comp.chain_ext.size();
  out.derivative.chain_ext.resize(m);
  if (m == 0) {
    out.u = cancel + top;
  } else {
    out.u = cancel + comp.chain_ext(0);
    for (Eigen::Index k = 0; k + 1 < m; ++k) out.derivative.chain_ext(k) = comp.chain_ext(k + 1);
    out.derivative.chain_ext(m - 1) = top;
  }
  out.derivative.xi = agent.A0() * comp.xi + agent.f(s.x);
  return out;
}

}  // namespace

ControlOutput full_order_step(const AgentModel& agent, const LeaderModel& leader, const CompensatorState& comp,
                              const AgentState& s, Neighbors neighbors, Packets packets, double v,
                              const SynthesisResult& gains) {
  check_dims(agent, leader, comp, s);
  if (!comp.eta) throw InvalidParameter("full_order law needs an observer state");
  if (gains.k0.size() != leader.dim() || gains.l0.size() != static_cast<Eigen::Index>(leader.dim())) {
    throw InvalidParameter("full_order law needs k0 and l0 gains");
  }
  const Vector xhat = stacked_state(s, comp);
  const Vector& eta = *comp.eta;
  const Vector k0 = Eigen::Map<const Vector>(gains.k0.data(), static_cast<Eigen::Index>(gains.k0.size()));

  const double dn = leader.d_last();
  const double top = leader.bottom().dot(xhat) + dn * v + dn * k0.dot(xhat - eta);
  ControlOutput out = assemble(agent, comp, s, top);

  const Vector eta_v = eta_disagreement(eta, neighbors, packets);
  out.derivative.eta = Vector(leader.S() * eta + leader.d() * v + gains.l0 * leader.c().dot(eta_v));
  return out;
}

ControlOutput reduced_order_step(const AgentModel& agent, const LeaderModel& leader, const CompensatorState& comp,
                                 const AgentState& s, Neighbors neighbors, Packets packets, double v,
                                 const SynthesisResult& gains) {
  check_dims(agent, leader, comp, s);
  if (gains.K.size() != static_cast<Eigen::Index>(leader.dim())) {
    throw InvalidParameter("reduced_order law needs the feedback gain K");
  }
  const Vector xhat = stacked_state(s, comp);
  const Vector xhat_v = xhat_disagreement(xhat, neighbors, packets);
  const double dn = leader.d_last();
  const double top = leader.bottom().dot(xhat) + dn * v + dn * gains.K.dot(xhat_v);
  return assemble(agent, comp, s, top);
}

namespace {

ControlOutput adaptive_common(const AgentModel& agent, const LeaderModel& leader, const CompensatorState& comp,
                              const AgentState& s, Neighbors neighbors, Packets packets, const SynthesisResult& gains,
                              double (*switching)(double, double), double epsilon, double sigma) {
  check_dims(agent, leader, comp, s);
  if (!comp.theta) throw InvalidParameter("adaptive law needs a gain state theta");
  if (gains.P.rows() != static_cast<Eigen::Index>(leader.dim())) throw InvalidParameter("adaptive law needs P");
  const double theta = *comp.theta;
  const Vector xhat = stacked_state(s, comp);
  const Vector xhat_v = xhat_disagreement(xhat, neighbors, packets);
  const double y = (gains.P * leader.d()).dot(xhat_v);  // dᵀP x̂_v, a scalar

  const double dn = leader.d_last();
  const double top = leader.bottom().dot(xhat) - dn * theta * y - dn * theta * switching(y, epsilon);
  ControlOutput out = assemble(agent, comp, s, top);
  out.derivative.theta = y * y + std::abs(y) - sigma * theta;
  return out;
}

}  // namespace

ControlOutput adaptive_step(const AgentModel& agent, const LeaderModel& leader, const CompensatorState& comp,
                            const AgentState& s, Neighbors neighbors, Packets packets, const SynthesisResult& gains) {
  return adaptive_common(
      agent, leader, comp, s, neighbors, packets, gains, [](double y, double) { return sgn(y); }, 0.0, 0.0);
}

ControlOutput saturated_adaptive_step(const AgentModel& agent, const LeaderModel& leader,
                                      const CompensatorState& comp, const AgentState& s, Neighbors neighbors,
                                      Packets packets, const SynthesisResult& gains, double epsilon, double sigma) {
  if (!(epsilon > 0.0)) throw InvalidParameter("saturation width epsilon must be positive");
  if (!(sigma > 0.0)) throw InvalidParameter("leakage sigma must be positive");
  return adaptive_common(agent, leader, comp, s, neighbors, packets, gains, &sat, epsilon, sigma);
}

ControlOutput controller_step(const ControllerConfig& config, const AgentModel& agent, const LeaderModel& leader,
                              const CompensatorState& comp, const AgentState& s, Neighbors neighbors,
                              Packets packets, double v, const SynthesisResult& gains) {
  switch (config.law) {
    case ControlLaw::full_order:
      return full_order_step(agent, leader, comp, s, neighbors, packets, v, gains);
    case ControlLaw::reduced_order:
      return reduced_order_step(agent, leader, comp, s, neighbors, packets, v, gains);
    case ControlLaw::adaptive:
      return adaptive_step(agent, leader, comp, s, neighbors, packets, gains);
    case ControlLaw::saturated:
      return saturated_adaptive_step(agent, leader, comp, s, neighbors, packets, gains, config.epsilon,
                                     config.sigma);
  }
  throw InvalidParameter("unknown control law");
}

}  // namespace coopmatch
