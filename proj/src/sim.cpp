#include "coopmatch/sim.hpp"

#include <cmath>
#include <random>

#include "coopmatch/errors.hpp"

namespace coopmatch {

namespace {

bool same_opt(const std::optional<Vector>& a, const std::optional<Vector>& b) {
  return a.has_value() == b.has_value() && (!a || same(*a, *b));
}

}  // namespace

bool operator==(const AgentInit& a, const AgentInit& b) {
  return same(a.z, b.z) && same(a.x, b.x) && same(a.chain_ext, b.chain_ext) && same(a.xi, b.xi) &&
         same_opt(a.eta, b.eta) && a.theta == b.theta;
}

bool operator==(const InitialConditions& a, const InitialConditions& b) {
  return a.mode == b.mode && a.seed == b.seed && a.box == b.box && same(a.w0, b.w0) && a.agents == b.agents;
}

std::string to_string(InitialConditions::Mode mode) {
  switch (mode) {
    case InitialConditions::Mode::random: return "random";
    case InitialConditions::Mode::explicit_values: return "explicit";
    case InitialConditions::Mode::perfect_start: return "perfect_start";
  }
  return "random";
}

void validate_scenario(const Scenario& scn) {
  const std::size_t n = scn.graph.follower_count();
  if (scn.agents.size() != n) {
    throw ValidationError("scenario declares " + std::to_string(scn.agents.size()) + " agents but the graph has " +
                          std::to_string(n) + " followers");
  }
  if (n == 0) throw ValidationError("scenario needs at least one follower");
  if (!is_connected(scn.graph)) {
    throw ValidationError(
        "Assumption 1 (connected communication graph) violated: the leader must reach every follower and the "
        "follower subgraph must be undirected");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!check_relative_degree(scn.agents[i], scn.leader)) {
      throw ValidationError("Assumption 2 (relative degree) violated: agent " + std::to_string(i + 1) + " ('" +
                            scn.agents[i].name() + "') has chain length " + std::to_string(scn.agents[i].nx()) +
                            " > leader dimension " + std::to_string(scn.leader.dim()));
    }
  }
  const ControlLaw law = scn.controller.law;
  if (uses_leader_input(law) && scn.input_policy.private_input) {
    throw ValidationError("controller '" + to_string(law) +
                          "' reads the leader input v, but the input policy is marked private");
  }
  if (!(scn.dt > 0.0) || !(scn.t_final > 0.0) || scn.dt > scn.t_final) {
    throw ValidationError("need 0 < dt <= t_final");
  }
  if (law == ControlLaw::adaptive && scn.dt > kMaxDiscontinuousStep * (1.0 + 1e-12)) {
    throw ValidationError("the sign-based adaptive law requires dt <= 1e-3");
  }
  if (law == ControlLaw::saturated && (!(scn.controller.epsilon > 0.0) || !(scn.controller.sigma > 0.0))) {
    throw ValidationError("saturated law needs epsilon > 0 and sigma > 0");
  }
  if (scn.initial.mode == InitialConditions::Mode::explicit_values) {
    const auto& ic = scn.initial;
    if (static_cast<std::size_t>(ic.w0.size()) != scn.leader.dim() || ic.agents.size() != n) {
      throw ValidationError("explicit initial conditions do not match the leader/agent count");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = ic.agents[i];
      const auto& m = scn.agents[i];
      if (static_cast<std::size_t>(a.z.size()) != m.nz() || static_cast<std::size_t>(a.x.size()) != m.nx() ||
          static_cast<std::size_t>(a.xi.size()) != m.nz() ||
          static_cast<std::size_t>(a.chain_ext.size()) != scn.leader.dim() - m.nx()) {
        throw ValidationError("explicit initial conditions of agent " + std::to_string(i + 1) +
                              " have wrong dimensions");
      }
      if (a.eta && static_cast<std::size_t>(a.eta->size()) != scn.leader.dim()) {
        throw ValidationError("explicit observer initial state of agent " + std::to_string(i + 1) +
                              " has wrong dimension");
      }
      if (a.theta && *a.theta < 0.0) throw ValidationError("initial adaptive gain must be non-negative");
    }
  } else if (!(scn.initial.box > 0.0)) {
    throw ValidationError("initial-condition box half-width must be positive");
  }
}

ResolvedInitialState resolve_initial_state(const Scenario& scn) {
  const auto& ic = scn.initial;
  const auto n0 = static_cast<Eigen::Index>(scn.leader.dim());
  ResolvedInitialState out;
  if (ic.mode == InitialConditions::Mode::explicit_values) {
    out.w0 = ic.w0;
    out.agents = ic.agents;
    for (auto& a : out.agents) {
      if (!a.eta) a.eta = Vector::Zero(n0);
      if (!a.theta) a.theta = 0.0;
    }
    return out;
  }

  std::mt19937_64 rng(ic.seed);
  std::uniform_real_distribution<double> box(-ic.box, ic.box);
  std::uniform_real_distribution<double> gain(0.0, ic.box);
  const auto draw = [&](Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = box(rng);
    return v;
  };

  out.w0 = draw(n0);
  for (const auto& m : scn.agents) {
    const auto nz = static_cast<Eigen::Index>(m.nz());
    const auto nx = static_cast<Eigen::Index>(m.nx());
    AgentInit a;
    a.z = draw(nz);
    a.x = draw(nx);
    a.chain_ext = draw(n0 - nx);
    a.xi = draw(nz);
    a.eta = draw(n0);
    a.theta = gain(rng);
    if (ic.mode == InitialConditions::Mode::perfect_start) {
      a.x = out.w0.head(nx);
      a.chain_ext = out.w0.tail(n0 - nx);
      a.xi = a.z;
      a.eta = out.w0;
    }
    out.agents.push_back(std::move(a));
  }
  return out;
}

SynthesisResult synthesize_for(const Scenario& scn) {
  const auto dec = build_laplacian(scn.graph);
  const ControlLaw law = scn.controller.law;
  return synthesize(scn.leader, dec, scn.controller.synthesis, needs_feedback_gain(law), needs_observer_gain(law));
}

namespace {

struct Slot {
  Eigen::Index z, x, chain, xi, eta, theta;  // offsets, -1 when absent
  Eigen::Index nz, nx, nchain;
};

// Closed-loop right-hand side over the flat state vector.
class ClosedLoop {
 public:
  ClosedLoop(const Scenario& scn, const SynthesisResult& gains) : scn_(scn), gains_(gains) {
    n0_ = static_cast<Eigen::Index>(scn.leader.dim());
    Eigen::Index offset = n0_;
    const bool eta = needs_observer_gain(scn.controller.law);
    const bool theta = has_theta(scn.controller.law);
    for (std::size_t i = 0; i < scn.agents.size(); ++i) {
      const auto& m = scn.agents[i];
      Slot s{};
      s.nz = static_cast<Eigen::Index>(m.nz());
      s.nx = static_cast<Eigen::Index>(m.nx());
      s.nchain = n0_ - s.nx;
      s.z = offset;
      offset += s.nz;
      s.x = offset;
      offset += s.nx;
      s.chain = offset;
      offset += s.nchain;
      s.xi = offset;
      offset += s.nz;
      s.eta = eta ? offset : -1;
      offset += eta ? n0_ : 0;
      s.theta = theta ? offset : -1;
      offset += theta ? 1 : 0;
      slots_.push_back(s);
      neighbors_.push_back(scn.graph.neighbors(i + 1));
    }
    size_ = offset;
  }

  Eigen::Index size() const { return size_; }
  Eigen::Index n0() const { return n0_; }
  const std::vector<Slot>& slots() const { return slots_; }

  Vector pack(const ResolvedInitialState& init) const {
    Vector state(size_);
    state.head(n0_) = init.w0;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const auto& s = slots_[i];
      const auto& a = init.agents[i];
      state.segment(s.z, s.nz) = a.z;
      state.segment(s.x, s.nx) = a.x;
      state.segment(s.chain, s.nchain) = a.chain_ext;
      state.segment(s.xi, s.nz) = a.xi;
      if (s.eta >= 0) state.segment(s.eta, n0_) = *a.eta;
      if (s.theta >= 0) state(s.theta) = *a.theta;
    }
    return state;
  }

  AgentState agent_state(const Vector& state, std::size_t i) const {
    const auto& s = slots_[i];
    return {state.segment(s.z, s.nz), state.segment(s.x, s.nx)};
  }

  CompensatorState compensator(const Vector& state, std::size_t i) const {
    const auto& s = slots_[i];
    CompensatorState c;
    c.chain_ext = state.segment(s.chain, s.nchain);
    c.xi = state.segment(s.xi, s.nz);
    if (s.eta >= 0) c.eta = Vector(state.segment(s.eta, n0_));
    if (s.theta >= 0) c.theta = state(s.theta);
    return c;
  }

  // Writes the derivative; fills v and per-agent u.
  void eval(double t, const Vector& state, Vector& deriv, double& v, std::vector<double>& u) const {
    deriv.resize(size_);
    const Vector w = state.head(n0_);
    const auto leader = leader_derivative(scn_.leader, w, scn_.input_policy, t);
    v = leader.v;
    deriv.head(n0_) = leader.wdot;

    // Synchronous snapshot of everything the agents broadcast.
    const std::size_t n = slots_.size();
    std::vector<NeighborPacket> packets;
    packets.reserve(n + 1);
    packets.push_back({0, w, w});
    std::vector<AgentState> states(n);
    std::vector<CompensatorState> comps(n);
    for (std::size_t i = 0; i < n; ++i) {
      states[i] = agent_state(state, i);
      comps[i] = compensator(state, i);
      packets.push_back({i + 1, stacked_state(states[i], comps[i]), comps[i].eta});
    }

    u.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = slots_[i];
      const auto out = controller_step(scn_.controller, scn_.agents[i], scn_.leader, comps[i], states[i],
                                       neighbors_[i], packets, v, gains_);
      u[i] = out.u;
      const auto plant = agent_derivative(scn_.agents[i], states[i], out.u);
      deriv.segment(s.z, s.nz) = plant.z;
      deriv.segment(s.x, s.nx) = plant.x;
      deriv.segment(s.chain, s.nchain) = out.derivative.chain_ext;
      deriv.segment(s.xi, s.nz) = out.derivative.xi;
      if (s.eta >= 0) deriv.segment(s.eta, n0_) = *out.derivative.eta;
      if (s.theta >= 0) deriv(s.theta) = *out.derivative.theta;
    }
  }

 private:
  const Scenario& scn_;
  const SynthesisResult& gains_;
  Eigen::Index n0_ = 0;
  Eigen::Index size_ = 0;
  std::vector<Slot> slots_;
  std::vector<std::vector<Digraph::Neighbor>> neighbors_;
};

void allocate(SimTrace& trace, const ClosedLoop& loop, Eigen::Index rows) {
  trace.times.resize(rows);
  trace.w.resize(rows, loop.n0());
  trace.v.resize(rows);
  trace.y_r.resize(rows);
  for (const auto& s : loop.slots()) {
    AgentSeries a;
    a.z.resize(rows, s.nz);
    a.x.resize(rows, s.nx);
    a.chain_ext.resize(rows, s.nchain);
    a.xi.resize(rows, s.nz);
    a.eta.resize(rows, s.eta >= 0 ? loop.n0() : 0);
    if (s.eta >= 0) a.eta_error.resize(rows);
    if (s.theta >= 0) a.theta.resize(rows);
    a.u.resize(rows);
    a.y.resize(rows);
    a.e.resize(rows);
    trace.agents.push_back(std::move(a));
  }
}

void record(SimTrace& trace, const ClosedLoop& loop, Eigen::Index k, double t, const Vector& state, double v,
            const std::vector<double>& u) {
  const Eigen::Index n0 = loop.n0();
  trace.times(k) = t;
  trace.w.row(k) = state.head(n0).transpose();
  trace.v(k) = v;
  trace.y_r(k) = state(0);
  for (std::size_t i = 0; i < loop.slots().size(); ++i) {
    const auto& s = loop.slots()[i];
    auto& a = trace.agents[i];
    a.z.row(k) = state.segment(s.z, s.nz).transpose();
    a.x.row(k) = state.segment(s.x, s.nx).transpose();
    a.chain_ext.row(k) = state.segment(s.chain, s.nchain).transpose();
    a.xi.row(k) = state.segment(s.xi, s.nz).transpose();
    if (s.eta >= 0) {
      a.eta.row(k) = state.segment(s.eta, n0).transpose();
      a.eta_error(k) = (state.segment(s.eta, n0) - state.head(n0)).norm();
    }
    if (s.theta >= 0) a.theta(k) = state(s.theta);
    a.u(k) = u[i];
    a.y(k) = state(s.x);
    a.e(k) = a.y(k) - trace.y_r(k);
  }
}

}  // namespace

SimTrace run(const Scenario& scn) {
  validate_scenario(scn);
  SimTrace trace;
  trace.scenario_name = scn.name;
  trace.law = scn.controller.law;
  if (scn.initial.mode != InitialConditions::Mode::explicit_values) trace.seed = scn.initial.seed;
  trace.synthesis = synthesize_for(scn);

  const ClosedLoop loop(scn, trace.synthesis);
  Vector state = loop.pack(resolve_initial_state(scn));
  const auto steps = static_cast<Eigen::Index>(std::llround(scn.t_final / scn.dt));
  allocate(trace, loop, steps + 1);

  const bool euler = scn.controller.law == ControlLaw::adaptive;
  const double h = scn.dt;
  Vector k1, k2, k3, k4;
  double v = 0.0, v_stage = 0.0;
  std::vector<double> u, u_stage;

  for (Eigen::Index k = 0;; ++k) {
    const double t = static_cast<double>(k) * h;
    loop.eval(t, state, k1, v, u);
    record(trace, loop, k, t, state, v, u);
    if (k == steps) break;

    if (euler) {
      state += h * k1;
    } else {
      loop.eval(t + 0.5 * h, state + 0.5 * h * k1, k2, v_stage, u_stage);
      loop.eval(t + 0.5 * h, state + 0.5 * h * k2, k3, v_stage, u_stage);
      loop.eval(t + h, state + h * k3, k4, v_stage, u_stage);
      state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    const double norm = state.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(norm) || norm > kBlowupThreshold) {
      throw NumericBlowup(static_cast<double>(k + 1) * h, norm);
    }
  }
  return trace;
}

std::vector<ObserverFit> observer_convergence(const SimTrace& trace) {
  if (trace.agents.empty() || trace.agents.front().eta_error.size() == 0) {
    throw NotApplicable("trace carries no observer states");
  }
  std::vector<ObserverFit> fits;
  for (const auto& a : trace.agents) {
    ObserverFit fit;
    const Eigen::Index n = a.eta_error.size();
    Eigen::Index m = 0;
    while (m < n && a.eta_error(m) > kObserverFloor) ++m;
    fit.samples = static_cast<std::size_t>(m);
    if (m == 0) {
      fit.converged_at_start = true;
      fits.push_back(fit);
      continue;
    }
    if (m < 2) {
      fits.push_back(fit);
      continue;
    }
    const Vector t = trace.times.head(m);
    const Vector logs = a.eta_error.head(m).array().log();
    const double t_mean = t.mean();
    const double l_mean = logs.mean();
    const double stt = (t.array() - t_mean).square().sum();
    const double slope = ((t.array() - t_mean) * (logs.array() - l_mean)).sum() / stt;
    const double intercept = l_mean - slope * t_mean;
    const double ss_res = (logs.array() - (intercept + slope * t.array())).square().sum();
    const double ss_tot = (logs.array() - l_mean).square().sum();
    fit.lambda0 = -slope;
    fit.c0 = std::exp(intercept);
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fits.push_back(fit);
  }
  return fits;
}

double TrackingReport::max_tail_error() const {
  double m = 0.0;
  for (const auto& a : agents) m = std::max(m, a.tail_max_error);
  return m;
}

TrackingReport tracking_report(const SimTrace& trace, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) throw InvalidParameter("tail_fraction must lie in (0, 1)");
  if (trace.size() == 0) throw InvalidParameter("empty trace");
  TrackingReport report;
  report.tail_fraction = tail_fraction;
  const double t0 = trace.times(0);
  const double t1 = trace.times(trace.times.size() - 1);
  report.tail_start = t1 - tail_fraction * (t1 - t0);
  Eigen::Index first = 0;
  // Small slack so that grid points on the boundary are included.
  while (first < trace.times.size() - 1 && trace.times(first) < report.tail_start - 1e-9) ++first;
  const Eigen::Index len = trace.times.size() - first;
  for (const auto& a : trace.agents) {
    AgentTracking at;
    at.tail_max_error = a.e.segment(first, len).cwiseAbs().maxCoeff();
    if (a.theta.size() > 0) {
      at.final_theta = a.theta(a.theta.size() - 1);
      at.theta_tail_delta = *at.final_theta - a.theta(first);
    }
    report.agents.push_back(at);
  }
  return report;
}

}  // namespace coopmatch
