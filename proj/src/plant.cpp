#include "coopmatch/plant.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "coopmatch/errors.hpp"

namespace coopmatch {

AgentModel::AgentModel(std::string name, std::size_t nx, Matrix a0, std::vector<Polynomial> f, Polynomial g,
                       std::map<std::string, double> params)
    : name_(std::move(name)), params_(std::move(params)), nx_(nx), a0_(std::move(a0)), f_(std::move(f)),
      g_(std::move(g)) {
  if (nx_ < 1) throw InvalidParameter("agent '" + name_ + "': chain length nx must be >= 1");
  if (a0_.rows() != a0_.cols()) throw InvalidParameter("agent '" + name_ + "': A0 must be square");
  if (f_.size() != nz()) {
    throw InvalidParameter("agent '" + name_ + "': need one f component per z coordinate");
  }
  if (nz() > 0 && !check_hurwitz(a0_).hurwitz) throw InvalidParameter("agent '" + name_ + "': A0 is not Hurwitz");
  const auto check_vars = [&](const Polynomial& p, bool allow_z) {
    if (p.max_index('x') > static_cast<int>(nx_) || p.max_index('z') > (allow_z ? static_cast<int>(nz()) : 0)) {
      throw InvalidParameter("agent '" + name_ + "': nonlinearity '" + p.to_string() +
                             "' references a coordinate out of range");
    }
  };
  for (const auto& fi : f_) check_vars(fi, false);
  check_vars(g_, true);
}

Vector AgentModel::f(const Vector& x) const {
  Vector out(static_cast<Eigen::Index>(nz()));
  const Vector none;
  for (std::size_t k = 0; k < f_.size(); ++k) out(static_cast<Eigen::Index>(k)) = f_[k](none, x);
  return out;
}

double AgentModel::g(const Vector& z, const Vector& x) const { return g_(z, x); }

AgentState agent_derivative(const AgentModel& m, const AgentState& s, double u) {
  AgentState out;
  out.z = m.A0() * s.z + m.f(s.x);
  const auto nx = static_cast<Eigen::Index>(m.nx());
  out.x.resize(nx);
  for (Eigen::Index j = 0; j + 1 < nx; ++j) out.x(j) = s.x(j + 1);
  out.x(nx - 1) = u + m.g(s.z, s.x);
  return out;
}

bool check_relative_degree(const AgentModel& m, const LeaderModel& leader) { return m.nx() <= leader.dim(); }

LeaderInputPolicy LeaderInputPolicy::state_feedback(RowVector f) {
  LeaderInputPolicy p;
  p.kind = Kind::state_feedback;
  p.feedback = std::move(f);
  return p;
}

LeaderInputPolicy LeaderInputPolicy::sine(double amplitude, double omega, double phase) {
  LeaderInputPolicy p;
  p.kind = Kind::sine;
  p.amplitude = amplitude;
  p.omega = omega;
  p.phase = phase;
  return p;
}

LeaderInputPolicy LeaderInputPolicy::table(std::vector<double> t, std::vector<double> v) {
  if (t.empty() || t.size() != v.size()) throw InvalidParameter("input table needs matching non-empty t and v");
  if (!std::is_sorted(t.begin(), t.end())) throw InvalidParameter("input table times must be increasing");
  LeaderInputPolicy p;
  p.kind = Kind::table;
  p.table_t = std::move(t);
  p.table_v = std::move(v);
  return p;
}

double LeaderInputPolicy::evaluate(const Vector& w, double t) const {
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::state_feedback:
      if (feedback.size() != w.size()) throw InvalidParameter("state feedback gain has the wrong dimension");
      return feedback.dot(w);
    case Kind::sine:
      return amplitude * std::sin(omega * t + phase);
    case Kind::table: {
      if (t <= table_t.front()) return table_v.front();
      if (t >= table_t.back()) return table_v.back();
      const auto hi = static_cast<std::size_t>(std::upper_bound(table_t.begin(), table_t.end(), t) - table_t.begin());
      const std::size_t lo = hi - 1;
      const double span = table_t[hi] - table_t[lo];
      const double alpha = span > 0.0 ? (t - table_t[lo]) / span : 1.0;
      return (1.0 - alpha) * table_v[lo] + alpha * table_v[hi];
    }
  }
  return 0.0;
}

std::string to_string(LeaderInputPolicy::Kind kind) {
  switch (kind) {
    case LeaderInputPolicy::Kind::zero: return "zero";
    case LeaderInputPolicy::Kind::state_feedback: return "state_feedback";
    case LeaderInputPolicy::Kind::sine: return "sine";
    case LeaderInputPolicy::Kind::table: return "table";
  }
  return "zero";
}

LeaderInputPolicy::Kind policy_kind_from_string(const std::string& s) {
  if (s == "zero") return LeaderInputPolicy::Kind::zero;
  if (s == "state_feedback") return LeaderInputPolicy::Kind::state_feedback;
  if (s == "sine") return LeaderInputPolicy::Kind::sine;
  if (s == "table") return LeaderInputPolicy::Kind::table;
  throw InvalidParameter("unknown input policy '" + s + "'");
}

LeaderDerivative leader_derivative(const LeaderModel& leader, const Vector& w, const LeaderInputPolicy& policy,
                                   double t) {
  if (static_cast<std::size_t>(w.size()) != leader.dim()) throw InvalidParameter("leader state has wrong dimension");
  LeaderDerivative out;
  out.v = policy.evaluate(w, t);
  if (policy.bound_check && std::abs(out.v) > leader.input_bound()) {
    throw BoundViolation("|v(" + std::to_string(t) + ")| = " + std::to_string(std::abs(out.v)) +
                         " exceeds the declared bound " + std::to_string(leader.input_bound()));
  }
  out.wdot = leader.S() * w + leader.d() * out.v;
  out.y_r = w(0);
  return out;
}

AgentModel damping_oscillator() {
  return AgentModel("damping_oscillator", 2, Matrix(0, 0), {}, Polynomial::parse("-x1 - x2"));
}

AgentModel fitzhugh_nagumo(double a, double b, double c) {
  if (!(c > 0.0)) throw InvalidParameter("fitzhugh_nagumo: c must be positive");
  // x(a - x)(x - 1) - z = -x^3 + (1 + a) x^2 - a x - z
  Polynomial g({{-1.0, {{'x', 1, 3}}}, {1.0 + a, {{'x', 1, 2}}}, {-a, {{'x', 1, 1}}}, {-1.0, {{'z', 1, 1}}}});
  Matrix a0(1, 1);
  a0 << -c;
  return AgentModel("fitzhugh_nagumo", 1, a0, {Polynomial::linear('x', 1, b)}, std::move(g),
                    {{"a", a}, {"b", b}, {"c", c}});
}

AgentModel van_der_pol(double a) {
  // -x1 + a (1 - x1^2) x2
  Polynomial g({{-1.0, {{'x', 1, 1}}}, {a, {{'x', 2, 1}}}, {-a, {{'x', 1, 2}, {'x', 2, 1}}}});
  return AgentModel("van_der_pol", 2, Matrix(0, 0), {}, std::move(g), {{"a", a}});
}

std::vector<AgentModel> builtin_agents(const BuiltinParameters& p) {
  return {damping_oscillator(), fitzhugh_nagumo(p.a2, p.b2, p.c2), van_der_pol(p.a3)};
}

namespace {

using Factory = std::function<AgentModel(const std::map<std::string, double>&)>;

double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

const std::map<std::string, std::pair<std::vector<std::string>, Factory>>& registry() {
  static const std::map<std::string, std::pair<std::vector<std::string>, Factory>> r{
      {"damping_oscillator", {{}, [](const auto&) { return damping_oscillator(); }}},
      {"fitzhugh_nagumo",
       {{"a", "b", "c"},
        [](const auto& p) { return fitzhugh_nagumo(param(p, "a", 1.0), param(p, "b", 1.0), param(p, "c", 1.0)); }}},
      {"van_der_pol", {{"a"}, [](const auto& p) { return van_der_pol(param(p, "a", 1.0)); }}},
  };
  return r;
}

}  // namespace

AgentModel make_builtin(const std::string& name, const std::map<std::string, double>& params) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw InvalidParameter("unknown builtin agent '" + name + "'");
  const auto& allowed = it->second.first;
  for (const auto& [key, value] : params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InvalidParameter("builtin agent '" + name + "' has no parameter '" + key + "'");
    }
  }
  return it->second.second(params);
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (const auto& [name, entry] : registry()) out.push_back(name);
  return out;
}

double estimate_lipschitz_z(const AgentModel& m, double half_width, int samples, std::uint64_t seed) {
  if (m.nz() == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-half_width, half_width);
  const auto draw = [&](std::size_t n) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = box(rng);
    return v;
  };
  double m_hat = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vector z1 = draw(m.nz());
    const Vector z2 = draw(m.nz());
    const Vector x = draw(m.nx());
    const double dz = (z2 - z1).norm();
    if (dz == 0.0) continue;
    m_hat = std::max(m_hat, std::abs(m.g(z2, x) - m.g(z1, x)) / dz);
  }
  return m_hat;
}

}  // namespace coopmatch
