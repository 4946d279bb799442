#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coopmatch/linalg.hpp"
#include "coopmatch/polynomial.hpp"
#include "coopmatch/synthesis.hpp"

namespace coopmatch {

/// One follower in normal form:
///   ż = A0 z + f(x),  ẋ_j = x_{j+1} (j < nx),  ẋ_nx = u + g(z, x),  y = x_1.
/// The high-frequency gain is fixed to 1.
class AgentModel {
 public:
  AgentModel(std::string name, std::size_t nx, Matrix a0, std::vector<Polynomial> f, Polynomial g,
             std::map<std::string, double> params = {});

  const std::string& name() const { return name_; }
  /// Parameters of a builtin agent; empty for explicit models.
  const std::map<std::string, double>& params() const { return params_; }
  std::size_t nz() const { return static_cast<std::size_t>(a0_.rows()); }
  std::size_t nx() const { return nx_; }
  const Matrix& A0() const { return a0_; }
  const std::vector<Polynomial>& f_terms() const { return f_; }
  const Polynomial& g_term() const { return g_; }

  Vector f(const Vector& x) const;
  double g(const Vector& z, const Vector& x) const;

  friend bool operator==(const AgentModel& a, const AgentModel& b) {
    return a.name_ == b.name_ && a.params_ == b.params_ && a.nx_ == b.nx_ && same(a.a0_, b.a0_) && a.f_ == b.f_ &&
           a.g_ == b.g_;
  }

 private:
  std::string name_;
  std::map<std::string, double> params_;
  std::size_t nx_;
  Matrix a0_;
  std::vector<Polynomial> f_;
  Polynomial g_;
};

struct AgentState {
  Vector z;
  Vector x;
};

/// Returns (ż, ẋ).
AgentState agent_derivative(const AgentModel& m, const AgentState& s, double u);

inline double output(const AgentState& s) { return s.x(0); }

/// Assumption on relative degree: nx no larger than the leader dimension.
bool check_relative_degree(const AgentModel& m, const LeaderModel& leader);

struct LeaderInputPolicy {
  enum class Kind { zero, state_feedback, sine, table };

  Kind kind = Kind::zero;
  RowVector feedback;            // state_feedback: v = F w
  double amplitude = 0.0;        // sine: v = amplitude * sin(omega t + phase)
  double omega = 0.0;
  double phase = 0.0;
  std::vector<double> table_t;   // table: piecewise linear, held constant outside
  std::vector<double> table_v;
  bool bound_check = false;
  // Followers are not allowed to read v.
  bool private_input = false;

  static LeaderInputPolicy zero() { return {}; }
  static LeaderInputPolicy state_feedback(RowVector f);
  static LeaderInputPolicy sine(double amplitude, double omega, double phase = 0.0);
  static LeaderInputPolicy table(std::vector<double> t, std::vector<double> v);

  double evaluate(const Vector& w, double t) const;

  friend bool operator==(const LeaderInputPolicy& a, const LeaderInputPolicy& b) {
    return a.kind == b.kind && same(a.feedback, b.feedback) && a.amplitude == b.amplitude && a.omega == b.omega &&
           a.phase == b.phase && a.table_t == b.table_t && a.table_v == b.table_v &&
           a.bound_check == b.bound_check && a.private_input == b.private_input;
  }
};

std::string to_string(LeaderInputPolicy::Kind kind);
LeaderInputPolicy::Kind policy_kind_from_string(const std::string& s);

struct LeaderDerivative {
  Vector wdot;
  double v = 0.0;
  double y_r = 0.0;
};

/// Throws BoundViolation when the policy checks bounds and |v| > l.
LeaderDerivative leader_derivative(const LeaderModel& leader, const Vector& w, const LeaderInputPolicy& policy,
                                   double t);

// Builtin example agents.
AgentModel damping_oscillator();
AgentModel fitzhugh_nagumo(double a = 1.0, double b = 1.0, double c = 1.0);
AgentModel van_der_pol(double a = 1.0);

struct BuiltinParameters {
  double a2 = 1.0;
  double b2 = 1.0;
  double c2 = 1.0;
  double a3 = 1.0;
};

/// Damping oscillator, FitzHugh-Nagumo and Van der Pol agents, in that order.
std::vector<AgentModel> builtin_agents(const BuiltinParameters& p = {});

/// Constructs a builtin agent by registry name. Unknown names or parameters
/// throw InvalidParameter.
AgentModel make_builtin(const std::string& name, const std::map<std::string, double>& params = {});
std::vector<std::string> builtin_names();

/// Empirical Lipschitz constant of g in z over the box |z_k|, |x_k| <= half_width.
double estimate_lipschitz_z(const AgentModel& m, double half_width, int samples = 2000,
                            std::uint64_t seed = 7);

}  // namespace coopmatch
