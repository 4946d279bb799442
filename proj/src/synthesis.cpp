#include "coopmatch/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "coopmatch/errors.hpp"

namespace coopmatch {

LeaderModel::LeaderModel(std::vector<double> bottom_row, double d_last, double input_bound)
    : bottom_row_(std::move(bottom_row)), d_last_(d_last), input_bound_(input_bound) {
  if (bottom_row_.empty()) throw InvalidParameter("leader dimension must be positive");
  if (d_last_ == 0.0 || !std::isfinite(d_last_)) throw InvalidParameter("leader d_n must be finite and nonzero");
  if (input_bound_ < 0.0) throw InvalidParameter("leader input bound must be non-negative");
  const auto n = static_cast<Eigen::Index>(bottom_row_.size());
  s_ = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) s_(i, i + 1) = 1.0;
  for (Eigen::Index j = 0; j < n; ++j) s_(n - 1, j) = bottom_row_[static_cast<std::size_t>(j)];
  d_ = Vector::Zero(n);
  d_(n - 1) = d_last_;
  c_ = Vector::Zero(n);
  c_(0) = 1.0;
}

HurwitzReport check_hurwitz(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidParameter("check_hurwitz needs a square matrix");
  HurwitzReport report;
  report.eigenvalues = eigenvalues(m);
  double max_re = -std::numeric_limits<double>::infinity();
  for (const auto& ev : report.eigenvalues) max_re = std::max(max_re, ev.real());
  report.margin = -max_re;
  report.hurwitz = max_re < -kHurwitzTolerance;
  return report;
}

double care_residual(const Matrix& a, const Vector& b, const Matrix& q, const Matrix& p) {
  const Vector pb = p * b;
  return (a.transpose() * p + p * a - 2.0 * pb * pb.transpose() + q).norm();
}

namespace {

// sign(Z) by the scaled Newton iteration.
std::optional<Matrix> matrix_sign(Matrix z) {
  const double n = static_cast<double>(z.rows());
  for (int it = 0; it < 200; ++it) {
    Eigen::PartialPivLU<Matrix> lu(z);
    const double det = std::abs(lu.determinant());
    if (!(det > 0.0) || !std::isfinite(det)) return std::nullopt;
    const double scale = std::pow(det, 1.0 / n);
    const Matrix next = 0.5 * (z / scale + scale * lu.inverse());
    const double change = (next - z).lpNorm<1>();
    z = next;
    if (change <= 1e-13 * z.lpNorm<1>()) return z;
  }
  return std::nullopt;
}

}  // namespace

Matrix solve_care(const Matrix& a, const Vector& b, const Matrix& q) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n || q.rows() != n || q.cols() != n) {
    throw InvalidParameter("Riccati data dimension mismatch");
  }
  const Matrix g = 2.0 * b * b.transpose();
  Matrix ham(2 * n, 2 * n);
  ham << a, -g, -q, -a.transpose();

  const auto sign = matrix_sign(ham);
  if (!sign) throw SynthesisFailure("Hamiltonian sign iteration did not converge");
  const Matrix& w = *sign;
  Matrix lhs(2 * n, n);
  lhs << w.topRightCorner(n, n), w.bottomRightCorner(n, n) + Matrix::Identity(n, n);
  Matrix rhs(2 * n, n);
  rhs << w.topLeftCorner(n, n) + Matrix::Identity(n, n), w.bottomLeftCorner(n, n);
  Matrix p = lhs.colPivHouseholderQr().solve(-rhs);
  p = 0.5 * (p + p.transpose());

  // Newton-Kleinman polish.
  for (int it = 0; it < 20; ++it) {
    if (care_residual(a, b, q, p) <= 1e-14 * (1.0 + p.norm())) break;
    const Matrix closed = a - g * p;
    p = solve_lyapunov(closed, q + p * g * p);
  }

  if (!p.allFinite()) throw SynthesisFailure("Riccati solution is not finite");
  const double residual = care_residual(a, b, q, p);
  if (residual > 1e-9 * (1.0 + p.norm())) {
    throw SynthesisFailure("Riccati residual " + std::to_string(residual) + " above tolerance");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(p, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) throw SynthesisFailure("Riccati solution is not positive definite");
  return p;
}

Matrix solve_p(const LeaderModel& leader, const Matrix& q_weight) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(q_weight, Eigen::EigenvaluesOnly);
  if (q_weight.rows() != static_cast<Eigen::Index>(leader.dim()) ||
      (q_weight - q_weight.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance ||
      es.eigenvalues().minCoeff() <= 0.0) {
    throw InvalidParameter("Q must be a symmetric positive definite matrix of the leader's dimension");
  }
  return solve_care(leader.S(), leader.d(), q_weight);
}

FeedbackGain gain_k(const Matrix& p, const LeaderModel& leader, double lambda_min,
                    std::span<const double> spectrum, double safety_factor) {
  if (!(lambda_min > 0.0)) throw InvalidParameter("lambda_min must be positive");
  if (!(safety_factor >= 1.0)) throw InvalidParameter("safety_factor must be >= 1");
  FeedbackGain out;
  out.gamma = std::max(1.0 / lambda_min, 1.0) * safety_factor;
  out.K = -out.gamma * (leader.d().transpose() * p);

  std::vector<double> modes(spectrum.begin(), spectrum.end());
  if (modes.empty()) modes.push_back(lambda_min);
  for (double lambda : modes) {
    auto report = check_hurwitz(leader.S() + lambda * leader.d() * out.K);
    if (!report.hurwitz) {
      throw SynthesisFailure("S + λ d K not Hurwitz for λ = " + std::to_string(lambda));
    }
    out.per_mode.push_back(std::move(report));
  }
  return out;
}

Matrix observer_closed_loop(const LeaderModel& leader, const Matrix& h, const Vector& l0) {
  const Matrix eye = Matrix::Identity(h.rows(), h.rows());
  return kron(eye, leader.S()) + kron(h, l0 * leader.c().transpose());
}

Matrix coupled_closed_loop(const LeaderModel& leader, const Matrix& h, const RowVector& k) {
  const Matrix eye = Matrix::Identity(h.rows(), h.rows());
  return kron(eye, leader.S()) + kron(h, leader.d() * k);
}

ObserverGain observer_gain(const LeaderModel& leader, const Matrix& h, const Matrix& q_weight,
                           double mu_max_factor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  if (h.rows() == 0 || (h - h.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance ||
      es.eigenvalues().minCoeff() <= kPositiveDefiniteTolerance) {
    throw NotConnected("observer synthesis needs a symmetric positive definite H");
  }
  const double lambda_n = es.eigenvalues().minCoeff();

  ObserverGain out;
  out.dual_p = solve_care(leader.S().transpose(), leader.c(), q_weight);
  const double mu_max = mu_max_factor / lambda_n;
  for (double mu = 1.0 / lambda_n; mu <= mu_max * (1.0 + 1e-12); mu *= 2.0) {
    const Vector l0 = -mu * out.dual_p * leader.c();
    auto report = check_hurwitz(observer_closed_loop(leader, h, l0));
    if (report.hurwitz) {
      out.l0 = l0;
      out.mu = mu;
      out.closed_loop = std::move(report);
      return out;
    }
  }
  throw SynthesisFailure("no observer gain certified up to mu = " + std::to_string(mu_max));
}

Matrix companion(std::span<const double> k) {
  const auto n = static_cast<Eigen::Index>(k.size());
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) m(i, i + 1) = 1.0;
  for (Eigen::Index j = 0; j < n; ++j) m(n - 1, j) = k[static_cast<std::size_t>(j)];
  return m;
}

std::vector<double> hurwitz_coeffs(std::size_t n, std::span<const double> poles) {
  if (n == 0 || poles.size() != n) {
    throw InvalidPoles("expected " + std::to_string(n) + " poles, got " + std::to_string(poles.size()));
  }
  for (double p : poles) {
    if (!(p < 0.0)) throw InvalidPoles("pole " + std::to_string(p) + " is not in the open left half-plane");
  }
  // Monic expansion: a[j] is the coefficient of s^j.
  std::vector<double> a{1.0};
  for (double p : poles) {
    std::vector<double> next(a.size() + 1, 0.0);
    for (std::size_t j = 0; j < a.size(); ++j) {
      next[j + 1] += a[j];
      next[j] -= p * a[j];
    }
    a = std::move(next);
  }
  std::vector<double> k(n);
  for (std::size_t j = 0; j < n; ++j) k[j] = -a[j];
  if (!check_hurwitz(companion(k)).hurwitz) throw InvalidPoles("expanded polynomial is not Hurwitz");
  return k;
}

SynthesisResult synthesize(const LeaderModel& leader, const LaplacianDecomposition& dec,
                           const SynthesisOptions& options, bool feedback, bool observer) {
  const auto n = static_cast<Eigen::Index>(leader.dim());
  const Matrix q = options.q_weight.size() ? options.q_weight : Matrix::Identity(n, n);
  const Matrix q_obs = options.observer_q_weight.size() ? options.observer_q_weight : Matrix::Identity(n, n);

  SynthesisResult out;
  out.P = solve_p(leader, q);
  auto& cert = out.certificates;
  cert.riccati_residual = care_residual(leader.S(), leader.d(), q, out.P);
  {
    const Vector pd = out.P * leader.d();
    const Matrix lhs = leader.S().transpose() * out.P + out.P * leader.S() - 2.0 * pd * pd.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (lhs + lhs.transpose()), Eigen::EigenvaluesOnly);
    cert.riccati_margin = -es.eigenvalues().maxCoeff();
  }
  cert.h_eigenvalues = dec.eigenvalues;

  if (feedback || observer) cert.lambda_min = min_eigenvalue(dec);

  if (feedback) {
    auto fb = gain_k(out.P, leader, *cert.lambda_min, dec.eigenvalues, options.safety_factor);
    out.K = fb.K;
    out.gamma = fb.gamma;
    cert.feedback_modes = std::move(fb.per_mode);
    auto coupled = check_hurwitz(coupled_closed_loop(leader, dec.follower_submatrix, out.K));
    if (!coupled.hurwitz) throw SynthesisFailure("I ⊗ S + H ⊗ dK is not Hurwitz");
    cert.coupled_closed_loop = std::move(coupled);
  }

  if (observer) {
    auto obs = observer_gain(leader, dec.follower_submatrix, q_obs, options.mu_max_factor);
    out.l0 = obs.l0;
    out.mu = obs.mu;
    cert.observer_closed_loop = std::move(obs.closed_loop);

    std::vector<double> poles = options.poles;
    if (poles.empty()) poles.assign(leader.dim(), -1.0);
    out.k0 = hurwitz_coeffs(leader.dim(), poles);
    cert.chain_polynomial = check_hurwitz(companion(out.k0));
    const Vector k0 = Eigen::Map<const Vector>(out.k0.data(), n);
    auto chain = check_hurwitz(leader.S() + leader.d() * k0.transpose());
    if (!chain.hurwitz) throw SynthesisFailure("S + d k0ᵀ is not Hurwitz for the requested poles");
    cert.chain_closed_loop = std::move(chain);
  }
  return out;
}

}  // namespace coopmatch
