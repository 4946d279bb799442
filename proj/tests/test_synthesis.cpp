#include <chrono>
#include <cmath>
#include <random>

#include <doctest.h>

#include "coopmatch/errors.hpp"
#include "coopmatch/scenario_io.hpp"
#include "coopmatch/synthesis.hpp"

using namespace coopmatch;

namespace {

LeaderModel double_integrator() { return LeaderModel({0.0, 0.0}, 1.0); }

// Component-wise solution of the 2x2 Riccati equation for the double
// integrator with Q = I:  -2 p12² + 1 = 0,  p11 - 2 p12 p22 = 0,
// 2 p12 - 2 p22² + 1 = 0.
Matrix double_integrator_p() {
  const double p12 = 1.0 / std::sqrt(2.0);
  const double p22 = std::sqrt((1.0 + std::sqrt(2.0)) / 2.0);
  const double p11 = std::sqrt(2.0) * p22;
  Matrix p(2, 2);
  p << p11, p12, p12, p22;
  return p;
}

// Expand Π (s - p_j) by repeated multiplication; coefficients high to low.
std::vector<double> expand(const std::vector<double>& poles) {
  std::vector<double> c{1.0};
  for (double p : poles) {
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= p * c[i];
    }
    c = next;
  }
  return c;
}

}  // namespace

TEST_CASE("Riccati solution for the double integrator") {
  const Matrix p = solve_p(double_integrator(), Matrix::Identity(2, 2));
  const Matrix expected = double_integrator_p();
  CHECK((p - expected).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(care_residual(double_integrator().S(), double_integrator().d(), Matrix::Identity(2, 2), p) <=
        1e-9 * (1.0 + p.norm()));
}

TEST_CASE("scalar Riccati equation") {
  const LeaderModel leader({-1.0}, 1.0);
  const Matrix p = solve_p(leader, Matrix::Identity(1, 1));
  // -2p - 2p² + 1 = 0
  CHECK(p(0, 0) == doctest::Approx((-1.0 + std::sqrt(3.0)) / 2.0).epsilon(1e-12));

  const auto fb = gain_k(p, leader, 1.0);
  CHECK(fb.gamma == 1.0);
  CHECK(fb.K(0) == doctest::Approx(-p(0, 0)));
  CHECK(fb.per_mode.front().margin == doctest::Approx(1.0 + p(0, 0)));
}

TEST_CASE("Riccati margin is at least min-eig(Q)/2 and scales with Q") {
  const LeaderModel leader = double_integrator();
  for (double alpha : {0.1, 1.0, 10.0}) {
    const Matrix q = alpha * Matrix::Identity(2, 2);
    const Matrix p = solve_p(leader, q);
    CHECK(care_residual(leader.S(), leader.d(), q, p) <= 1e-9 * (1.0 + p.norm()));
    const Vector pd = p * leader.d();
    const Matrix lhs = leader.S().transpose() * p + p * leader.S() - 2.0 * pd * pd.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(lhs);
    CHECK(es.eigenvalues().maxCoeff() <= -alpha / 2.0 + 1e-9);
  }
}

TEST_CASE("property: random companion leaders") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  std::uniform_real_distribution<double> dn(0.5, 2.0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + trial % 5;
    std::vector<double> row(n);
    for (auto& r : row) r = coeff(rng);
    const LeaderModel leader(row, trial % 2 ? dn(rng) : -dn(rng));
    const Matrix q = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const Matrix p = solve_p(leader, q);
    CHECK(care_residual(leader.S(), leader.d(), q, p) <= 1e-9 * (1.0 + p.norm()));
    CHECK(check_hurwitz(leader.S() - 2.0 * leader.d() * leader.d().transpose() * p).hurwitz);
  }
}

TEST_CASE("non-positive definite Q is rejected") {
  CHECK_THROWS_AS(solve_p(double_integrator(), -Matrix::Identity(2, 2)), InvalidParameter);
  CHECK_THROWS_AS(solve_p(double_integrator(), Matrix::Identity(3, 3)), InvalidParameter);
}

TEST_CASE("feedback gain for the example graph") {
  const auto dec = build_laplacian(paper_graph());
  const double lambda_n = min_eigenvalue(dec);
  const Matrix p = solve_p(double_integrator(), Matrix::Identity(2, 2));
  const auto fb = gain_k(p, double_integrator(), lambda_n, dec.eigenvalues);
  const double gamma = (3.0 + std::sqrt(5.0)) / 2.0;  // 1 / λ_N
  CHECK(fb.gamma == doctest::Approx(gamma).epsilon(1e-12));
  CHECK(fb.K(0) == doctest::Approx(-gamma * double_integrator_p()(0, 1)).epsilon(1e-9));
  CHECK(fb.K(1) == doctest::Approx(-gamma * double_integrator_p()(1, 1)).epsilon(1e-9));
  CHECK(fb.K(0) == doctest::Approx(-1.8513).epsilon(1e-4));
  CHECK(fb.K(1) == doctest::Approx(-2.8763).epsilon(1e-4));

  // 2x2 Hurwitz test by trace/determinant for every mode.
  REQUIRE(fb.per_mode.size() == 3);
  for (double lambda : dec.eigenvalues) {
    const Matrix j = double_integrator().S() + lambda * double_integrator().d() * fb.K;
    CHECK(j.trace() < 0.0);
    CHECK(j.determinant() > 0.0);
  }
  CHECK(check_hurwitz(coupled_closed_loop(double_integrator(), dec.follower_submatrix, fb.K)).hurwitz);

  CHECK(gain_k(p, double_integrator(), 1.0).gamma == 1.0);
  CHECK(gain_k(p, double_integrator(), 4.0).gamma == 1.0);
  CHECK(gain_k(p, double_integrator(), 1.0, {}, 2.5).gamma == 2.5);
  CHECK_THROWS_AS(gain_k(p, double_integrator(), 0.0), InvalidParameter);
  CHECK_THROWS_AS(gain_k(p, double_integrator(), 1.0, {}, 0.5), InvalidParameter);
}

TEST_CASE("observer gain certifies the assembled closed loop") {
  const auto dec = build_laplacian(paper_graph());
  const auto obs = observer_gain(double_integrator(), dec.follower_submatrix, Matrix::Identity(2, 2));
  const Matrix closed = observer_closed_loop(double_integrator(), dec.follower_submatrix, obs.l0);
  CHECK(closed.rows() == 6);
  Eigen::EigenSolver<Matrix> es(closed);
  CHECK(es.eigenvalues().real().maxCoeff() < 0.0);
  CHECK(obs.closed_loop.hurwitz);
  CHECK(obs.mu == doctest::Approx(1.0 / min_eigenvalue(dec)));

  SUBCASE("doubling mu does not reduce the margin here") {
    const Vector l0_double = 2.0 * obs.l0;
    const auto doubled = check_hurwitz(observer_closed_loop(double_integrator(), dec.follower_submatrix, l0_double));
    CHECK(doubled.hurwitz);
    CHECK(doubled.margin >= obs.closed_loop.margin);
  }

  SUBCASE("a perturbed gain is re-certified, not assumed") {
    const Vector bad = obs.l0 + 2.0 * obs.l0.norm() * Vector::Ones(2);
    CHECK_FALSE(check_hurwitz(observer_closed_loop(double_integrator(), dec.follower_submatrix, bad)).hurwitz);
  }
}

TEST_CASE("observer gain for a single follower with a stable scalar leader") {
  const LeaderModel leader({-1.0}, 1.0);
  Matrix h(1, 1);
  h << 1.0;
  const auto obs = observer_gain(leader, h, Matrix::Identity(1, 1));
  CHECK(obs.l0(0) <= 0.0);
  CHECK(obs.mu == 1.0);
  CHECK(obs.closed_loop.hurwitz);
}

TEST_CASE("observer gain rejects a non-positive-definite H") {
  Matrix h = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(observer_gain(double_integrator(), h, Matrix::Identity(2, 2)), NotConnected);
}

TEST_CASE("Hurwitz coefficients") {
  const auto k2 = hurwitz_coeffs(2, std::vector<double>{-1.0, -1.0});
  CHECK(k2 == std::vector<double>{-1.0, -2.0});
  CHECK(hurwitz_coeffs(1, std::vector<double>{-3.0}) == std::vector<double>{-3.0});

  const std::vector<double> poles{-1.0, -2.0, -3.0};
  const auto oracle = expand(poles);  // 1, 6, 11, 6
  CHECK(oracle == std::vector<double>{1.0, 6.0, 11.0, 6.0});
  const auto k3 = hurwitz_coeffs(3, poles);
  CHECK(k3 == std::vector<double>{-6.0, -11.0, -6.0});

  CHECK_THROWS_AS(hurwitz_coeffs(2, std::vector<double>{-1.0, 0.0}), InvalidPoles);
  CHECK_THROWS_AS(hurwitz_coeffs(2, std::vector<double>{-1.0}), InvalidPoles);
  CHECK_THROWS_AS(hurwitz_coeffs(1, std::vector<double>{2.0}), InvalidPoles);
}

TEST_CASE("property: companion round trip recovers the poles") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pole(-4.0, -0.2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 6;
    std::vector<double> poles(n);
    for (auto& p : poles) p = pole(rng);
    // Keep them apart so the eigenvalue problem is well conditioned.
    std::sort(poles.begin(), poles.end());
    for (std::size_t j = 1; j < n; ++j) poles[j] = std::max(poles[j], poles[j - 1] + 0.3);
    if (poles.back() >= 0.0) continue;
    const auto ev = eigenvalues(companion(hurwitz_coeffs(n, poles)));
    std::vector<double> re;
    for (const auto& e : ev) {
      CHECK(std::abs(e.imag()) <= 1e-8);
      re.push_back(e.real());
    }
    std::sort(re.begin(), re.end());
    for (std::size_t j = 0; j < n; ++j) CHECK(re[j] == doctest::Approx(poles[j]).epsilon(1e-8));
  }
}

TEST_CASE("check_hurwitz") {
  Matrix a(2, 2);
  a << 0, 1, -1, -2;
  const auto r = check_hurwitz(a);
  CHECK(r.hurwitz);
  CHECK(r.margin == doctest::Approx(1.0).epsilon(1e-6));  // double root: eigen solver accuracy ~sqrt(eps)
  Matrix b(2, 2);
  b << 0, 1, 1, 0;
  CHECK_FALSE(check_hurwitz(b).hurwitz);
  CHECK(check_hurwitz(b).margin == doctest::Approx(-1.0));
}

TEST_CASE("synthesize fills only what the law needs") {
  const auto dec = build_laplacian(paper_graph());
  const auto adaptive = synthesize(double_integrator(), dec, {}, false, false);
  CHECK(adaptive.K.size() == 0);
  CHECK(adaptive.l0.size() == 0);
  CHECK_FALSE(adaptive.certificates.lambda_min.has_value());
  CHECK(adaptive.certificates.riccati_margin > 0.0);

  const auto full = synthesize(double_integrator(), dec, {}, true, true);
  CHECK(full.K.size() == 2);
  CHECK(full.k0 == std::vector<double>{-1.0, -2.0});
  CHECK(full.certificates.observer_closed_loop->hurwitz);
  CHECK(full.certificates.chain_closed_loop->hurwitz);
  CHECK(full.certificates.coupled_closed_loop->hurwitz);

  // The adaptive law does not need a connected graph to synthesize P.
  CHECK_NOTHROW(synthesize(double_integrator(), build_laplacian(Digraph::empty(3)), {}, false, false));
  CHECK_THROWS_AS(synthesize(double_integrator(), build_laplacian(Digraph::empty(3)), {}, true, false), NotConnected);
}
