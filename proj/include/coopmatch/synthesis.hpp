#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "coopmatch/graph.hpp"
#include "coopmatch/linalg.hpp"

namespace coopmatch {

/// Input-driven reference system  ẇ = S w + d v,  y_r = cᵀ w  in companion form.
///
/// S has an identity superdiagonal and bottom row (s_0, ..., s_{n-1});
/// d = (0, ..., 0, d_n) and c = (1, 0, ..., 0).
class LeaderModel {
 public:
  LeaderModel(std::vector<double> bottom_row, double d_last, double input_bound = 0.0);

  std::size_t dim() const { return bottom_row_.size(); }
  const std::vector<double>& bottom_row() const { return bottom_row_; }
  double d_last() const { return d_last_; }
  double input_bound() const { return input_bound_; }

  const Matrix& S() const { return s_; }
  const Vector& d() const { return d_; }
  const Vector& c() const { return c_; }

  /// Last row of S as a row vector.
  RowVector bottom() const { return s_.row(s_.rows() - 1); }

  friend bool operator==(const LeaderModel& a, const LeaderModel& b) {
    return a.bottom_row_ == b.bottom_row_ && a.d_last_ == b.d_last_ && a.input_bound_ == b.input_bound_;
  }

 private:
  std::vector<double> bottom_row_;
  double d_last_;
  double input_bound_;
  Matrix s_;
  Vector d_;
  Vector c_;
};

struct HurwitzReport {
  bool hurwitz = false;
  double margin = 0.0;  // -max Re(eig); positive when Hurwitz
  std::vector<std::complex<double>> eigenvalues;
};

inline constexpr double kHurwitzTolerance = 1e-9;

HurwitzReport check_hurwitz(const Matrix& m);

/// Stabilizing solution of  Aᵀ P + P A - 2 P b bᵀ P + Q = 0.
Matrix solve_care(const Matrix& a, const Vector& b, const Matrix& q);

/// Frobenius norm of the Riccati residual for the equation above.
double care_residual(const Matrix& a, const Vector& b, const Matrix& q, const Matrix& p);

/// P solving  SᵀP + PS - 2Pd dᵀP + Q = 0, so that SᵀP + PS < 2Pd dᵀP holds strictly.
Matrix solve_p(const LeaderModel& leader, const Matrix& q_weight);

struct FeedbackGain {
  RowVector K;
  double gamma = 0.0;
  // One report per eigenvalue λ_i of H for S + λ_i d K.
  std::vector<HurwitzReport> per_mode;
};

/// K = -γ dᵀP with γ = max(1/λ_N, 1) · safety_factor, certified for every
/// supplied eigenvalue (just λ_N when `spectrum` is empty).
FeedbackGain gain_k(const Matrix& p, const LeaderModel& leader, double lambda_min,
                    std::span<const double> spectrum = {}, double safety_factor = 1.0);

struct ObserverGain {
  Vector l0;
  double mu = 0.0;
  Matrix dual_p;  // solution of the dual Riccati equation in (Sᵀ, c)
  HurwitzReport closed_loop;
};

/// Column injection gain l0 = -μ P̃ c making I_N ⊗ S + H ⊗ (l0 cᵀ) Hurwitz.
/// μ starts at 1/λ_N and doubles until certified or μ exceeds
/// mu_max_factor / λ_N.
ObserverGain observer_gain(const LeaderModel& leader, const Matrix& h, const Matrix& q_weight,
                           double mu_max_factor = 1024.0);

/// The matrix whose Hurwitzness the distributed observer relies on.
Matrix observer_closed_loop(const LeaderModel& leader, const Matrix& h, const Vector& l0);

/// I_N ⊗ S + H ⊗ d K.
Matrix coupled_closed_loop(const LeaderModel& leader, const Matrix& h, const RowVector& k);

/// Coefficients k_1..k_n such that s^n - k_n s^{n-1} - ... - k_1 = Π (s - pole_j).
std::vector<double> hurwitz_coeffs(std::size_t n, std::span<const double> poles);

/// Companion matrix with identity superdiagonal and bottom row (k_1, ..., k_n);
/// its characteristic polynomial is s^n - k_n s^{n-1} - ... - k_1.
Matrix companion(std::span<const double> k);

struct SynthesisOptions {
  Matrix q_weight;           // empty -> identity
  Matrix observer_q_weight;  // empty -> identity
  double safety_factor = 1.0;
  std::vector<double> poles;  // empty -> all at -1
  double mu_max_factor = 1024.0;
};

struct SynthesisCertificates {
  double riccati_residual = 0.0;
  double riccati_margin = 0.0;  // -max eig(SᵀP + PS - 2Pd dᵀP)
  std::vector<double> h_eigenvalues;
  std::optional<double> lambda_min;
  std::vector<HurwitzReport> feedback_modes;
  std::optional<HurwitzReport> coupled_closed_loop;
  std::optional<HurwitzReport> observer_closed_loop;
  std::optional<HurwitzReport> chain_polynomial;
  std::optional<HurwitzReport> chain_closed_loop;  // S + d k0ᵀ
};

struct SynthesisResult {
  Matrix P;
  RowVector K;
  double gamma = 0.0;
  Vector l0;
  double mu = 0.0;
  std::vector<double> k0;
  SynthesisCertificates certificates;
};

/// Computes P always; K/γ when `feedback`; l0/μ/k0 when `observer`.
/// The graph spectrum is only consulted when one of the two is requested.
SynthesisResult synthesize(const LeaderModel& leader, const LaplacianDecomposition& dec,
                           const SynthesisOptions& options, bool feedback, bool observer);

}  // namespace coopmatch
