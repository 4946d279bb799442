#include "coopmatch/linalg.hpp"

#include "coopmatch/errors.hpp"

namespace coopmatch {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& m) {
  const Eigen::Index n = a.rows();
  const Matrix eye = Matrix::Identity(n, n);
  // vec(AᵀX + XA) = (I ⊗ Aᵀ + Aᵀ ⊗ I) vec(X) for column-major vec.
  const Matrix op = kron(eye, a.transpose()) + kron(a.transpose(), eye);
  const Vector rhs = -Eigen::Map<const Vector>(m.data(), n * n);
  Eigen::FullPivLU<Matrix> lu(op);
  if (!lu.isInvertible()) {
    throw SynthesisFailure("Lyapunov operator is singular");
  }
  const Vector x = lu.solve(rhs);
  Matrix out = Eigen::Map<const Matrix>(x.data(), n, n);
  return 0.5 * (out + out.transpose());
}

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  std::vector<std::complex<double>> out;
  if (m.rows() == 0) return out;
  Eigen::EigenSolver<Matrix> es(m, false);
  const auto ev = es.eigenvalues();
  out.assign(ev.data(), ev.data() + ev.size());
  return out;
}

}  // namespace coopmatch
