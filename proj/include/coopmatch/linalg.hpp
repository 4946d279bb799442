#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace coopmatch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Kronecker product a ⊗ b.
Matrix kron(const Matrix& a, const Matrix& b);

// Shape-aware exact equality (Eigen's operator== asserts on size mismatch).
bool same(const Matrix& a, const Matrix& b);

// Solves Aᵀ X + X A = -M for X by vectorization. Small dimensions only.
Matrix solve_lyapunov(const Matrix& a, const Matrix& m);

std::vector<std::complex<double>> eigenvalues(const Matrix& m);

}  // namespace coopmatch
