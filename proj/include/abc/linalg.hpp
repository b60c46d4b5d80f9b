#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>

namespace abc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Eigenpairs of a symmetric matrix, eigenvalues ascending, eigenvectors as columns.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm is at most
// tol * max(1, ||a||_F). Only the upper triangle's symmetry is assumed.
SymmetricEigen symmetric_eigen(const Matrix& a, double tol = 1e-12, int max_sweeps = 100);

// V f(diag) V^T
Matrix spectral_apply(const SymmetricEigen& e, const std::function<double(double)>& f);

double lambda_min(const Matrix& a);
double lambda_max(const Matrix& a);

// Square root of a PSD matrix; eigenvalues in [-tol, 0) are clipped to zero.
Matrix psd_sqrt(const Matrix& a, double tol = 1e-10);
// Inverse square root of a positive definite matrix.
Matrix pd_inverse_sqrt(const Matrix& a);

bool is_symmetric(const Matrix& a, double tol);
Matrix symmetrize(const Matrix& a);

// J = 11^T / m
Matrix averaging_matrix(int m);

// Largest |lambda| of a symmetric matrix.
double spectral_radius_sym(const Matrix& a);

// Second-smallest eigenvalue of a symmetric matrix.
double lambda_second_smallest(const Matrix& a);

// tr(X^T G X)
double weighted_sq_norm(const Matrix& g, const Matrix& x);

// Row-major CSV with 17 significant digits.
void write_matrix_csv(std::ostream& os, const Matrix& a);
Matrix read_matrix_csv(std::istream& is);

}  // namespace abc
