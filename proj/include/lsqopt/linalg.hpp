#pragma once

#include <span>
#include <vector>

#include "lsqopt/dense_matrix.hpp"

namespace lsqopt {

// Spectral facts about an n x d matrix A, all in terms of A^T A.
struct SpectralSummary {
  double lambda_max = 0.0;              // largest eigenvalue of A^T A
  double lambda_min = 0.0;              // smallest eigenvalue of A^T A
  double fro_norm_sq = 0.0;             // ||A||_F^2
  double spectral_norm = 0.0;           // ||A||_2 = sqrt(lambda_max)
  std::vector<double> row_norms_sq;     // ||a_j||_2^2, one per row

  double condition_number() const { return lambda_max / lambda_min; }
};

// G = A^T A, symmetrized by averaging G and G^T to kill round-off asymmetry.
DenseMatrix gram(const DenseMatrix& a);

// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
// Terminates when the off-diagonal Frobenius mass drops below tol * ||G||_F;
// throws numerical_error after 50 sweeps without convergence.
std::vector<double> jacobi_eigenvalues(const DenseMatrix& g, double tol = 1e-10);

// (lambda_max, lambda_min) of a symmetric matrix via jacobi_eigenvalues.
std::pair<double, double> sym_eigen_extremes(const DenseMatrix& g, double tol = 1e-10);

SpectralSummary spectral_summary(const DenseMatrix& a, double eigen_tol = 1e-10);

// Spectral norm of a symmetric matrix: max(|lambda_max|, |lambda_min|).
double sym_spectral_norm(const DenseMatrix& g, double tol = 1e-10);

// Lower Cholesky factor of an SPD matrix. Throws rank_error on pivot <= 0.
DenseMatrix cholesky(const DenseMatrix& g);

std::vector<double> cholesky_solve(const DenseMatrix& chol_lower, std::span<const double> rhs);

// Solves A^T A x = A^T b by Cholesky on the Gram matrix and verifies the
// normal-equations residual ||A^T (A x - b)|| <= 1e-8 ||A^T b||.
std::vector<double> normal_solve(const DenseMatrix& a, std::span<const double> b);

}  // namespace lsqopt
