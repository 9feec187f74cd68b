#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsqopt/dense_matrix.hpp"
#include "lsqopt/linalg.hpp"
#include "lsqopt/rng.hpp"

namespace lsqopt {

enum class DecayKind { exponential, algebraic };

// Recipe for a synthetic least-squares instance with a prescribed spectrum.
struct ProblemSpec {
  DecayKind decay = DecayKind::exponential;
  double kappa = 20.0;        // condition number of A^T A
  double q = 0.7;             // decay rate
  double lambda_d = 1.0;      // smallest eigenvalue of A^T A
  std::size_t n = 1000;
  std::size_t d = 50;
  bool consistent = true;
  double noise_radius = 1e-3; // perturbation sphere radius, inconsistent only
  std::uint64_t seed = 0;

  std::string label() const;  // e.g. "(ED, 20, 0.7)"
};

struct LlspInstance {
  DenseMatrix a;
  std::vector<double> b;
  std::vector<double> x_star;  // minimizer
  std::vector<double> r_star;  // A x* - b
  SpectralSummary spectral;
  bool is_consistent = true;

  std::size_t n() const { return a.rows(); }
  std::size_t d() const { return a.cols(); }
};

// Singular values s_1 >= ... >= s_d of A for the requested decay profile;
// forces s_1^2 = kappa * lambda_d and s_d^2 = lambda_d exactly.
std::vector<double> decay_singular_values(const ProblemSpec& spec);

// Haar-distributed n x d matrix with orthonormal columns: thin QR of a
// standard-normal matrix, R diagonal kept positive.
DenseMatrix random_orthonormal(std::size_t n, std::size_t d, Rng& rng);

LlspInstance assemble_instance(const ProblemSpec& spec);
LlspInstance assemble_instance(const ProblemSpec& spec, Rng& rng);

// Loads a numeric CSV, standardizes feature columns to mean 0 / sample std 1,
// mean-centers the target column, and drops zero-variance features (warning on
// stderr). The result is flagged inconsistent; x* comes from normal_solve.
LlspInstance load_csv_standardized(const std::string& path, std::size_t target_column_index);

// Binary container (see README for the layout); round-trips bit-exactly.
void save_instance(const LlspInstance& inst, const std::string& path);
LlspInstance load_instance(const std::string& path);

}  // namespace lsqopt
