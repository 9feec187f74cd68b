#pragma once

#include <cstdint>
#include <span>

#include "lsqopt/problem.hpp"
#include "lsqopt/sampling.hpp"

namespace lsqopt {

// Every computable bound for one (instance, distribution, B, u-bounds) tuple.
struct BoundReport {
  double sigma = 0.0;               // deviation bound on E||M_k - A^T A||_2
  double weighted_max = 0.0;        // max_j ||a_j||^2 / p_j
  double eps_max_theorem = 0.0;     // admissible-epsilon endpoint; may be <= 0 at small B
  double eps_max_corollary = 0.0;   // u_lower lambda_d / (2 u_upper (lambda_1 + lambda_d))
  std::uint64_t batch_min = 0;      // batch size guaranteeing sigma <= u_lower lambda_d/(4 u_upper)
  double rate_bound = 0.0;          // 1 - u_lower lambda_d / (u_upper (lambda_1 + lambda_d))
  double h_bound = 0.0;             // residual-noise bound (0 on consistent instances)
  double confusion_radius = 0.0;    // plateau radius (0 on consistent instances)
};

// sigma = sqrt(2 (W - lambda_d) ||A||_2^2 log(2d) / B) + log(2d) (W - lambda_d) / (3B)
// with W = weighted_row_max. Natural logarithms throughout.
double sigma_bound(const SpectralSummary& spectral, const SamplingDistribution& dist,
                   std::size_t batch_size, std::size_t d);

// (eps_max_theorem, eps_max_corollary). The theorem endpoint is returned as-is
// even when non-positive; the caller decides how to surface "no admissible
// epsilon at this batch size".
std::pair<double, double> eps_admissible(const SpectralSummary& spectral,
                                         const SamplingDistribution& dist,
                                         std::size_t batch_size, double u_lower, double u_upper,
                                         std::size_t d);

// Smallest integer B that guarantees sigma <= u_lower lambda_d / (4 u_upper).
std::uint64_t batch_lower_bound(const SpectralSummary& spectral,
                                const SamplingDistribution& dist, double u_lower, double u_upper,
                                std::size_t d);

double rate_bound(const SpectralSummary& spectral, double u_lower, double u_upper);

// Bound on E||h_k||_2 for the inconsistent residual term; 0 when r* = 0.
double h_bound(const SpectralSummary& spectral, const SamplingDistribution& dist,
               std::span<const double> r_star, std::size_t batch_size, std::size_t d);

// R = 2 u_upper^{3/2} / (u_lower^{3/2} lambda_d) * h_bound.
double confusion_radius(const SpectralSummary& spectral, const SamplingDistribution& dist,
                        std::span<const double> r_star, std::size_t batch_size, double u_lower,
                        double u_upper, std::size_t d);

// Monte-Carlo estimate of E||M - A^T A||_2 over `trials` independent batches,
// M = (1/B) sum a_xi a_xi^T / p_xi. Parallelizes across trials with per-trial
// RNG streams; the reduction order is deterministic.
double empirical_matrix_deviation(const LlspInstance& inst, const SamplingDistribution& dist,
                                  std::size_t batch_size, std::size_t trials, std::uint64_t seed);

// Monte-Carlo estimate of E||h_k||_2, h_k = (1/B) sum (r*_xi / p_xi) a_xi.
double empirical_h_norm(const LlspInstance& inst, const SamplingDistribution& dist,
                        std::size_t batch_size, std::size_t trials, std::uint64_t seed);

BoundReport make_bound_report(const LlspInstance& inst, const SamplingDistribution& dist,
                              std::size_t batch_size, double u_lower, double u_upper);

}  // namespace lsqopt
