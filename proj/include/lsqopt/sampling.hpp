#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lsqopt/linalg.hpp"
#include "lsqopt/problem.hpp"
#include "lsqopt/rng.hpp"

namespace lsqopt {

// Row-sampling probabilities plus Walker alias tables for O(1) draws.
struct SamplingDistribution {
  std::vector<double> probs;
  std::vector<double> alias_prob;        // acceptance probability per slot
  std::vector<std::size_t> alias_index;  // fallback index per slot

  std::size_t size() const { return probs.size(); }
};

struct Batch {
  std::vector<std::size_t> indices;  // sampled i.i.d., with replacement
};

// Builds alias tables for an arbitrary positive probability vector
// (normalized internally). Two-queue construction.
SamplingDistribution make_distribution(std::vector<double> probs);

// p_j = ||a_j||^2 / ||A||_F^2. Rejects matrices with a zero row.
SamplingDistribution squared_norm_probs(const SpectralSummary& spectral);

// max_j ||a_j||^2 / p_j; >= ||A||_F^2 for every probability vector, with
// equality at squared-norm probabilities.
double weighted_row_max(const SpectralSummary& spectral, const SamplingDistribution& dist);

Batch draw_batch(const SamplingDistribution& dist, std::size_t batch_size, Rng& rng);

// Importance-weighted mini-batch gradient:
//   g = (1/B) sum_{i in batch} a_i (a_i^T x - b_i) / p_i
std::vector<double> minibatch_gradient(const LlspInstance& inst, std::span<const double> x,
                                       const Batch& batch, const SamplingDistribution& dist);

// A^T (A x - b); the exact gradient of (1/2)||A x - b||^2.
std::vector<double> full_gradient(const LlspInstance& inst, std::span<const double> x);

}  // namespace lsqopt
