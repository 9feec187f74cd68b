#include "lsqopt/sampling.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "lsqopt/errors.hpp"

namespace lsqopt {

SamplingDistribution make_distribution(std::vector<double> probs) {
  const std::size_t n = probs.size();
  if (n == 0) throw domain_error("make_distribution: empty probability vector");
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!(probs[j] > 0.0)) {
      throw domain_error("make_distribution: non-positive probability at index " +
                         std::to_string(j));
    }
    total += probs[j];
  }
  for (double& p : probs) p /= total;

  SamplingDistribution dist;
  dist.alias_prob.assign(n, 0.0);
  dist.alias_index.resize(n);
  for (std::size_t j = 0; j < n; ++j) dist.alias_index[j] = j;

  std::vector<double> scaled(n);
  std::deque<std::size_t> small, large;
  for (std::size_t j = 0; j < n; ++j) {
    scaled[j] = probs[j] * static_cast<double>(n);
    (scaled[j] < 1.0 ? small : large).push_back(j);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.front();
    const std::size_t l = large.front();
    small.pop_front();
    large.pop_front();
    dist.alias_prob[s] = scaled[s];
    dist.alias_index[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  // leftovers carry probability 1 up to round-off
  for (std::size_t j : small) dist.alias_prob[j] = 1.0;
  for (std::size_t j : large) dist.alias_prob[j] = 1.0;

  dist.probs = std::move(probs);
  return dist;
}

SamplingDistribution squared_norm_probs(const SpectralSummary& spectral) {
  const std::size_t n = spectral.row_norms_sq.size();
  std::vector<double> probs(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!(spectral.row_norms_sq[j] > 0.0)) {
      throw domain_error("squared_norm_probs: zero row at index " + std::to_string(j));
    }
    probs[j] = spectral.row_norms_sq[j] / spectral.fro_norm_sq;
  }
  return make_distribution(std::move(probs));
}

double weighted_row_max(const SpectralSummary& spectral, const SamplingDistribution& dist) {
  if (dist.size() != spectral.row_norms_sq.size()) {
    throw config_error("weighted_row_max: distribution size mismatch");
  }
  double w = 0.0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    w = std::max(w, spectral.row_norms_sq[j] / dist.probs[j]);
  }
  return w;
}

Batch draw_batch(const SamplingDistribution& dist, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw config_error("draw_batch: batch size must be >= 1");
  Batch batch;
  batch.indices.resize(batch_size);
  const std::size_t n = dist.size();
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t slot = rng.uniform_index(n);
    batch.indices[i] = rng.uniform() < dist.alias_prob[slot] ? slot : dist.alias_index[slot];
  }
  return batch;
}

std::vector<double> minibatch_gradient(const LlspInstance& inst, std::span<const double> x,
                                       const Batch& batch, const SamplingDistribution& dist) {
  if (x.size() != inst.d()) throw config_error("minibatch_gradient: dimension mismatch");
  const std::size_t d = inst.d();
  std::vector<double> g(d, 0.0);
  for (const std::size_t idx : batch.indices) {
    const auto row = inst.a.row(idx);
    const double w = (dot(row, x) - inst.b[idx]) / dist.probs[idx];
    for (std::size_t j = 0; j < d; ++j) g[j] += w * row[j];
  }
  const double inv_b = 1.0 / static_cast<double>(batch.indices.size());
  for (std::size_t j = 0; j < d; ++j) {
    g[j] *= inv_b;
    if (!std::isfinite(g[j])) {
      throw numerical_error("minibatch_gradient: non-finite component " + std::to_string(j) +
                            " of the iterate's gradient");
    }
  }
  return g;
}

std::vector<double> full_gradient(const LlspInstance& inst, std::span<const double> x) {
  if (x.size() != inst.d()) throw config_error("full_gradient: dimension mismatch");
  auto ax = mat_vec(inst.a, x);
  for (std::size_t i = 0; i < ax.size(); ++i) ax[i] -= inst.b[i];
  return mat_transpose_vec(inst.a, ax);
}

}  // namespace lsqopt
