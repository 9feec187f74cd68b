#include "lsqopt/bounds.hpp"

#include <cmath>

#include "lsqopt/errors.hpp"
#include "lsqopt/parallel.hpp"

namespace lsqopt {

double sigma_bound(const SpectralSummary& spectral, const SamplingDistribution& dist,
                   std::size_t batch_size, std::size_t d) {
  if (batch_size == 0) throw config_error("sigma_bound: batch size must be >= 1");
  const double w = weighted_row_max(spectral, dist);
  const double gap = w - spectral.lambda_min;
  if (gap <= 0.0) {
    throw numerical_error("sigma_bound: weighted row max <= lambda_min, inputs inconsistent");
  }
  const double log2d = std::log(2.0 * static_cast<double>(d));
  const double b = static_cast<double>(batch_size);
  const double spec_sq = spectral.lambda_max;  // ||A||_2^2
  return std::sqrt(2.0 * gap * spec_sq * log2d / b) + log2d / (3.0 * b) * gap;
}

std::pair<double, double> eps_admissible(const SpectralSummary& spectral,
                                         const SamplingDistribution& dist,
                                         std::size_t batch_size, double u_lower, double u_upper,
                                         std::size_t d) {
  const double sigma = sigma_bound(spectral, dist, batch_size, d);
  const double l1 = spectral.lambda_max;
  const double ld = spectral.lambda_min;
  const double theorem = 2.0 * (u_lower * ld - u_upper * sigma) / (u_upper * (l1 + ld));
  const double corollary = u_lower * ld / (2.0 * u_upper * (l1 + ld));
  return {theorem, corollary};
}

std::uint64_t batch_lower_bound(const SpectralSummary& spectral,
                                const SamplingDistribution& dist, double u_lower, double u_upper,
                                std::size_t d) {
  const double w = weighted_row_max(spectral, dist);
  const double log2d = std::log(2.0 * static_cast<double>(d));
  const double ld = spectral.lambda_min;
  const double root = 2.0 * std::sqrt(2.0) * spectral.spectral_norm / ld +
                      std::sqrt(u_lower / (3.0 * u_upper * ld));
  const double b = 4.0 * u_upper * u_upper * log2d * w / (u_lower * u_lower) * root * root;
  return static_cast<std::uint64_t>(std::ceil(b));
}

double rate_bound(const SpectralSummary& spectral, double u_lower, double u_upper) {
  return 1.0 - u_lower * spectral.lambda_min /
                   (u_upper * (spectral.lambda_max + spectral.lambda_min));
}

double h_bound(const SpectralSummary& spectral, const SamplingDistribution& dist,
               std::span<const double> r_star, std::size_t batch_size, std::size_t d) {
  if (batch_size == 0) throw config_error("h_bound: batch size must be >= 1");
  if (r_star.size() != dist.size()) throw config_error("h_bound: dimension mismatch");
  const double r_norm_sq = dot(r_star, r_star);
  if (r_norm_sq == 0.0) return 0.0;
  const double w = weighted_row_max(spectral, dist);
  double row_max = 0.0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    row_max = std::max(row_max, std::sqrt(spectral.row_norms_sq[j]) * std::abs(r_star[j]) /
                                    dist.probs[j]);
  }
  const double logd1 = std::log(static_cast<double>(d) + 1.0);
  const double b = static_cast<double>(batch_size);
  return std::sqrt(2.0 * w * r_norm_sq * logd1 / b) + row_max * logd1 / (3.0 * b);
}

double confusion_radius(const SpectralSummary& spectral, const SamplingDistribution& dist,
                        std::span<const double> r_star, std::size_t batch_size, double u_lower,
                        double u_upper, std::size_t d) {
  const double ratio = std::pow(u_upper / u_lower, 1.5);
  return 2.0 * ratio / spectral.lambda_min *
         h_bound(spectral, dist, r_star, batch_size, d);
}

double empirical_matrix_deviation(const LlspInstance& inst, const SamplingDistribution& dist,
                                  std::size_t batch_size, std::size_t trials, std::uint64_t seed) {
  if (trials < 100) throw config_error("empirical_matrix_deviation: needs >= 100 trials");
  const std::size_t d = inst.d();
  const DenseMatrix g = gram(inst.a);
  const double inv_b = 1.0 / static_cast<double>(batch_size);

  std::vector<double> deviations(trials, 0.0);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng(mix_seed(seed, t));
    DenseMatrix m(d, d);
    Batch batch = draw_batch(dist, batch_size, rng);
    for (const std::size_t idx : batch.indices) {
      const auto row = inst.a.row(idx);
      const double w = inv_b / dist.probs[idx];
      for (std::size_t i = 0; i < d; ++i) {
        const double wi = w * row[i];
        for (std::size_t j = i; j < d; ++j) m(i, j) += wi * row[j];
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        const double v = m(i, j) - g(i, j);
        m(i, j) = v;
        m(j, i) = v;
      }
    }
    deviations[t] = sym_spectral_norm(m);
  });

  double sum = 0.0;
  for (const double v : deviations) sum += v;
  return sum / static_cast<double>(trials);
}

double empirical_h_norm(const LlspInstance& inst, const SamplingDistribution& dist,
                        std::size_t batch_size, std::size_t trials, std::uint64_t seed) {
  if (trials < 100) throw config_error("empirical_h_norm: needs >= 100 trials");
  const std::size_t d = inst.d();
  const double inv_b = 1.0 / static_cast<double>(batch_size);

  std::vector<double> norms(trials, 0.0);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng(mix_seed(seed, t));
    std::vector<double> h(d, 0.0);
    Batch batch = draw_batch(dist, batch_size, rng);
    for (const std::size_t idx : batch.indices) {
      const auto row = inst.a.row(idx);
      const double w = inst.r_star[idx] / dist.probs[idx];
      for (std::size_t j = 0; j < d; ++j) h[j] += w * row[j];
    }
    for (double& v : h) v *= inv_b;
    norms[t] = norm2(h);
  });

  double sum = 0.0;
  for (const double v : norms) sum += v;
  return sum / static_cast<double>(trials);
}

BoundReport make_bound_report(const LlspInstance& inst, const SamplingDistribution& dist,
                              std::size_t batch_size, double u_lower, double u_upper) {
  BoundReport rep;
  const std::size_t d = inst.d();
  rep.weighted_max = weighted_row_max(inst.spectral, dist);
  rep.sigma = sigma_bound(inst.spectral, dist, batch_size, d);
  const auto [theorem, corollary] =
      eps_admissible(inst.spectral, dist, batch_size, u_lower, u_upper, d);
  rep.eps_max_theorem = theorem;
  rep.eps_max_corollary = corollary;
  rep.batch_min = batch_lower_bound(inst.spectral, dist, u_lower, u_upper, d);
  rep.rate_bound = rate_bound(inst.spectral, u_lower, u_upper);
  if (!inst.is_consistent) {
    rep.h_bound = h_bound(inst.spectral, dist, inst.r_star, batch_size, d);
    rep.confusion_radius =
        confusion_radius(inst.spectral, dist, inst.r_star, batch_size, u_lower, u_upper, d);
  }
  return rep;
}

}  // namespace lsqopt
