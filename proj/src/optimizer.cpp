#include "lsqopt/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "lsqopt/errors.hpp"

namespace lsqopt {

double beta_select(std::span<const double> g, std::span<const double> u_prev,
                   const HyperParams& hp) {
  const std::size_t d = g.size();
  for (std::size_t j = 0; j < d; ++j) {
    if (g[j] * g[j] <= u_prev[j]) return 1.0;
  }
  // every coordinate now has g_j^2 > u_prev_j, so the denominators are positive
  const double inv_lower_sq = 1.0 / (hp.u_lower * hp.u_lower);
  const double cap = (1.0 + hp.epsilon) * (1.0 + hp.epsilon);
  double lo = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double gsq = g[j] * g[j];
    const double denom = gsq - u_prev[j];
    lo = std::max(lo, (gsq - inv_lower_sq) / denom);
    lo = std::max(lo, (gsq - cap * u_prev[j]) / denom);
  }
  switch (hp.beta_policy) {
    case BetaPolicy::lower_bound:
      return std::min(lo, 1.0);
    case BetaPolicy::midpoint:
      return std::min(0.5 * lo + 0.5, 1.0);
    case BetaPolicy::fixed:
      return std::clamp(hp.fixed_beta, 0.0, 1.0);
  }
  return 1.0;
}

OptState sga_step(const OptState& state, std::span<const double> g, double eta,
                  const HyperParams& hp) {
  const double beta = beta_select(g, state.u, hp);
  OptState next = state;
  next.k = state.k + 1;
  next.last_beta = beta;
  next.consecutive_beta_ones = beta == 1.0 ? state.consecutive_beta_ones + 1 : 0;
  const double mix = 1.0 - beta;
  const std::size_t d = g.size();
  for (std::size_t j = 0; j < d; ++j) {
    if (mix != 0.0) next.u[j] = state.u[j] + mix * (g[j] * g[j] - state.u[j]);
    next.x[j] = state.x[j] - eta * g[j] / std::sqrt(next.u[j]);
    if (!std::isfinite(next.x[j]) || !std::isfinite(next.u[j])) {
      throw numerical_error("sga_step: non-finite state at iteration " + std::to_string(next.k));
    }
  }
  return next;
}

OptState rmsprop_step(const OptState& state, std::span<const double> g, double beta, double eta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw config_error("rmsprop_step: beta must be in [0,1]");
  constexpr double kGuard = 1e-8;
  OptState next = state;
  next.k = state.k + 1;
  next.last_beta = beta;
  const std::size_t d = g.size();
  for (std::size_t j = 0; j < d; ++j) {
    next.u[j] = beta * state.u[j] + (1.0 - beta) * g[j] * g[j];
    next.x[j] = state.x[j] - eta * g[j] / (std::sqrt(next.u[j]) + kGuard);
  }
  return next;
}

OptState sgd_step(const OptState& state, std::span<const double> g, double eta) {
  OptState next = state;
  next.k = state.k + 1;
  for (std::size_t j = 0; j < g.size(); ++j) next.x[j] = state.x[j] - eta * g[j];
  return next;
}

double compute_step_size(const StepSizeRule& rule, const SpectralSummary& spectral,
                         std::size_t batch_size, double u_upper) {
  const double l1 = spectral.lambda_max;
  const double ld = spectral.lambda_min;
  const double fro = spectral.fro_norm_sq;
  const double b = static_cast<double>(batch_size);
  switch (rule.kind) {
    case StepSizeRule::Kind::thm_consistent:
      return 2.0 / (u_upper * (l1 + ld));
    case StepSizeRule::Kind::sga_small_batch:
      if (fro - (b - 1.0) * (l1 - ld) >= 0.0) {
        return 1.1 * b / (u_upper * (fro + (b - 1.0) * ld));
      }
      return (2.1 + std::sqrt(ld / l1)) * b / (u_upper * (fro + (b - 1.0) * (l1 + ld)));
    case StepSizeRule::Kind::sga_large_batch:
      return (2.0 + std::sqrt(ld / l1)) / (u_upper * (l1 + ld));
    case StepSizeRule::Kind::sgd_small_batch:
      if (fro - (b - 1.0) * (l1 - ld) >= 0.0) {
        return b / (fro + (b - 1.0) * ld);
      }
      return 2.0 * b / (fro + (b - 1.0) * (l1 + ld));
    case StepSizeRule::Kind::sgd_large_batch:
      return 2.0 / (l1 + ld);
    case StepSizeRule::Kind::fixed:
      if (!(rule.fixed_eta > 0.0)) throw config_error("fixed step size must be > 0");
      return rule.fixed_eta;
  }
  throw config_error("unknown step-size rule");
}

std::pair<double, double> resolve_u_bounds(std::span<const double> first_gradient, int level,
                                           double ratio) {
  double min_sq = std::numeric_limits<double>::infinity();
  for (const double g : first_gradient) {
    if (g != 0.0) min_sq = std::min(min_sq, g * g);
  }
  if (!std::isfinite(min_sq)) {
    throw numerical_error("resolve_u_bounds: first gradient is identically zero");
  }
  const double upper = std::pow(std::pow(10.0, -level) * min_sq, -0.5);
  return {upper, upper / ratio};
}

namespace {

std::string trace_prefix(const std::vector<double>& trace) {
  std::ostringstream os;
  const std::size_t show = std::min<std::size_t>(trace.size(), 6);
  for (std::size_t i = 0; i < show; ++i) {
    if (i) os << ", ";
    os << trace[i];
  }
  if (trace.size() > show) os << ", ...";
  return os.str();
}

bool uses_beta_selection(Algo algo) {
  return algo == Algo::sga_rmsprop || algo == Algo::rmsp2sgd;
}

void validate(const HyperParams& hp, Algo algo) {
  if (uses_beta_selection(algo)) {
    if (!(hp.epsilon > 0.0)) throw config_error("SGA variants require epsilon > 0");
    if (!hp.auto_u && !(hp.u_lower > 0.0 && hp.u_lower < hp.u_upper)) {
      throw config_error("SGA variants require 0 < u_lower < u_upper");
    }
    if (hp.auto_u && !(hp.auto_u_ratio > 1.0)) {
      throw config_error("auto u rule requires ratio > 1");
    }
  }
  if (algo == Algo::rmsprop) {
    if (hp.beta_policy != BetaPolicy::fixed) {
      throw config_error("baseline RMSProp requires a fixed beta");
    }
    if (hp.eta_rule.kind != StepSizeRule::Kind::fixed) {
      throw config_error("baseline RMSProp requires a fixed step size");
    }
    if (!(hp.fixed_beta >= 0.0 && hp.fixed_beta <= 1.0)) {
      throw config_error("fixed beta must lie in [0,1]");
    }
  }
}

}  // namespace

RunRecord run_optimizer(const LlspInstance& inst, const SamplingDistribution& dist,
                        const HyperParams& hp_in, Algo algo, const StopCriteria& stop, Rng& rng,
                        std::span<const double> x1, const StepObserver& observer) {
  validate(hp_in, algo);
  if (!(stop.tol > 0.0)) throw config_error("stop tolerance must be > 0");
  if (stop.max_iters == 0) throw config_error("max_iters must be >= 1");

  const std::size_t d = inst.d();
  HyperParams hp = hp_in;

  OptState state;
  state.x = x1.empty() ? std::vector<double>(d, 2.0) : std::vector<double>(x1.begin(), x1.end());
  if (state.x.size() != d) throw config_error("run_optimizer: initial point has wrong dimension");
  state.u.assign(d, 0.0);  // SGA variants reset this once u_upper is known

  RunRecord rec;
  std::vector<double> diff(d);
  auto rel_error = [&](std::span<const double> x, double denom) {
    for (std::size_t j = 0; j < d; ++j) diff[j] = x[j] - inst.x_star[j];
    return norm2(diff) / denom;
  };

  for (std::size_t j = 0; j < d; ++j) diff[j] = state.x[j] - inst.x_star[j];
  const double denom = norm2(diff);
  if (denom == 0.0) {
    rec.trace.push_back(0.0);
    rec.trace_iters.push_back(0);
    rec.iters_to_converge = 0;
    return rec;
  }
  rec.trace.push_back(1.0);
  rec.trace_iters.push_back(0);
  if (1.0 <= stop.tol) {
    rec.iters_to_converge = 0;
    return rec;
  }

  const bool adaptive = uses_beta_selection(algo);
  double eta = 0.0;
  double eta_sgd = 0.0;
  if (!adaptive || !hp.auto_u) {
    if (adaptive) {
      state.u.assign(d, 1.0 / (hp.u_upper * hp.u_upper));
      rec.resolved_u_upper = hp.u_upper;
      rec.resolved_u_lower = hp.u_lower;
    }
    eta = compute_step_size(hp.eta_rule, inst.spectral, hp.batch_size,
                            adaptive ? hp.u_upper : 1.0);
    rec.resolved_eta = eta;
  }
  if (algo == Algo::rmsp2sgd) {
    const StepSizeRule sgd_rule{hp.batch_size >= hp.large_batch_threshold
                                    ? StepSizeRule::Kind::sgd_large_batch
                                    : StepSizeRule::Kind::sgd_small_batch,
                                0.0};
    eta_sgd = compute_step_size(sgd_rule, inst.spectral, hp.batch_size, 1.0);
    rec.resolved_eta_sgd = eta_sgd;
  }

  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t k = 1; k <= stop.max_iters; ++k) {
    const Batch batch = draw_batch(dist, hp.batch_size, rng);
    const std::vector<double> g = minibatch_gradient(inst, state.x, batch, dist);

    if (k == 1 && adaptive && hp.auto_u) {
      const auto [upper, lower] = resolve_u_bounds(g, hp.auto_u_level, hp.auto_u_ratio);
      hp.u_upper = upper;
      hp.u_lower = lower;
      state.u.assign(d, 1.0 / (upper * upper));
      eta = compute_step_size(hp.eta_rule, inst.spectral, hp.batch_size, upper);
      rec.resolved_u_upper = upper;
      rec.resolved_u_lower = lower;
      rec.resolved_eta = eta;
    }

    const std::vector<double> u_prev = state.u;
    bool preconditioned = false;
    switch (algo) {
      case Algo::sga_rmsprop:
        state = sga_step(state, g, eta, hp);
        preconditioned = true;
        break;
      case Algo::rmsprop:
        state = rmsprop_step(state, g, hp.fixed_beta, eta);
        break;
      case Algo::sgd:
        state = sgd_step(state, g, eta);
        break;
      case Algo::rmsp2sgd: {
        if (state.switched_to_sgd) {
          state = sgd_step(state, g, eta_sgd);
          break;
        }
        const double beta = beta_select(g, state.u, hp);
        const std::size_t consec = beta == 1.0 ? state.consecutive_beta_ones + 1 : 0;
        if (consec >= 5) {
          // switch rule met: leave u as is and spend this gradient on an SGD step
          state = sgd_step(state, g, eta_sgd);
          state.switched_to_sgd = true;
          state.consecutive_beta_ones = consec;
          state.last_beta = beta;
          rec.switch_iter = k;
          if (stop.record_beta) rec.beta_trace.push_back(beta);
        } else {
          state = sga_step(state, g, eta, hp);
          preconditioned = true;
        }
        break;
      }
    }

    if (preconditioned) {
      if (stop.record_beta) rec.beta_trace.push_back(state.last_beta);
      if (observer) {
        observer(StepEvent{k, state.last_beta, u_prev, state.u, g, state.x});
      }
    }

    const double rel = rel_error(state.x, denom);
    if (!std::isfinite(rel)) {
      throw numerical_error("run_optimizer: non-finite relative error at iteration " +
                            std::to_string(k));
    }
    const bool done = rel <= stop.tol || k == stop.max_iters;
    if (k % stop.trace_stride == 0 || done) {
      rec.trace.push_back(rel);
      rec.trace_iters.push_back(k);
    }
    if (rel > stop.divergence_limit) {
      throw divergence_error("run_optimizer: diverged at iteration " + std::to_string(k) +
                             " (relative error " + std::to_string(rel) + "; trace prefix: " +
                             trace_prefix(rec.trace) + ")");
    }
    if (rel <= stop.tol) {
      rec.iters_to_converge = k;
      break;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return rec;
}

}  // namespace lsqopt
