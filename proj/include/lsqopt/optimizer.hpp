#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lsqopt/problem.hpp"
#include "lsqopt/rng.hpp"
#include "lsqopt/sampling.hpp"

namespace lsqopt {

enum class Algo { sga_rmsprop, rmsprop, sgd, rmsp2sgd };

enum class BetaPolicy { lower_bound, midpoint, fixed };

struct StepSizeRule {
  enum class Kind {
    thm_consistent,   // 2 / (u_upper (lambda_1 + lambda_d))
    sga_small_batch,  // Moorman-style piecewise rule scaled by 1/u_upper
    sga_large_batch,  // (2 + sqrt(lambda_d/lambda_1)) / (u_upper (lambda_1 + lambda_d))
    sgd_small_batch,  // piecewise rule, constants 1 and 2, no u_upper
    sgd_large_batch,  // 2 / (lambda_1 + lambda_d)
    fixed,
  };
  Kind kind = Kind::thm_consistent;
  double fixed_eta = 0.0;

  static StepSizeRule fixed_step(double eta) { return {Kind::fixed, eta}; }
};

struct HyperParams {
  double epsilon = 0.0;      // adjusted level; caps the per-step preconditioner change
  double u_lower = 0.0;      // 0 means "resolve via the auto rule" when auto_u is set
  double u_upper = 0.0;
  bool auto_u = true;
  int auto_u_level = 2;      // i in the (10^-i min_j g_1j^2)^(-1/2) rule
  double auto_u_ratio = 5.0; // u_upper / u_lower
  BetaPolicy beta_policy = BetaPolicy::midpoint;
  double fixed_beta = 0.99;
  StepSizeRule eta_rule;
  std::size_t batch_size = 1000;
  std::size_t large_batch_threshold = 500;  // B at or above this uses large-batch SGD rules
};

struct OptState {
  std::vector<double> x;
  std::vector<double> u;
  std::size_t k = 0;
  std::size_t consecutive_beta_ones = 0;
  bool switched_to_sgd = false;
  double last_beta = 1.0;
};

struct StopCriteria {
  double tol = 1e-4;               // on ||x_k - x*|| / ||x_1 - x*||
  std::size_t max_iters = 100000;
  double divergence_limit = 1e8;   // relative error beyond this aborts the run
  std::size_t trace_stride = 1;
  bool record_beta = false;
};

struct RunRecord {
  std::vector<double> trace;              // relative error per recorded iteration
  std::vector<std::size_t> trace_iters;   // iteration number of each trace entry
  std::optional<std::size_t> iters_to_converge;
  double wall_ms = 0.0;
  std::optional<std::size_t> switch_iter; // RMSP2SGD only
  std::vector<double> beta_trace;         // one entry per pre-switch iteration, if recorded
  double resolved_u_upper = 0.0;
  double resolved_u_lower = 0.0;
  double resolved_eta = 0.0;
  double resolved_eta_sgd = 0.0;          // post-switch step size (RMSP2SGD)
};

// Passed to the step observer after every preconditioned step.
struct StepEvent {
  std::size_t k = 0;
  double beta = 1.0;
  std::span<const double> u_prev;
  std::span<const double> u;
  std::span<const double> g;
  std::span<const double> x;
};
using StepObserver = std::function<void(const StepEvent&)>;

// Discounting factor selection. Returns 1 when any coordinate has
// g_j^2 <= u_prev_j; otherwise picks from [L, 1] according to the policy,
// where L is the largest of the two ratio constraints and 0.
double beta_select(std::span<const double> g, std::span<const double> u_prev,
                   const HyperParams& hp);

// One SGA-RMSProp iteration: select beta, update the moving average, take the
// preconditioned step. u is updated as u + (1-beta)(g^2 - u), which keeps it
// coordinate-wise non-decreasing in floating point as well.
OptState sga_step(const OptState& state, std::span<const double> g, double eta,
                  const HyperParams& hp);

// Constant-parameter RMSProp baseline. u starts at zero, so the denominator
// carries a 1e-8 guard; the guard exists only on this baseline.
OptState rmsprop_step(const OptState& state, std::span<const double> g, double beta, double eta);

OptState sgd_step(const OptState& state, std::span<const double> g, double eta);

double compute_step_size(const StepSizeRule& rule, const SpectralSummary& spectral,
                         std::size_t batch_size, double u_upper);

// The u_upper auto rule evaluated on a first-step gradient:
// u_upper = (10^-level * min_j { g_j^2 : g_j != 0 })^(-1/2), u_lower = u_upper/ratio.
std::pair<double, double> resolve_u_bounds(std::span<const double> first_gradient, int level,
                                           double ratio);

RunRecord run_optimizer(const LlspInstance& inst, const SamplingDistribution& dist,
                        const HyperParams& hp, Algo algo, const StopCriteria& stop, Rng& rng,
                        std::span<const double> x1 = {}, const StepObserver& observer = {});

}  // namespace lsqopt
