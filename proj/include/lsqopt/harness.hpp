#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsqopt/bounds.hpp"
#include "lsqopt/optimizer.hpp"
#include "lsqopt/problem.hpp"

namespace lsqopt {

// Adjusted level requested on the command line: a preset index (1..3, meaning
// {1,5,10} * lambda_d/lambda_1 of the instance at hand) or an explicit value.
struct EpsChoice {
  int preset = 1;       // used when value is unset
  std::optional<double> value;

  double resolve(const SpectralSummary& spectral) const;
  std::string label() const;
};

struct ExperimentConfig {
  ProblemSpec problem;
  std::string problem_label;     // summary label override; derived when empty
  std::string csv_path;          // non-empty: load this instead of generating
  std::size_t csv_target_column = 0;
  std::vector<std::string> instance_paths;  // non-empty: load instances from files
  Algo algo = Algo::sga_rmsprop;
  HyperParams hp;
  EpsChoice eps;
  std::size_t trials = 100;
  std::size_t instances = 3;
  StopCriteria stop;
  std::uint64_t seed = 0;
  std::string output_dir;
};

struct TrialOutcome {
  RunRecord record;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

struct SummaryRow {
  std::string problem;
  std::string algo;
  std::size_t batch_size = 0;
  std::string eps_label;
  std::optional<double> mean_iters;  // unset renders as "N"
  std::optional<double> std_iters;
  std::optional<double> mean_wall_ms;
  std::optional<double> std_wall_ms;
};

struct ExperimentResult {
  std::vector<LlspInstance> instances;
  std::vector<std::vector<TrialOutcome>> per_instance;  // [instance][trial]
  SummaryRow summary;
};

// Mean over the 5th..95th percentile: sort, drop floor(0.05 n) from each end.
// Throws domain_error below 20 values.
double trimmed_mean(std::span<const double> values);

double sample_std(std::span<const double> values);

// OLS slope of ln(values[i]) against i over [first, last]. Values in the
// window must be positive.
double fit_log_slope(std::span<const double> values, std::size_t first, std::size_t last);

// `trials` independent runs on one instance; trial t uses seed mix(seed, t).
// Individual failures are recorded, but >= 50% failures raise experiment_error.
std::vector<TrialOutcome> run_trials(const LlspInstance& inst, const SamplingDistribution& dist,
                                     const ExperimentConfig& config, double epsilon,
                                     std::uint64_t seed);

// Per instance: trimmed mean of iterations / wall time over converged trials
// (plain mean below 20 samples); across instances: mean and sample std of
// those per-instance values.
SummaryRow summarize(const std::vector<std::vector<TrialOutcome>>& per_instance,
                     const ExperimentConfig& config);

// Rounds the way the iteration tables are reported: mean to the nearest
// integer, std to the nearest tenth; "N" when unset.
std::string format_iteration_cell(const std::optional<double>& mean,
                                  const std::optional<double>& std_dev);

StepSizeRule default_step_rule(Algo algo, std::size_t batch_size,
                               std::size_t large_batch_threshold);

// (u_upper, u_lower) from the auto rule applied to one reference gradient
// sampled at the default initial point. Used where the bounds must be fixed
// ahead of a run (bound reports, batteries sharing one u across trials).
std::pair<double, double> reference_u_bounds(const LlspInstance& inst,
                                             const SamplingDistribution& dist,
                                             std::size_t batch_size, std::uint64_t seed,
                                             int level = 2, double ratio = 5.0);

std::string algo_name(Algo algo);
Algo parse_algo(const std::string& name);

// Full battery: generate/load instances, run trials, write CSVs when
// output_dir is set (trace_inst<i>.csv + summary.csv).
ExperimentResult run_experiment(const ExperimentConfig& config);

// CSV layer. Schemas:
//   trace:   trial,iter,rel_error[,beta]
//   summary: problem,algo,B,eps,mean_iters,std_iters,mean_wall_ms,std_wall_ms
//   bounds:  field,value
void write_trace_csv(const std::string& path, const std::vector<TrialOutcome>& outcomes,
                     bool with_beta);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);
void write_bounds_csv(const std::string& path, const BoundReport& report);

struct TraceRow {
  std::size_t trial = 0;
  std::size_t iter = 0;
  double rel_error = 0.0;
};
std::vector<TraceRow> read_trace_csv(const std::string& path);

// Accuracy-level triple per target level: number of instances that reach the
// level (in at least half of their trials), the mean over those instances of
// the per-instance average first-hit iteration, and the largest such average.
struct AccuracyCell {
  std::size_t successes = 0;
  std::optional<double> mean_first_hit;
  std::optional<double> max_first_hit;
};
std::vector<AccuracyCell> accuracy_levels(const std::vector<std::vector<TraceRow>>& per_instance,
                                          std::span<const double> levels);

}  // namespace lsqopt
