#include "lsqopt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "lsqopt/errors.hpp"
#include "lsqopt/parallel.hpp"
#include "lsqopt/rng.hpp"

namespace lsqopt {

namespace {

constexpr std::uint64_t kInstanceStreamTag = 0xA0000000ULL;
constexpr std::uint64_t kTrialStreamTag = 0xB0000000ULL;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_wall(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// RFC-4180 quoting for label fields (problem names contain commas)
std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (const char ch : field) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  quoted += '"';
  return quoted;
}

}  // namespace

double EpsChoice::resolve(const SpectralSummary& spectral) const {
  if (value) {
    if (!(*value > 0.0)) throw config_error("epsilon must be > 0");
    return *value;
  }
  const double base = spectral.lambda_min / spectral.lambda_max;
  switch (preset) {
    case 1:
      return base;
    case 2:
      return 5.0 * base;
    case 3:
      return 10.0 * base;
    default:
      throw config_error("unknown epsilon preset " + std::to_string(preset));
  }
}

std::string EpsChoice::label() const {
  if (value) return fmt_double(*value);
  return "preset" + std::to_string(preset);
}

double trimmed_mean(std::span<const double> values) {
  if (values.size() < 20) {
    throw domain_error("trimmed_mean: needs at least 20 values, got " +
                       std::to_string(values.size()));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t drop = sorted.size() / 20;  // floor(0.05 n)
  double sum = 0.0;
  const std::size_t kept = sorted.size() - 2 * drop;
  for (std::size_t i = drop; i < sorted.size() - drop; ++i) sum += sorted[i];
  return sum / static_cast<double>(kept);
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double fit_log_slope(std::span<const double> values, std::size_t first, std::size_t last) {
  if (first > last || last >= values.size()) throw config_error("fit_log_slope: bad window");
  const std::size_t n = last - first + 1;
  if (n < 2) throw config_error("fit_log_slope: window needs at least 2 points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    if (!(values[i] > 0.0)) {
      throw domain_error("fit_log_slope: non-positive value at index " + std::to_string(i));
    }
    const double x = static_cast<double>(i);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nn = static_cast<double>(n);
  return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

std::vector<TrialOutcome> run_trials(const LlspInstance& inst, const SamplingDistribution& dist,
                                     const ExperimentConfig& config, double epsilon,
                                     std::uint64_t seed) {
  if (config.trials < 1) throw config_error("trials must be >= 1");
  HyperParams hp = config.hp;
  hp.epsilon = epsilon;

  std::vector<TrialOutcome> outcomes(config.trials);
  parallel_for(config.trials, [&](std::size_t t) {
    Rng rng(mix_seed(seed, t));
    try {
      outcomes[t].record = run_optimizer(inst, dist, hp, config.algo, config.stop, rng);
    } catch (const std::exception& e) {
      outcomes[t].error = e.what();
    }
  });

  std::size_t failures = 0;
  std::string first_error;
  for (const auto& o : outcomes) {
    if (o.ok()) continue;
    ++failures;
    if (first_error.empty()) first_error = o.error;
  }
  if (2 * failures >= config.trials) {
    throw experiment_error("run_trials: " + std::to_string(failures) + " of " +
                           std::to_string(config.trials) + " trials failed; first error: " +
                           first_error);
  }
  return outcomes;
}

namespace {

// Trimmed mean when the sample is large enough, plain mean otherwise.
std::optional<double> robust_mean(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  if (values.size() >= 20) return trimmed_mean(values);
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

SummaryRow summarize(const std::vector<std::vector<TrialOutcome>>& per_instance,
                     const ExperimentConfig& config) {
  if (per_instance.empty()) throw config_error("summarize: no instances");
  std::vector<double> iter_means, wall_means;
  for (const auto& outcomes : per_instance) {
    std::vector<double> iters, walls;
    for (const auto& o : outcomes) {
      if (!o.ok() || !o.record.iters_to_converge) continue;
      iters.push_back(static_cast<double>(*o.record.iters_to_converge));
      walls.push_back(o.record.wall_ms);
    }
    if (const auto m = robust_mean(iters)) {
      iter_means.push_back(*m);
      wall_means.push_back(*robust_mean(walls));
    }
  }

  SummaryRow row;
  if (!config.problem_label.empty()) {
    row.problem = config.problem_label;
  } else if (!config.csv_path.empty()) {
    row.problem = config.csv_path;
  } else if (!config.instance_paths.empty()) {
    row.problem = config.instance_paths.front();
  } else {
    row.problem = config.problem.label();
  }
  row.algo = algo_name(config.algo);
  row.batch_size = config.hp.batch_size;
  row.eps_label = config.eps.label();
  if (!iter_means.empty()) {
    double im = 0.0, wm = 0.0;
    for (const double v : iter_means) im += v;
    for (const double v : wall_means) wm += v;
    row.mean_iters = im / static_cast<double>(iter_means.size());
    row.std_iters = sample_std(iter_means);
    row.mean_wall_ms = wm / static_cast<double>(wall_means.size());
    row.std_wall_ms = sample_std(wall_means);
  }
  return row;
}

std::string format_iteration_cell(const std::optional<double>& mean,
                                  const std::optional<double>& std_dev) {
  if (!mean) return "(0, N, N)";
  char buf[64];
  std::snprintf(buf, sizeof buf, "(%lld, %.1f)", std::llround(*mean), std_dev.value_or(0.0));
  return buf;
}

StepSizeRule default_step_rule(Algo algo, std::size_t batch_size,
                               std::size_t large_batch_threshold) {
  const bool large = batch_size >= large_batch_threshold;
  switch (algo) {
    case Algo::sga_rmsprop:
    case Algo::rmsp2sgd:
      return {large ? StepSizeRule::Kind::sga_large_batch : StepSizeRule::Kind::sga_small_batch,
              0.0};
    case Algo::sgd:
      return {large ? StepSizeRule::Kind::sgd_large_batch : StepSizeRule::Kind::sgd_small_batch,
              0.0};
    case Algo::rmsprop:
      throw config_error("baseline RMSProp has no default step rule; pass a fixed step size");
  }
  throw config_error("unknown algorithm");
}

std::pair<double, double> reference_u_bounds(const LlspInstance& inst,
                                             const SamplingDistribution& dist,
                                             std::size_t batch_size, std::uint64_t seed,
                                             int level, double ratio) {
  Rng rng(seed);
  const std::vector<double> x1(inst.d(), 2.0);
  const Batch batch = draw_batch(dist, batch_size, rng);
  const auto g = minibatch_gradient(inst, x1, batch, dist);
  return resolve_u_bounds(g, level, ratio);
}

std::string algo_name(Algo algo) {
  switch (algo) {
    case Algo::sga_rmsprop:
      return "sga";
    case Algo::rmsprop:
      return "rmsprop";
    case Algo::sgd:
      return "sgd";
    case Algo::rmsp2sgd:
      return "rmsp2sgd";
  }
  return "?";
}

Algo parse_algo(const std::string& name) {
  if (name == "sga" || name == "sga-rmsprop") return Algo::sga_rmsprop;
  if (name == "rmsprop") return Algo::rmsprop;
  if (name == "sgd") return Algo::sgd;
  if (name == "rmsp2sgd") return Algo::rmsp2sgd;
  throw config_error("unknown algorithm: " + name);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;

  if (!config.csv_path.empty()) {
    result.instances.push_back(load_csv_standardized(config.csv_path, config.csv_target_column));
  } else if (!config.instance_paths.empty()) {
    for (const auto& path : config.instance_paths) {
      result.instances.push_back(load_instance(path));
    }
  } else {
    for (std::size_t i = 0; i < config.instances; ++i) {
      ProblemSpec spec = config.problem;
      spec.seed = mix_seed(config.seed, kInstanceStreamTag + i);
      result.instances.push_back(assemble_instance(spec));
    }
  }

  for (std::size_t i = 0; i < result.instances.size(); ++i) {
    const auto& inst = result.instances[i];
    const auto dist = squared_norm_probs(inst.spectral);
    const double epsilon = config.eps.resolve(inst.spectral);
    const std::uint64_t battery_seed = mix_seed(config.seed, kTrialStreamTag + i);
    result.per_instance.push_back(run_trials(inst, dist, config, epsilon, battery_seed));
  }
  result.summary = summarize(result.per_instance, config);

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    for (std::size_t i = 0; i < result.per_instance.size(); ++i) {
      write_trace_csv(config.output_dir + "/trace_inst" + std::to_string(i) + ".csv",
                      result.per_instance[i], config.stop.record_beta);
    }
    write_summary_csv(config.output_dir + "/summary.csv", {result.summary});
  }
  return result;
}

void write_trace_csv(const std::string& path, const std::vector<TrialOutcome>& outcomes,
                     bool with_beta) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open for writing: " + path);
  out << (with_beta ? "trial,iter,rel_error,beta\n" : "trial,iter,rel_error\n");
  for (std::size_t t = 0; t < outcomes.size(); ++t) {
    const auto& o = outcomes[t];
    if (!o.ok()) continue;
    const auto& rec = o.record;
    for (std::size_t i = 0; i < rec.trace.size(); ++i) {
      out << t << ',' << rec.trace_iters[i] << ',' << fmt_double(rec.trace[i]);
      if (with_beta) {
        const std::size_t iter = rec.trace_iters[i];
        // beta_trace holds one entry per pre-switch iteration, starting at 1
        if (iter >= 1 && iter <= rec.beta_trace.size()) {
          out << ',' << fmt_double(rec.beta_trace[iter - 1]);
        } else {
          out << ',';
        }
      }
      out << '\n';
    }
  }
  if (!out) throw parse_error("write failed: " + path);
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open for writing: " + path);
  out << "problem,algo,B,eps,mean_iters,std_iters,mean_wall_ms,std_wall_ms\n";
  for (const auto& r : rows) {
    out << csv_escape(r.problem) << ',' << csv_escape(r.algo) << ',' << r.batch_size << ','
        << csv_escape(r.eps_label) << ',';
    if (r.mean_iters) {
      out << fmt_double(*r.mean_iters) << ',' << fmt_double(*r.std_iters) << ','
          << fmt_wall(*r.mean_wall_ms) << ',' << fmt_wall(*r.std_wall_ms);
    } else {
      out << "N,N,N,N";
    }
    out << '\n';
  }
  if (!out) throw parse_error("write failed: " + path);
}

void write_bounds_csv(const std::string& path, const BoundReport& report) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open for writing: " + path);
  out << "field,value\n";
  out << "sigma," << fmt_double(report.sigma) << '\n';
  out << "weighted_max," << fmt_double(report.weighted_max) << '\n';
  out << "eps_max_theorem," << fmt_double(report.eps_max_theorem) << '\n';
  out << "eps_max_corollary," << fmt_double(report.eps_max_corollary) << '\n';
  out << "batch_min," << report.batch_min << '\n';
  out << "rate_bound," << fmt_double(report.rate_bound) << '\n';
  out << "h_bound," << fmt_double(report.h_bound) << '\n';
  out << "confusion_radius," << fmt_double(report.confusion_radius) << '\n';
  if (!out) throw parse_error("write failed: " + path);
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open trace CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw parse_error("empty trace CSV: " + path);
  std::vector<TraceRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    TraceRow row;
    char extra[8];
    double beta_ignored;
    const int fields = std::sscanf(line.c_str(), "%zu,%zu,%lf,%lf%1s", &row.trial, &row.iter,
                                   &row.rel_error, &beta_ignored, extra);
    if (fields < 3) {
      throw parse_error("bad trace CSV row at line " + std::to_string(lineno) + " in " + path);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<AccuracyCell> accuracy_levels(const std::vector<std::vector<TraceRow>>& per_instance,
                                          std::span<const double> levels) {
  std::vector<AccuracyCell> cells(levels.size());
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const double level = levels[li];
    std::vector<double> instance_means;
    for (const auto& rows : per_instance) {
      // first-hit iteration per trial
      std::map<std::size_t, std::size_t> first_hit;
      std::map<std::size_t, bool> seen;
      for (const auto& r : rows) {
        seen[r.trial] = true;
        if (r.rel_error <= level && !first_hit.count(r.trial)) first_hit[r.trial] = r.iter;
      }
      if (seen.empty()) continue;
      if (2 * first_hit.size() < seen.size()) continue;  // instance misses the level
      std::vector<double> hits;
      hits.reserve(first_hit.size());
      for (const auto& [trial, iter] : first_hit) hits.push_back(static_cast<double>(iter));
      if (const auto m = robust_mean(hits)) instance_means.push_back(*m);
    }
    cells[li].successes = instance_means.size();
    if (!instance_means.empty()) {
      double sum = 0.0, mx = 0.0;
      for (const double v : instance_means) {
        sum += v;
        mx = std::max(mx, v);
      }
      cells[li].mean_first_hit = sum / static_cast<double>(instance_means.size());
      cells[li].max_first_hit = mx;
    }
  }
  return cells;
}

}  // namespace lsqopt
