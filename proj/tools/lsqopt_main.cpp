#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lsqopt/bounds.hpp"
#include "lsqopt/errors.hpp"
#include "lsqopt/harness.hpp"

namespace {

using namespace lsqopt;

DecayKind parse_decay(const std::string& s) {
  if (s == "ed" || s == "ED") return DecayKind::exponential;
  if (s == "ad" || s == "AD") return DecayKind::algebraic;
  throw config_error("unknown decay kind: " + s + " (expected ed or ad)");
}

EpsChoice parse_eps(const std::string& s) {
  EpsChoice eps;
  if (s.rfind("preset", 0) == 0) {
    eps.preset = std::stoi(s.substr(6));
    return eps;
  }
  eps.value = std::stod(s);
  return eps;
}

StepSizeRule::Kind parse_eta_rule(const std::string& s) {
  if (s == "thm") return StepSizeRule::Kind::thm_consistent;
  if (s == "sga-small") return StepSizeRule::Kind::sga_small_batch;
  if (s == "sga-large") return StepSizeRule::Kind::sga_large_batch;
  if (s == "sgd-small") return StepSizeRule::Kind::sgd_small_batch;
  if (s == "sgd-large") return StepSizeRule::Kind::sgd_large_batch;
  if (s == "fixed") return StepSizeRule::Kind::fixed;
  throw config_error("unknown step-size rule: " + s);
}

// Shared experiment flags for run/sweep.
struct RunFlags {
  std::vector<std::string> instance_files;
  std::string csv_path;
  std::size_t csv_target = 0;
  std::string decay = "ed";
  double kappa = 20.0;
  double q = 0.7;
  double lambda_d = 1.0;
  std::size_t n = 10000;
  std::size_t d = 50;
  bool inconsistent = false;
  double tau = 1e-3;
  std::size_t instances = 3;

  std::string algo = "sga";
  std::size_t batch = 1000;
  std::string eps = "preset1";
  std::string u_upper = "auto";
  double u_lower = 0.0;
  int u_level = 2;
  double u_ratio = 5.0;
  double beta = 0.99;
  std::string eta_rule = "auto";
  double eta = 0.0;
  std::size_t trials = 100;
  double tol = 1e-4;
  std::size_t max_iters = 100000;
  std::size_t stride = 1;
  bool record_beta = false;
  std::uint64_t seed = 0;
  std::string out_dir;
};

void add_problem_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--instance", f.instance_files, "instance file(s) produced by generate");
  cmd->add_option("--csv", f.csv_path, "CSV dataset (standardized on load)");
  cmd->add_option("--csv-target", f.csv_target, "target column index in the CSV (0-based)");
  cmd->add_option("--decay", f.decay, "spectrum decay: ed or ad");
  cmd->add_option("--kappa", f.kappa, "condition number of A^T A");
  cmd->add_option("--q", f.q, "decay rate");
  cmd->add_option("--lambda-d", f.lambda_d, "smallest eigenvalue of A^T A");
  cmd->add_option("--n", f.n, "rows");
  cmd->add_option("--d", f.d, "columns");
  cmd->add_flag("--inconsistent", f.inconsistent, "perturb b off the range of A");
  cmd->add_option("--tau", f.tau, "perturbation sphere radius (inconsistent)");
  cmd->add_option("--instances", f.instances, "number of generated instances");
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--algo", f.algo, "sga | rmsprop | sgd | rmsp2sgd");
  cmd->add_option("--B", f.batch, "batch size");
  cmd->add_option("--eps", f.eps, "adjusted level: preset1|preset2|preset3 or a number");
  cmd->add_option("--u-upper", f.u_upper, "u upper bound: auto or a number");
  cmd->add_option("--u-lower", f.u_lower, "u lower bound (with explicit --u-upper)");
  cmd->add_option("--u-level", f.u_level, "auto rule level i in 10^-i");
  cmd->add_option("--u-ratio", f.u_ratio, "u_upper / u_lower for the auto rule");
  cmd->add_option("--beta", f.beta, "fixed discounting factor (rmsprop baseline)");
  cmd->add_option("--eta-rule", f.eta_rule,
                  "auto | thm | sga-small | sga-large | sgd-small | sgd-large | fixed");
  cmd->add_option("--eta", f.eta, "fixed step size (with --eta-rule fixed or rmsprop)");
  cmd->add_option("--trials", f.trials, "runs per instance");
  cmd->add_option("--tol", f.tol, "convergence tolerance on the relative error");
  cmd->add_option("--max-iters", f.max_iters, "iteration cap");
  cmd->add_option("--stride", f.stride, "record every k-th trace entry");
  cmd->add_flag("--record-beta", f.record_beta, "store the beta sequence in trace CSVs");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out_dir, "output directory for CSVs");
}

ExperimentConfig build_config(const RunFlags& f) {
  ExperimentConfig cfg;
  cfg.instance_paths = f.instance_files;
  cfg.csv_path = f.csv_path;
  cfg.csv_target_column = f.csv_target;
  cfg.problem.decay = parse_decay(f.decay);
  cfg.problem.kappa = f.kappa;
  cfg.problem.q = f.q;
  cfg.problem.lambda_d = f.lambda_d;
  cfg.problem.n = f.n;
  cfg.problem.d = f.d;
  cfg.problem.consistent = !f.inconsistent;
  cfg.problem.noise_radius = f.tau;
  cfg.instances = f.instances;

  cfg.algo = parse_algo(f.algo);
  cfg.eps = parse_eps(f.eps);
  cfg.trials = f.trials;
  cfg.seed = f.seed;
  cfg.output_dir = f.out_dir;
  cfg.stop.tol = f.tol;
  cfg.stop.max_iters = f.max_iters;
  cfg.stop.trace_stride = f.stride;
  cfg.stop.record_beta = f.record_beta;

  cfg.hp.batch_size = f.batch;
  if (f.u_upper == "auto") {
    cfg.hp.auto_u = true;
    cfg.hp.auto_u_level = f.u_level;
    cfg.hp.auto_u_ratio = f.u_ratio;
  } else {
    cfg.hp.auto_u = false;
    cfg.hp.u_upper = std::stod(f.u_upper);
    cfg.hp.u_lower = f.u_lower > 0.0 ? f.u_lower : cfg.hp.u_upper / f.u_ratio;
  }
  cfg.hp.beta_policy = cfg.algo == Algo::rmsprop ? BetaPolicy::fixed : BetaPolicy::midpoint;
  cfg.hp.fixed_beta = f.beta;
  if (f.eta_rule == "auto") {
    if (cfg.algo == Algo::rmsprop) {
      cfg.hp.eta_rule = StepSizeRule::fixed_step(f.eta);
    } else {
      cfg.hp.eta_rule = default_step_rule(cfg.algo, f.batch, cfg.hp.large_batch_threshold);
    }
  } else {
    cfg.hp.eta_rule.kind = parse_eta_rule(f.eta_rule);
    cfg.hp.eta_rule.fixed_eta = f.eta;
  }
  return cfg;
}

void print_summary(const SummaryRow& row) {
  std::printf("%-18s %-9s B=%-6zu eps=%-10s iters %s", row.problem.c_str(), row.algo.c_str(),
              row.batch_size, row.eps_label.c_str(),
              format_iteration_cell(row.mean_iters, row.std_iters).c_str());
  if (row.mean_wall_ms) {
    std::printf("  wall (%.3f, %.3f) ms", *row.mean_wall_ms, *row.std_wall_ms);
  }
  std::printf("\n");
}

int cmd_generate(const RunFlags& f, const std::string& out) {
  ProblemSpec spec;
  spec.decay = parse_decay(f.decay);
  spec.kappa = f.kappa;
  spec.q = f.q;
  spec.lambda_d = f.lambda_d;
  spec.n = f.n;
  spec.d = f.d;
  spec.consistent = !f.inconsistent;
  spec.noise_radius = f.tau;
  spec.seed = f.seed;
  const auto inst = assemble_instance(spec);
  save_instance(inst, out);
  std::printf("wrote %s: %s n=%zu d=%zu %s\n", out.c_str(), spec.label().c_str(), inst.n(),
              inst.d(), inst.is_consistent ? "consistent" : "inconsistent");
  return 0;
}

int cmd_run(const RunFlags& flags) {
  const auto cfg = build_config(flags);
  const auto result = run_experiment(cfg);
  print_summary(result.summary);
  if (!cfg.output_dir.empty()) {
    std::printf("outputs in %s\n", cfg.output_dir.c_str());
  }
  return 0;
}

int cmd_sweep(const RunFlags& flags, const std::vector<std::string>& eps_grid,
              const std::vector<std::size_t>& b_grid, const std::vector<int>& u_grid) {
  ExperimentConfig base = build_config(flags);

  // fix the instances once so every grid point sees the same problems
  std::vector<std::string> instance_files = base.instance_paths;
  std::string sweep_label;
  if (instance_files.empty() && base.csv_path.empty()) {
    sweep_label = base.problem.label();
    std::filesystem::create_directories(base.output_dir.empty() ? "." : base.output_dir);
    for (std::size_t i = 0; i < base.instances; ++i) {
      ProblemSpec spec = base.problem;
      spec.seed = mix_seed(base.seed, 0xA0000000ULL + i);
      const auto inst = assemble_instance(spec);
      const std::string path = (base.output_dir.empty() ? std::string(".") : base.output_dir) +
                               "/sweep_inst" + std::to_string(i) + ".bin";
      save_instance(inst, path);
      instance_files.push_back(path);
    }
  }

  const std::vector<std::string> eps_points =
      eps_grid.empty() ? std::vector<std::string>{flags.eps} : eps_grid;
  const std::vector<std::size_t> b_points =
      b_grid.empty() ? std::vector<std::size_t>{flags.batch} : b_grid;
  const std::vector<int> u_points = u_grid.empty() ? std::vector<int>{flags.u_level} : u_grid;

  for (const int u_level : u_points) {
    std::vector<SummaryRow> rows;
    for (const std::size_t b : b_points) {
      for (const auto& eps : eps_points) {
        RunFlags point = flags;
        point.batch = b;
        point.eps = eps;
        point.u_level = u_level;
        point.out_dir.clear();  // per-point traces are not kept during sweeps
        ExperimentConfig cfg = build_config(point);
        cfg.instance_paths = instance_files;
        cfg.problem_label = sweep_label;
        auto result = run_experiment(cfg);
        print_summary(result.summary);
        rows.push_back(result.summary);
      }
    }
    if (!flags.out_dir.empty()) {
      std::filesystem::create_directories(flags.out_dir);
      const std::string suffix = u_points.size() > 1 ? "_u" + std::to_string(u_level) : "";
      write_summary_csv(flags.out_dir + "/summary" + suffix + ".csv", rows);
    }
  }
  return 0;
}

int cmd_bounds(const std::string& instance_file, std::size_t batch, const std::string& u_upper,
               double u_lower, int u_level, double u_ratio, std::uint64_t seed,
               const std::string& out) {
  const auto inst = load_instance(instance_file);
  const auto dist = squared_norm_probs(inst.spectral);
  double upper, lower;
  if (u_upper == "auto") {
    std::tie(upper, lower) = reference_u_bounds(inst, dist, batch, seed, u_level, u_ratio);
  } else {
    upper = std::stod(u_upper);
    lower = u_lower > 0.0 ? u_lower : upper / u_ratio;
  }
  const auto report = make_bound_report(inst, dist, batch, lower, upper);
  std::printf("%-18s %.17g\n", "u_upper", upper);
  std::printf("%-18s %.17g\n", "u_lower", lower);
  std::printf("%-18s %.17g\n", "sigma", report.sigma);
  std::printf("%-18s %.17g\n", "weighted_max", report.weighted_max);
  std::printf("%-18s %.17g\n", "eps_max_theorem", report.eps_max_theorem);
  std::printf("%-18s %.17g\n", "eps_max_corollary", report.eps_max_corollary);
  std::printf("%-18s %llu\n", "batch_min", static_cast<unsigned long long>(report.batch_min));
  std::printf("%-18s %.17g\n", "rate_bound", report.rate_bound);
  std::printf("%-18s %.17g\n", "h_bound", report.h_bound);
  std::printf("%-18s %.17g\n", "confusion_radius", report.confusion_radius);
  if (report.eps_max_theorem <= 0.0) {
    std::printf("note: no admissible eps at this batch size; increase B\n");
  }
  if (!out.empty()) write_bounds_csv(out, report);
  return 0;
}

int cmd_report(const std::string& dir, const std::string& levels_arg) {
  std::vector<double> levels;
  std::string token;
  for (std::istringstream ss(levels_arg); std::getline(ss, token, ',');) {
    levels.push_back(std::stod(token));
  }
  if (levels.empty()) throw config_error("--levels expects a comma-separated list");

  std::vector<std::vector<TraceRow>> per_instance;
  for (std::size_t i = 0;; ++i) {
    const std::string path = dir + "/trace_inst" + std::to_string(i) + ".csv";
    if (!std::filesystem::exists(path)) break;
    per_instance.push_back(read_trace_csv(path));
  }
  if (per_instance.empty()) throw config_error("no trace_inst*.csv files under " + dir);

  const auto cells = accuracy_levels(per_instance, levels);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& c = cells[i];
    if (c.mean_first_hit) {
      std::printf("%.6g: (%zu, %lld, %lld)\n", levels[i], c.successes,
                  std::llround(*c.mean_first_hit), std::llround(*c.max_first_hit));
    } else {
      std::printf("%.6g: (0, N, N)\n", levels[i]);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic least-squares optimization experiments"};
  app.require_subcommand(1);

  RunFlags flags;
  std::string generate_out = "instance.bin";
  std::vector<std::string> eps_grid;
  std::vector<std::size_t> b_grid;
  std::vector<int> u_grid;
  std::string bounds_instance, bounds_u_upper = "auto", bounds_out;
  std::size_t bounds_batch = 1000;
  double bounds_u_lower = 0.0, bounds_u_ratio = 5.0;
  int bounds_u_level = 2;
  std::uint64_t bounds_seed = 0;
  std::string report_dir, report_levels = "0.1,0.01,0.001,0.0001";

  auto* generate = app.add_subcommand("generate", "write a synthetic instance file");
  add_problem_flags(generate, flags);
  generate->add_option("--seed", flags.seed, "generation seed");
  generate->add_option("--out", generate_out, "output instance file");
  generate->set_config("--config");

  auto* run = app.add_subcommand("run", "run one experiment battery");
  add_problem_flags(run, flags);
  add_run_flags(run, flags);
  run->set_config("--config");

  auto* sweep = app.add_subcommand("sweep", "grid over eps / B / u presets");
  add_problem_flags(sweep, flags);
  add_run_flags(sweep, flags);
  sweep->add_option("--eps-grid", eps_grid, "epsilon grid points")->delimiter(',');
  sweep->add_option("--B-grid", b_grid, "batch size grid points")->delimiter(',');
  sweep->add_option("--u-grid", u_grid, "auto-u level grid points")->delimiter(',');
  sweep->set_config("--config");

  auto* bounds = app.add_subcommand("bounds", "print the bound report for an instance");
  bounds->add_option("--instance", bounds_instance, "instance file")->required();
  bounds->add_option("--B", bounds_batch, "batch size");
  bounds->add_option("--u-upper", bounds_u_upper, "u upper bound: auto or a number");
  bounds->add_option("--u-lower", bounds_u_lower, "u lower bound");
  bounds->add_option("--u-level", bounds_u_level, "auto rule level");
  bounds->add_option("--u-ratio", bounds_u_ratio, "u_upper / u_lower");
  bounds->add_option("--seed", bounds_seed, "seed for the reference gradient");
  bounds->add_option("--out", bounds_out, "also write the report as CSV");
  bounds->set_config("--config");

  auto* report = app.add_subcommand("report", "accuracy-level triples from saved traces");
  report->add_option("--dir", report_dir, "directory with trace_inst*.csv")->required();
  report->add_option("--levels", report_levels, "comma-separated accuracy levels");
  report->set_config("--config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "error: " << e.get_name() << ": " << e.what() << "\n";
    return 1;
  }

  try {
    if (generate->parsed()) return cmd_generate(flags, generate_out);
    if (run->parsed()) return cmd_run(flags);
    if (sweep->parsed()) return cmd_sweep(flags, eps_grid, b_grid, u_grid);
    if (bounds->parsed()) {
      return cmd_bounds(bounds_instance, bounds_batch, bounds_u_upper, bounds_u_lower,
                        bounds_u_level, bounds_u_ratio, bounds_seed, bounds_out);
    }
    if (report->parsed()) return cmd_report(report_dir, report_levels);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
