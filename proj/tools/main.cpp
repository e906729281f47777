// Command line front end: repair single problems, sweep hyperparameters,
// benchmark solve modes against each other and spot-check path derivatives.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <skm/skm.hpp>

namespace {

using Clock = std::chrono::steady_clock;

// Largest per-path deviation from the finite-difference probe that still
// counts as agreement; paths near a selection flip are excluded instead.
constexpr double kPathRelTol = 1e-5;

// Shortest decimal form that round-trips, so repeated runs emit identical
// bytes without dragging stream state around.
std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw std::invalid_argument("not a number: " + text);
  return value;
}

// Accepts either a comma list ("0.5,1.0,1.5") or an inclusive range
// ("0.2:1.8:0.2").
std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t pos = text.find(':'); pos != std::string::npos;
         pos = text.find(':', start)) {
      parts.push_back(text.substr(start, pos - start));
      start = pos + 1;
    }
    parts.push_back(text.substr(start));
    if (parts.size() != 3)
      throw std::invalid_argument("--values range must be lo:hi:step");
    const double lo = parse_double(parts[0]);
    const double hi = parse_double(parts[1]);
    const double step = parse_double(parts[2]);
    if (!(step > 0.0)) throw std::invalid_argument("--values range step must be positive");
    if (hi < lo) throw std::invalid_argument("--values range must have hi >= lo");
    const auto count = static_cast<std::int64_t>((hi - lo) / step + 1e-9);
    for (std::int64_t i = 0; i <= count; ++i)
      values.push_back(lo + static_cast<double>(i) * step);
  } else {
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t pos = std::min(text.find(',', start), text.size());
      const std::string item = text.substr(start, pos - start);
      if (!item.empty()) values.push_back(parse_double(item));
      start = pos + 1;
    }
  }
  if (values.empty()) throw std::invalid_argument("--values must not be empty");
  return values;
}

std::int64_t elapsed_ns(Clock::time_point t0, Clock::time_point t1) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw skm::IoError("cannot open " + path + " for writing");
  out << text;
  if (!out.good()) throw skm::IoError("error while writing " + path);
}

// ---------------------------------------------------------------------------
// Shared solver options
// ---------------------------------------------------------------------------

struct SolverFlags {
  double delta = 1.0;
  std::string beta = "auto";
  std::int64_t max_iters = 100000;
  double tolerance = 1e-6;
  std::int64_t check_every = 10;
  std::string variant = "basic";
  std::string sampling = "with";
  std::uint64_t seed = 0;
};

void add_solver_flags(CLI::App* cmd, SolverFlags* flags) {
  cmd->add_option("--delta", flags->delta, "Relaxation step length in (0,2)");
  cmd->add_option("--beta", flags->beta,
                  "Rows sampled per iteration: auto (= max(10, sqrt(p))) or a count");
  cmd->add_option("--max-iters", flags->max_iters, "Iteration cap");
  cmd->add_option("--tol,--tolerance", flags->tolerance, "Max violation at termination");
  cmd->add_option("--check-every", flags->check_every,
                  "Iterations between convergence scans");
  cmd->add_option("--variant", flags->variant, "basic | gskm | nskm | mskm")
      ->check(CLI::IsMember({"basic", "gskm", "nskm", "mskm"}));
  cmd->add_option("--sampling", flags->sampling,
                  "Row sampling: with | without replacement")
      ->check(CLI::IsMember({"with", "without"}));
  cmd->add_option("--seed", flags->seed, "Base RNG seed");
}

skm::Variant parse_variant(const std::string& name) {
  if (name == "basic") return skm::Variant::Basic;
  if (name == "gskm") return skm::Variant::Gskm;
  if (name == "nskm") return skm::Variant::Nskm;
  if (name == "mskm") return skm::Variant::Mskm;
  throw std::invalid_argument("unknown variant: " + name);
}

skm::SkmConfig to_config(const SolverFlags& flags) {
  skm::SkmConfig config;
  config.delta = flags.delta;
  if (flags.beta != "auto") {
    std::int64_t rows = 0;
    const char* first = flags.beta.data();
    const char* last = first + flags.beta.size();
    auto [ptr, ec] = std::from_chars(first, last, rows);
    if (ec != std::errc() || ptr != last)
      throw std::invalid_argument("beta must be 'auto' or an integer");
    config.beta = rows;
  }
  config.max_iters = flags.max_iters;
  config.tolerance = flags.tolerance;
  config.check_every = flags.check_every;
  config.variant = parse_variant(flags.variant);
  config.sampling = flags.sampling == "without" ? skm::Sampling::WithoutReplacement
                                                : skm::Sampling::WithReplacement;
  config.seed = flags.seed;
  return config;
}

// ---------------------------------------------------------------------------
// project
// ---------------------------------------------------------------------------

struct ProjectArgs {
  std::string input;
  std::string output;
  bool naive = false;
  bool trace = false;
  SolverFlags flags;
};

int run_project(const ProjectArgs& args) {
  const skm::ConstraintSystem system = skm::load_system(args.input);
  skm::SkmConfig config = to_config(args.flags);
  config.record_trace = args.trace;

  const skm::SolveResult result =
      args.naive ? skm::naive_solve(system, config) : skm::solve(system, config);

  if (!args.output.empty()) skm::save_result(result, args.output);

  std::cout << "termination: " << skm::to_string(result.termination) << "\n"
            << "iterations: " << result.iterations << "\n"
            << "max_ineq_violation: " << format_double(result.max_ineq_violation) << "\n"
            << "max_eq_violation: " << format_double(result.max_eq_violation) << "\n"
            << "distance_moved: " << format_double(result.distance_moved) << "\n";
  return result.termination == skm::Termination::IterationCap ? 2 : 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string param = "delta";
  std::string values_text;
  std::vector<std::int64_t> dims;
  int trials = 5;
  double violation_scale = 100.0;
  std::string output;
  int workers = 1;
  SolverFlags flags;
};

struct SweepInstance {
  skm::ConstraintSystem system;
  std::uint64_t solve_seed = 0;
  std::optional<double> oracle_distance;
};

int run_sweep(const SweepArgs& args) {
  std::vector<double> values = parse_values(args.values_text);
  std::sort(values.begin(), values.end());
  std::vector<std::int64_t> dims = args.dims;
  std::sort(dims.begin(), dims.end());

  if (dims.empty()) throw std::invalid_argument("--dims must not be empty");
  if (args.trials < 0) throw std::invalid_argument("--trials must be nonnegative");
  for (const auto dim : dims)
    if (dim < 2) throw std::invalid_argument("--dims entries must be at least 2");
  if (args.param == "beta") {
    for (const double v : values)
      if (v < 1 || v != static_cast<double>(static_cast<std::int64_t>(v)))
        throw std::invalid_argument("beta values must be positive integers");
  }

  // One instance and one start point per (dim, trial); every swept value
  // solves the same repair problem with the same solver seed.
  std::map<std::pair<std::int64_t, int>, SweepInstance> instances;
  for (const auto dim : dims) {
    for (int trial = 0; trial < args.trials; ++trial) {
      const std::uint64_t inst_seed =
          skm::derive_seed(args.flags.seed, static_cast<std::uint64_t>(dim),
                           static_cast<std::uint64_t>(trial));
      SweepInstance inst;
      inst.system = skm::gen_feasible_mixed(dim, dim / 2, dim / 2, inst_seed);
      inst.system.y0 = skm::gen_infeasible_start(inst.system, skm::derive_seed(inst_seed, 17),
                                                 args.violation_scale);
      inst.solve_seed = skm::derive_seed(inst_seed, 29);
      if (dim <= skm::kOracleMaxVars && dim / 2 <= skm::kOracleMaxIneq)
        inst.oracle_distance = skm::distance_to_feasible(inst.system, *inst.system.y0);
      instances.emplace(std::make_pair(dim, trial), std::move(inst));
    }
  }

  struct Job {
    double value;
    std::int64_t dim;
    int trial;
  };
  std::vector<Job> jobs;
  for (const double value : values)
    for (const auto dim : dims)
      for (int trial = 0; trial < args.trials; ++trial) jobs.push_back({value, dim, trial});

  std::vector<std::string> rows(jobs.size());
  std::vector<double> iters(jobs.size()), dists(jobs.size()), ratios(jobs.size(), -1.0);

  skm::parallel_for(
      static_cast<std::int64_t>(jobs.size()), skm::resolve_workers(args.workers),
      [&](std::int64_t j) {
        const Job& job = jobs[static_cast<std::size_t>(j)];
        const SweepInstance& inst = instances.at({job.dim, job.trial});

        skm::SkmConfig config = to_config(args.flags);
        config.seed = inst.solve_seed;
        if (args.param == "delta") config.delta = job.value;
        else config.beta = static_cast<skm::Index>(job.value);

        const auto t0 = Clock::now();
        const skm::SolveResult result = skm::solve(inst.system, config);
        const auto t1 = Clock::now();

        const double violation =
            std::max(result.max_ineq_violation, result.max_eq_violation);
        std::string row = format_double(job.value);
        row += ',' + std::to_string(job.dim);
        row += ',' + std::to_string(job.trial);
        row += ',' + std::to_string(result.iterations);
        row += ',' + std::to_string(elapsed_ns(t0, t1));
        row += ',' + format_double(violation);
        row += ',' + format_double(result.distance_moved);
        row += ',';
        if (inst.oracle_distance) row += format_double(*inst.oracle_distance);
        rows[static_cast<std::size_t>(j)] = std::move(row);

        iters[static_cast<std::size_t>(j)] = static_cast<double>(result.iterations);
        dists[static_cast<std::size_t>(j)] = result.distance_moved;
        if (inst.oracle_distance && *inst.oracle_distance > 0.0)
          ratios[static_cast<std::size_t>(j)] = result.distance_moved / *inst.oracle_distance;
      });

  std::string csv =
      "param_value,dim,trial,iterations,wall_time_ns,max_violation,distance_moved,"
      "oracle_distance\n";
  for (const auto& row : rows) csv += row + "\n";
  write_text_file(args.output, csv);

  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    std::vector<double> group_iters, group_ratios;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].value != values[vi]) continue;
      group_iters.push_back(iters[j]);
      if (ratios[j] >= 0.0) group_ratios.push_back(ratios[j]);
    }
    if (group_iters.empty()) continue;
    std::cout << args.param << "=" << format_double(values[vi])
              << ": median_iterations=" << format_double(median(group_iters));
    if (!group_ratios.empty())
      std::cout << " median_distance_over_oracle=" << format_double(median(group_ratios));
    std::cout << "\n";
  }
  std::cout << "wrote " << args.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::string> modes;
  std::vector<std::int64_t> dims;
  int trials = 5;
  double violation_scale = 100.0;
  std::string output;
  SolverFlags flags;
};

int run_bench(const BenchArgs& args) {
  if (args.modes.empty()) throw std::invalid_argument("--modes must not be empty");
  if (args.dims.empty()) throw std::invalid_argument("--dims must not be empty");
  if (args.trials < 1) throw std::invalid_argument("--trials must be at least 1");
  for (const auto dim : args.dims)
    if (dim < 2) throw std::invalid_argument("--dims entries must be at least 2");
  for (const auto& mode : args.modes)
    if (mode != "tskm" && mode != "naive" && mode != "gskm" && mode != "nskm" &&
        mode != "mskm")
      throw std::invalid_argument("unknown mode: " + mode);

  std::string csv =
      "mode,dim,trial,iterations,wall_time_ns,max_ineq_violation,max_eq_violation\n";
  std::map<std::string, std::vector<double>> iter_groups, time_groups;

  for (const auto& mode : args.modes) {
    for (const auto dim : args.dims) {
      for (int trial = 0; trial < args.trials; ++trial) {
        const std::uint64_t inst_seed =
            skm::derive_seed(args.flags.seed, static_cast<std::uint64_t>(dim),
                             static_cast<std::uint64_t>(trial));
        skm::ConstraintSystem system = skm::gen_feasible_mixed(dim, dim, dim / 2, inst_seed);
        system.y0 = skm::gen_infeasible_start(system, skm::derive_seed(inst_seed, 17),
                                              args.violation_scale);

        skm::SkmConfig config = to_config(args.flags);
        config.seed = skm::derive_seed(inst_seed, 29);
        if (mode == "gskm" || mode == "nskm" || mode == "mskm")
          config.variant = parse_variant(mode);

        const auto t0 = Clock::now();
        const skm::SolveResult result = mode == "naive" ? skm::naive_solve(system, config)
                                                        : skm::solve(system, config);
        const auto t1 = Clock::now();
        const std::int64_t ns = elapsed_ns(t0, t1);

        csv += mode;
        csv += ',' + std::to_string(dim);
        csv += ',' + std::to_string(trial);
        csv += ',' + std::to_string(result.iterations);
        csv += ',' + std::to_string(ns);
        csv += ',' + format_double(result.max_ineq_violation);
        csv += ',' + format_double(result.max_eq_violation);
        csv += '\n';

        iter_groups[mode].push_back(static_cast<double>(result.iterations));
        time_groups[mode].push_back(static_cast<double>(ns));
      }
    }
  }

  write_text_file(args.output, csv);

  const bool have_tskm = iter_groups.count("tskm") > 0;
  const double tskm_time = have_tskm ? median(time_groups["tskm"]) : 0.0;
  const double tskm_iters = have_tskm ? median(iter_groups["tskm"]) : 0.0;
  for (const auto& mode : args.modes) {
    std::cout << mode << ": median_iterations=" << format_double(median(iter_groups[mode]))
              << " median_wall_time_ns=" << format_double(median(time_groups[mode]));
    if (have_tskm && mode != "tskm" && tskm_time > 0.0 && tskm_iters > 0.0) {
      std::cout << " time_ratio_vs_tskm="
                << format_double(median(time_groups[mode]) / tskm_time)
                << " iter_ratio_vs_tskm="
                << format_double(median(iter_groups[mode]) / tskm_iters);
    }
    std::cout << "\n";
  }
  std::cout << "wrote " << args.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

struct GradcheckArgs {
  std::string input;
  int num_paths = 200;
  double eps = 1e-6;
  std::string output;
  SolverFlags flags;
};

int run_gradcheck(const GradcheckArgs& args) {
  if (!(args.eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (args.num_paths < 1) throw std::invalid_argument("--paths must be at least 1");

  const skm::ConstraintSystem system = skm::load_system(args.input);
  const skm::SkmConfig config = to_config(args.flags);
  if (config.variant != skm::Variant::Basic)
    throw std::invalid_argument("gradcheck supports only the basic variant");
  if (!system.y0) throw std::invalid_argument("gradcheck input must carry y0");

  const skm::Index n = system.num_vars();
  const skm::Vector probe = skm::Vector::Ones(n) / std::sqrt(static_cast<double>(n));

  const skm::GradientCheckReport report = skm::expected_gradient_check(
      system, config, args.num_paths, probe, args.eps);

  if (!args.output.empty()) {
    std::string csv = "path,rel_error,excluded\n";
    for (const auto& pc : report.per_path) {
      csv += std::to_string(pc.path);
      csv += ',';
      if (!pc.excluded) csv += format_double(pc.rel_error);
      csv += ',';
      csv += pc.excluded ? '1' : '0';
      csv += '\n';
    }
    write_text_file(args.output, csv);
  }

  double max_rel = 0.0;
  for (const auto& pc : report.per_path)
    if (!pc.excluded) max_rel = std::max(max_rel, pc.rel_error);

  const bool per_path_ok = report.paths_used > 0 && max_rel <= kPathRelTol;
  const bool expectation_ok = report.passed();
  std::cout << "paths_used: " << report.paths_used << "\n"
            << "paths_excluded: " << report.paths_excluded << "\n"
            << "max_rel_error: " << format_double(max_rel) << "\n"
            << "mean_abs_diff: "
            << format_double(report.diff_mean.size() > 0
                                 ? report.diff_mean.cwiseAbs().maxCoeff()
                                 : 0.0)
            << "\n"
            << "per_path_check: " << (per_path_ok ? "pass" : "fail") << "\n"
            << "expectation_check: " << (expectation_ok ? "pass" : "fail") << "\n";
  if (!args.output.empty()) std::cout << "wrote " << args.output << "\n";
  return per_path_ok && expectation_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repair points against mixed linear constraint systems"};
  app.require_subcommand(1);

  ProjectArgs project;
  CLI::App* cmd_project =
      app.add_subcommand("project", "Repair one problem file and write the result");
  cmd_project->add_option("--input", project.input, "Problem JSON file")->required();
  cmd_project->add_option("--output", project.output, "Result JSON file");
  cmd_project->add_flag("--naive", project.naive,
                        "Split equalities into inequality pairs instead of eliminating them");
  cmd_project->add_flag("--trace", project.trace, "Record the residual trace");
  add_solver_flags(cmd_project, &project.flags);

  SweepArgs sweep;
  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "Sweep delta or beta over generated instances");
  cmd_sweep->add_option("--param", sweep.param, "Swept parameter: delta | beta")
      ->check(CLI::IsMember({"delta", "beta"}));
  cmd_sweep->add_option("--values", sweep.values_text,
                        "Comma list (0.5,1.0) or inclusive range (lo:hi:step)")
      ->required();
  cmd_sweep->add_option("--dims", sweep.dims, "Comma separated dimensions (p = q = n/2)")
      ->required()
      ->delimiter(',');
  cmd_sweep->add_option("--trials", sweep.trials, "Instances per dimension");
  cmd_sweep->add_option("--violation-scale", sweep.violation_scale,
                        "Target start violation magnitude");
  cmd_sweep->add_option("--csv,--output", sweep.output, "CSV output file")->required();
  cmd_sweep->add_option("--workers", sweep.workers,
                        "Worker threads (0 = hardware, capped by SKM_THREADS)");
  add_solver_flags(cmd_sweep, &sweep.flags);

  BenchArgs bench;
  CLI::App* cmd_bench =
      app.add_subcommand("bench", "Compare solve modes on generated instances");
  cmd_bench->add_option("--modes", bench.modes,
                        "Comma separated: tskm | naive | gskm | nskm | mskm")
      ->required()
      ->delimiter(',');
  cmd_bench->add_option("--dims", bench.dims, "Comma separated dimensions (p = n, q = n/2)")
      ->required()
      ->delimiter(',');
  cmd_bench->add_option("--trials", bench.trials, "Instances per dimension");
  cmd_bench->add_option("--violation-scale", bench.violation_scale,
                        "Target start violation magnitude");
  cmd_bench->add_option("--csv,--output", bench.output, "CSV output file")->required();
  add_solver_flags(cmd_bench, &bench.flags);

  GradcheckArgs gradcheck;
  CLI::App* cmd_gradcheck = app.add_subcommand(
      "gradcheck", "Compare analytic path derivatives against finite differences");
  cmd_gradcheck->add_option("--input", gradcheck.input, "Problem JSON file")->required();
  cmd_gradcheck->add_option("--paths,--num-paths", gradcheck.num_paths,
                            "Sampling paths to draw");
  cmd_gradcheck->add_option("--eps", gradcheck.eps, "Finite difference step");
  cmd_gradcheck->add_option("--csv,--output", gradcheck.output,
                            "Per-path CSV output file");
  add_solver_flags(cmd_gradcheck, &gradcheck.flags);
  // Loose solve tolerance by default: converging to a tight tolerance leaves
  // final steps with residuals inside the exclusion band, which would void
  // every path.
  gradcheck.flags.tolerance = 1e-2;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (cmd_project->parsed()) return run_project(project);
    if (cmd_sweep->parsed()) return run_sweep(sweep);
    if (cmd_bench->parsed()) return run_bench(bench);
    if (cmd_gradcheck->parsed()) return run_gradcheck(gradcheck);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
