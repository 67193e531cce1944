#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tfbo/errors.hpp"
#include "tfbo/experiment.hpp"
#include "tfbo/hypergrad.hpp"
#include "tfbo/trace_io.hpp"

namespace tfbo::cli {
namespace {

// Spec keys that only shape the problem; check-grad accepts these alone.
constexpr const char* kProblemKeys[] = {
    "problem", "seed",  "dim-x", "dim-y",    "condition",  "offset-scale", "scale",
    "train",   "val",   "n-train", "n-val",  "features",   "corruption",   "C",
};

bool is_problem_key(const std::string& key) {
  return std::find(std::begin(kProblemKeys), std::end(kProblemKeys), key) !=
         std::end(kProblemKeys);
}

// Spec keys exposed as flags by each subcommand.
std::vector<std::string> spec_flags_for(const std::string& sub) {
  std::vector<std::string> keys;
  for (const SpecKey& k : spec_keys()) {
    const std::string name = k.name;
    if (sub == "check-grad" && !is_problem_key(name)) continue;
    if (sub == "sweep" && name == "out") continue;
    if (sub == "compare" && (name == "out" || name == "algo")) continue;
    keys.push_back(name);
  }
  return keys;
}

// Sweep uses --init for its value list, so the init policy is renamed there.
std::string flag_name(const std::string& sub, const std::string& key) {
  return sub == "sweep" && key == "init" ? "init-policy" : key;
}

const SpecKey& find_key(const std::string& name) {
  for (const SpecKey& k : spec_keys()) {
    if (name == k.name) return k;
  }
  fail(ErrorKind::kConfigError, "unknown key '" + name + "'");
}

struct Subcommand {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string spec_path;
  CLI::Option* spec_option = nullptr;

  KeyValues given() const {
    KeyValues kv;
    for (const auto& [name, opt] : options) {
      if (opt->count() > 0) kv[name] = values.at(name);
    }
    return kv;
  }
};

void add_spec_flags(Subcommand& sub, const std::string& name, bool with_spec_file) {
  for (const std::string& key : spec_flags_for(name)) {
    const SpecKey& k = find_key(key);
    sub.values[key];
    sub.options[key] = sub.app->add_option("--" + flag_name(name, key), sub.values[key], k.help)
                           ->type_name(k.value_hint);
  }
  if (with_spec_file) {
    sub.spec_option = sub.app->add_option("--spec", sub.spec_path,
                                          "key = value spec file; flags may repeat a key only "
                                          "with the same value")
                          ->type_name("<path>");
  }
}

// A key given both as a flag and in the spec file must agree.
KeyValues merged_keys(const Subcommand& sub) {
  KeyValues kv = sub.given();
  if (sub.spec_option == nullptr || sub.spec_option->count() == 0) return kv;
  const KeyValues file = load_spec_file(sub.spec_path);
  for (const auto& [key, value] : file) {
    const auto it = kv.find(key);
    if (it != kv.end() && it->second != value) {
      fail(ErrorKind::kConfigError, "--" + key + " " + it->second +
                                        " conflicts with the spec file value " + value);
    }
    kv[key] = value;
  }
  return kv;
}

void print(std::ostream& out, const std::string& key, double value) {
  out << key << '=' << format_real(value) << '\n';
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfigError:
    case ErrorKind::kInvalidArgument:
      return kExitUsage;
    case ErrorKind::kIoError:
    case ErrorKind::kParseError:
    case ErrorKind::kEmptyDataset:
    case ErrorKind::kNonBinaryLabels:
      return kExitIo;
    default:
      return kExitNumerical;
  }
}

int cmd_run(const Subcommand& sub, std::ostream& out, std::ostream& err) {
  const ExperimentSpec spec = parse_experiment_spec(merged_keys(sub));
  const ExperimentResult result = run_experiment(spec);
  for (const auto& [name, value] : result.metrics) print(out, name, value);
  if (!result.trace.ok()) {
    err << "error: " << *result.trace.failure << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_sweep(const Subcommand& sub, const std::vector<double>& init_values,
              std::optional<double> baseline, const std::string& summary, std::ostream& out) {
  KeyValues kv = merged_keys(sub);
  require(!kv.contains("out"), ErrorKind::kConfigError,
          "sweep does not write traces; use --summary for its output");
  const ExperimentSpec spec = parse_experiment_spec(kv);
  const double base = baseline.value_or(spec.algorithm == Algorithm::kTuned ? 1.0 : 5.0);
  const SweepResult r = sensitivity_sweep(spec, base, init_values);
  write_sweep_csv(summary, r);

  std::size_t failed = 0;
  for (const SweepCell& c : r.cells) failed += c.metric ? 0 : 1;
  print(out, "baseline_value", r.baseline_value);
  print(out, "baseline_metric", r.baseline_metric);
  out << "cells=" << r.cells.size() << '\n';
  out << "failed_cells=" << failed << '\n';
  print(out, "relative_average_change", r.relative_average_change);
  return failed == r.cells.size() ? kExitNumerical : kExitOk;
}

int cmd_compare(const Subcommand& sub, const std::vector<std::string>& algos,
                const std::string& out_dir, std::ostream& out) {
  KeyValues kv = merged_keys(sub);
  require(!kv.contains("out") && !kv.contains("algo"), ErrorKind::kConfigError,
          "compare takes --algos and --out-dir instead of algo and out");
  // Validate every spec before running anything.
  std::vector<ExperimentSpec> specs;
  for (const std::string& algo : algos) {
    KeyValues one = kv;
    one["algo"] = algo;
    specs.push_back(parse_experiment_spec(one));
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  require(!ec, ErrorKind::kIoError, "cannot create directory " + out_dir);

  const std::string summary_path = (std::filesystem::path(out_dir) / "summary.csv").string();
  std::ofstream summary(summary_path);
  require(summary.good(), ErrorKind::kIoError, "cannot write " + summary_path);
  summary << "algo,status,rows,final_metric\n";

  const BuiltProblem problem = build_problem(specs.front());
  std::size_t succeeded = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    ExperimentSpec spec = specs[i];
    spec.out_path = (std::filesystem::path(out_dir) / (algos[i] + ".csv")).string();
    const ExperimentResult r = run_experiment(spec, problem);
    const bool ok = r.trace.ok() && std::isfinite(r.sweep_metric);
    succeeded += ok ? 1 : 0;
    const char* status = ok ? "ok" : "failed";
    summary << algos[i] << ',' << status << ',' << r.trace.records.size() << ','
            << format_real(r.sweep_metric) << '\n';
    out << algos[i] << ".status=" << status << '\n';
    out << algos[i] << ".rows=" << r.trace.records.size() << '\n';
    print(out, algos[i] + ".final_metric", r.sweep_metric);
  }
  require(summary.good(), ErrorKind::kIoError, "cannot write " + summary_path);
  return succeeded == 0 ? kExitNumerical : kExitOk;
}

int cmd_check_grad(const Subcommand& sub, std::size_t samples, double tol, std::ostream& out) {
  KeyValues kv = merged_keys(sub);
  require(kv.contains("problem"), ErrorKind::kConfigError, "missing required key 'problem'");
  require(samples >= 1, ErrorKind::kConfigError, "--samples must be >= 1");
  kv["algo"] = "dtfbo";
  kv["T"] = "1";
  const ExperimentSpec spec = parse_experiment_spec(kv);
  const BuiltProblem problem = build_problem(spec);
  const ProblemOracle& oracle = *problem.oracle;

  std::mt19937_64 rng(spec.seed + 11);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const ReferenceSolveConfig solve{1e-12, 1000000};

  double worst = 0.0;
  std::size_t worst_sample = 0;
  Eigen::Index worst_coord = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    Vector x(oracle.dim_x());
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = unif(rng);
    const Vector y = solve_inner_reference(oracle, x, solve);
    const Vector v = solve_ls_reference(oracle, x, y, solve);
    const Vector est = hypergrad_estimate(oracle, x, y, v);
    const Vector fd = finite_diff_grad_phi(oracle, x);
    const double denom = 1.0 + fd.lpNorm<Eigen::Infinity>();
    Eigen::Index k = 0;
    const double e = (est - fd).cwiseAbs().maxCoeff(&k) / denom;
    if (s == 0 || e > worst) {
      worst = e;
      worst_sample = s;
      worst_coord = k;
    }
  }
  out << "samples=" << samples << '\n';
  print(out, "max_relative_error", worst);
  out << "worst_sample=" << worst_sample << '\n';
  out << "worst_coordinate=" << worst_coord << '\n';
  print(out, "tolerance", tol);
  out << "status=" << (worst <= tol ? "ok" : "failed") << '\n';
  return worst <= tol ? kExitOk : kExitNumerical;
}

struct Parser {
  CLI::App app{"Tuning-free bilevel optimization: D-TFBO, S-TFBO and a tuned baseline.", "tfbo"};
  Subcommand run, sweep, check, compare;

  std::vector<double> init_values;
  double baseline = 0.0;
  CLI::Option* baseline_opt = nullptr;
  std::string summary;
  std::vector<std::string> algos;
  std::string out_dir;
  std::size_t samples = 5;
  double tol = 1e-4;

  Parser() {
    app.require_subcommand(1, 1);
    app.set_help_all_flag("--help-all", "help for every subcommand");

    run.app = app.add_subcommand("run", "run one solver and print summary metrics");
    add_spec_flags(run, "run", true);

    sweep.app = app.add_subcommand(
        "sweep", "rerun with alpha0 = beta0 = gamma0 (tuned: learning-rate multiplier) swept");
    add_spec_flags(sweep, "sweep", true);
    sweep.app->add_option("--init", init_values, "comma-separated initial values to sweep")
        ->delimiter(',')
        ->required()
        ->type_name("<f,f,...>");
    baseline_opt = sweep.app
                       ->add_option("--baseline", baseline,
                                    "comparison value (default 5; 1 for tuned)")
                       ->type_name("<f>");
    sweep.app->add_option("--summary", summary, "sweep summary CSV path")
        ->required()
        ->type_name("<path>");

    check.app = app.add_subcommand(
        "check-grad", "compare the hypergradient estimate with finite differences");
    add_spec_flags(check, "check-grad", false);
    check.app->add_option("--samples", samples, "number of random outer points (default 5)")
        ->type_name("<int>");
    check.app->add_option("--tol", tol, "maximum relative error (default 1e-4)")
        ->type_name("<f>");

    compare.app = app.add_subcommand("compare", "run several solvers on one problem");
    add_spec_flags(compare, "compare", true);
    compare.app->add_option("--algos", algos, "comma-separated solvers")
        ->delimiter(',')
        ->required()
        ->type_name("<a,b,...>");
    compare.app->add_option("--out-dir", out_dir, "directory for <algo>.csv and summary.csv")
        ->required()
        ->type_name("<path>");
  }

  CLI::App* selected() {
    for (CLI::App* a : {run.app, sweep.app, check.app, compare.app}) {
      if (a->parsed()) return a;
    }
    return &app;
  }
};

}  // namespace

std::vector<std::string> subcommands() { return {"run", "sweep", "check-grad", "compare"}; }

std::vector<std::string> subcommand_flags(const std::string& subcommand) {
  std::vector<std::string> flags;
  for (const std::string& key : spec_flags_for(subcommand)) {
    flags.push_back(flag_name(subcommand, key));
  }
  if (subcommand != "check-grad") flags.emplace_back("spec");
  if (subcommand == "sweep") flags.insert(flags.end(), {"init", "baseline", "summary"});
  if (subcommand == "check-grad") flags.insert(flags.end(), {"samples", "tol"});
  if (subcommand == "compare") flags.insert(flags.end(), {"algos", "out-dir"});
  return flags;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto p = std::make_unique<Parser>();
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    p->app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << p->selected()->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << p->app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << p->selected()->help();
    return kExitUsage;
  }

  try {
    if (p->run.app->parsed()) return cmd_run(p->run, out, err);
    if (p->sweep.app->parsed()) {
      std::optional<double> base;
      if (p->baseline_opt->count() > 0) base = p->baseline;
      return cmd_sweep(p->sweep, p->init_values, base, p->summary, out);
    }
    if (p->check.app->parsed()) return cmd_check_grad(p->check, p->samples, p->tol, out);
    return cmd_compare(p->compare, p->algos, p->out_dir, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    const int code = exit_code_for(e.kind());
    if (code == kExitUsage) err << p->selected()->help();
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace tfbo::cli
