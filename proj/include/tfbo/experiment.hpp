#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tfbo/dataset.hpp"
#include "tfbo/oracle.hpp"
#include "tfbo/quadratic.hpp"
#include "tfbo/solvers.hpp"

namespace tfbo {

enum class ProblemKind { kQuadratic, kRegsel, kHyperclean };
enum class Algorithm { kDtfbo, kStfbo, kTuned };
enum class InitPolicy { kZeros, kRandom };

const char* to_string(ProblemKind kind);
const char* to_string(Algorithm algo);
ProblemKind parse_problem_kind(const std::string& tag);  // ConfigError on unknown tags
Algorithm parse_algorithm(const std::string& tag);

/// Everything needed to reproduce one run. Fields not relevant to the chosen
/// problem or algorithm are ignored.
struct ExperimentSpec {
  ProblemKind problem = ProblemKind::kQuadratic;
  Algorithm algorithm = Algorithm::kDtfbo;
  std::uint64_t seed = 0;

  // quadratic
  Eigen::Index dim_x = 10;
  Eigen::Index dim_y = 10;
  double condition = 10.0;
  double offset_scale = 1.0;
  double scale = 1.0;

  // regsel / hyperclean; synthetic data when the paths are empty
  std::string train_path;
  std::string val_path;
  std::optional<Eigen::Index> n_train;
  std::optional<Eigen::Index> n_val;
  std::optional<Eigen::Index> n_features;
  double corruption = 0.2;
  std::optional<double> C;

  DtfboConfig dtfbo;
  StfboConfig stfbo;
  TunedAidConfig tuned;

  InitPolicy init = InitPolicy::kZeros;
  std::string out_path;
  bool record_wall_time = false;

  std::size_t iterations() const;
  void set_iterations(std::size_t T);
};

/// Problem oracle plus the data it was built from (for evaluation metrics).
struct BuiltProblem {
  std::shared_ptr<const ProblemOracle> oracle;
  std::optional<Dataset> train;
  std::optional<Dataset> validation;
};

/// The d_x = d_y = 10 benchmark quadratic used across the test suite, seeded.
RandomQuadraticOptions benchmark_quadratic_options(std::uint64_t seed);

BuiltProblem build_problem(const ExperimentSpec& spec);

struct InitialPoint {
  Vector x;
  Vector y;
  Vector v;
};

/// Zeros, or coordinates uniform in [-1, 1] from a generator seeded by `seed`.
InitialPoint initial_point(const ProblemOracle& oracle, InitPolicy policy, std::uint64_t seed);

struct ExperimentResult {
  Trace trace;
  /// Ordered (name, value) pairs printed by the CLI.
  std::vector<std::pair<std::string, double>> metrics;
  /// Final |grad phi|^2 for quadratics, otherwise final validation loss.
  double sweep_metric = 0.0;
};

/// Builds the oracle, runs the solver, writes the CSV when out_path is set.
ExperimentResult run_experiment(const ExperimentSpec& spec, const Observer& observer = {});
ExperimentResult run_experiment(const ExperimentSpec& spec, const BuiltProblem& problem,
                                const Observer& observer = {});

struct SweepCell {
  double init_value;
  std::optional<double> metric;
  double relative_change;  // +inf when the cell failed
  std::optional<std::string> error;
};

struct SweepResult {
  double baseline_value;
  double baseline_metric;
  std::vector<SweepCell> cells;
  /// Mean of |metric - baseline| / baseline over the cells.
  double relative_average_change;
};

/// Reruns `spec` once per value. For the adaptive solvers the value replaces
/// alpha_0 = beta_0 = gamma_0; for the tuned baseline it multiplies all three
/// learning rates (baseline multiplier 1). The comparison point is the run at
/// `baseline_value`. Cell failures are recorded, not thrown.
SweepResult sensitivity_sweep(const ExperimentSpec& spec, double baseline_value,
                              std::span<const double> values);

void write_sweep_csv(const std::string& path, const SweepResult& result);

// ---------------------------------------------------------------------------
// Flat key-value specs

using KeyValues = std::map<std::string, std::string>;

struct SpecKey {
  const char* name;
  const char* value_hint;
  const char* help;
};

/// Every key accepted by parse_experiment_spec; the CLI exposes each as a
/// --flag.
std::span<const SpecKey> spec_keys();

/// Strict: unknown keys, malformed values and missing required keys
/// (problem, algo, T; lr-x/lr-y/lr-v for tuned; C for hyperclean) raise
/// ConfigError.
ExperimentSpec parse_experiment_spec(const KeyValues& kv);

/// `key = value` lines; '#' starts a comment. Duplicate keys are ConfigError,
/// unreadable files IOError.
KeyValues load_spec_file(const std::string& path);

}  // namespace tfbo
