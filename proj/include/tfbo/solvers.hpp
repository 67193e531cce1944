#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tfbo/oracle.hpp"

namespace tfbo {

/// Iterates and accumulators shared by the single-loop solver. alpha, beta
/// and gamma are the running roots of the accumulated squared gradient norms;
/// stepsizes are eta / accumulator.
struct SolverState {
  Vector x;
  Vector y;
  Vector v;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double phi = 1.0;  // max(beta, gamma)
  std::size_t t = 0;
};

/// Double-loop configuration. Unset thresholds mean "auto": c_y / T and
/// c_v / T.
struct DtfboConfig {
  std::size_t T = 100;
  double alpha_0 = 1.0;
  double beta_0 = 1.0;
  double gamma_0 = 1.0;
  std::optional<double> eps_y;
  std::optional<double> eps_v;
  double eta_x = 1.0;
  double eta_y = 1.0;
  double eta_v = 1.0;
  double c_y = 1.0;
  double c_v = 1.0;
  std::size_t subloop_cap = 1000000;
  /// Keep the per-step accumulator history of both sub-loops in each record.
  bool record_subloops = false;

  double resolved_eps_y() const { return eps_y.value_or(c_y / static_cast<double>(T)); }
  double resolved_eps_v() const { return eps_v.value_or(c_v / static_cast<double>(T)); }
  /// Throws InvalidArgument on non-positive fields.
  void validate() const;
};

struct StfboConfig {
  std::size_t T = 1000;
  double alpha_0 = 1.0;  // must be >= 1
  double beta_0 = 1.0;
  double gamma_0 = 1.0;
  double eta_x = 1.0;
  double eta_y = 1.0;
  double eta_v = 1.0;

  void validate() const;
};

/// Fixed-stepsize AID baseline: N inner gradient steps on y, N steps on the
/// linear system, then one hypergradient step on x, all warm-started.
struct TunedAidConfig {
  std::size_t T = 100;
  double lr_x = 0.0;
  double lr_y = 0.0;
  double lr_v = 0.0;
  std::size_t inner_iters = 10;

  void validate() const;
};

/// One accumulator update inside a sub-loop: the squared gradient norm at the
/// pre-update iterate and the accumulator value it produced.
struct AccumulatorStep {
  double grad_norm_sq;
  double accumulator;
};

/// Telemetry for one outer iteration. For the single-loop solver every
/// quantity is taken at the pre-update iterate (x_t, y_t, v_t) and the
/// accumulators are the post-update values. For the double-loop solver the
/// norms are taken at (x_t, y_t^{P_t}, v_t^{Q_t}) and beta / gamma are the
/// final sub-loop values.
struct IterationRecord {
  std::size_t t = 0;
  double hypergrad_norm_sq = 0.0;
  double inner_grad_norm_sq = 0.0;
  double ls_grad_norm_sq = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  std::optional<double> phi;
  std::size_t P = 0;
  std::size_t Q = 0;
  bool y_cap_reached = false;
  bool v_cap_reached = false;
  std::optional<double> grad_phi_norm_sq;
  double f_val = 0.0;
  double g_val = 0.0;
  std::optional<double> elapsed_ms;

  std::vector<AccumulatorStep> inner_steps;
  std::vector<AccumulatorStep> ls_steps;
};

struct Trace {
  std::string algorithm;
  std::vector<IterationRecord> records;
  Vector final_x;
  Vector final_y;
  Vector final_v;
  /// Set when the run aborted (NonFiniteIterate); records holds the
  /// iterations completed before the failure.
  std::optional<std::string> failure;

  bool ok() const { return !failure.has_value(); }
};

using Observer = std::function<void(const IterationRecord&)>;

struct RunOptions {
  Observer observer;
  bool record_wall_time = false;
};

struct SubloopResult {
  Vector value;
  std::size_t steps = 0;
  double accumulator = 0.0;
  double final_norm_sq = 0.0;
  bool cap_reached = false;
  std::vector<AccumulatorStep> history;
};

/// Adaptive inner loop on y: while |grad_y g|^2 > eps_y, accumulate
/// beta^2 += |grad_y g|^2 and step y -= (eta_y / beta) grad_y g. Stops at cap
/// with the best iterate seen.
SubloopResult dtfbo_inner_y(const ProblemOracle& oracle, const Vector& x, const Vector& y_init,
                            double beta_0, double eps_y, double eta_y, std::size_t cap,
                            bool keep_history = false);

/// Same recursion on the linear-system residual grad_v_R with accumulator
/// gamma.
SubloopResult dtfbo_inner_v(const ProblemOracle& oracle, const Vector& x, const Vector& y,
                            const Vector& v_init, double gamma_0, double eps_v, double eta_v,
                            std::size_t cap, bool keep_history = false);

/// Double-loop tuning-free optimizer. y and v warm-start across outer
/// iterations; beta and gamma restart from beta_0 / gamma_0; alpha accumulates
/// over the whole run. Empty y_0 / v_0 default to zeros.
Trace dtfbo_run(const ProblemOracle& oracle, const DtfboConfig& cfg, const Vector& x_0,
                const Vector& y_0 = Vector(), const Vector& v_0 = Vector(),
                const RunOptions& options = {});

SolverState stfbo_init(const StfboConfig& cfg, const Vector& x_0, const Vector& y_0,
                       const Vector& v_0);

struct StepResult {
  SolverState state;
  IterationRecord record;
};

/// One simultaneous single-loop update. All three gradients are taken at the
/// incoming state; accumulators are updated before the stepsizes
/// eta_y / beta, eta_v / phi and eta_x / (alpha phi) are formed.
StepResult stfbo_step(const ProblemOracle& oracle, const SolverState& state,
                      const StfboConfig& cfg);

Trace stfbo_run(const ProblemOracle& oracle, const StfboConfig& cfg, const Vector& x_0,
                const Vector& y_0 = Vector(), const Vector& v_0 = Vector(),
                const RunOptions& options = {});

/// Records carry alpha = 1/lr_x, beta = 1/lr_y, gamma = 1/lr_v so that the
/// stepsize relation eta / accumulator holds for every algorithm's trace.
Trace tuned_aid_run(const ProblemOracle& oracle, const TunedAidConfig& cfg, const Vector& x_0,
                    const Vector& y_0 = Vector(), const Vector& v_0 = Vector(),
                    const RunOptions& options = {});

}  // namespace tfbo
