#include "tfbo/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "tfbo/errors.hpp"
#include "tfbo/hypergrad.hpp"

namespace tfbo {
namespace {

using Clock = std::chrono::steady_clock;

void require_positive(double value, const char* name) {
  require(value > 0 && std::isfinite(value), ErrorKind::kInvalidArgument,
          std::string(name) + " must be a positive real");
}

// beta_{p+1} = sqrt(beta_p^2 + |grad|^2), the only place accumulators change.
double accumulate(double acc, double grad_norm_sq) {
  return std::sqrt(acc * acc + grad_norm_sq);
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) fail(ErrorKind::kNonFiniteIterate, std::string(what) + " is not finite");
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) fail(ErrorKind::kNonFiniteIterate, std::string(what) + " is not finite");
}

template <class GradFn>
SubloopResult adaptive_subloop(const GradFn& grad_at, const Vector& init, double acc_0, double eps,
                               double eta, std::size_t cap, bool keep_history,
                               const char* what) {
  require_positive(acc_0, "initial accumulator");
  require_positive(eps, "stopping threshold");
  require_positive(eta, "stepsize coefficient");
  require(cap >= 1, ErrorKind::kInvalidArgument, "sub-loop cap must be >= 1");

  SubloopResult out;
  Vector z = init;
  double acc = acc_0;
  Vector grad = grad_at(z);
  double norm_sq = grad.squaredNorm();
  require_finite(norm_sq, what);
  Vector best = z;
  double best_norm_sq = norm_sq;

  std::size_t steps = 0;
  while (norm_sq > eps) {
    if (steps == cap) {
      out.cap_reached = true;
      break;
    }
    acc = accumulate(acc, norm_sq);
    if (keep_history) out.history.push_back({norm_sq, acc});
    z -= (eta / acc) * grad;
    ++steps;
    require_finite(z, what);
    grad = grad_at(z);
    norm_sq = grad.squaredNorm();
    require_finite(norm_sq, what);
    if (norm_sq < best_norm_sq) {
      best = z;
      best_norm_sq = norm_sq;
    }
  }
  out.steps = steps;
  out.accumulator = acc;
  if (out.cap_reached) {
    out.value = std::move(best);
    out.final_norm_sq = best_norm_sq;
  } else {
    out.value = std::move(z);
    out.final_norm_sq = norm_sq;
  }
  return out;
}

Vector or_zeros(const Vector& v, Eigen::Index n) { return v.size() == 0 ? Vector::Zero(n) : v; }

void fill_diagnostics(const ProblemOracle& oracle, const Vector& x, const Vector& y,
                      IterationRecord& rec) {
  if (const AnalyticSolution* a = oracle.analytic()) rec.grad_phi_norm_sq = a->grad_phi(x).squaredNorm();
  rec.f_val = oracle.eval_f(x, y);
  rec.g_val = oracle.eval_g(x, y);
}

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <class Body>
Trace run_loop(const char* name, std::size_t T, const RunOptions& options, Body&& body) {
  Trace trace;
  trace.algorithm = name;
  trace.records.reserve(T);
  const auto start = Clock::now();
  try {
    for (std::size_t t = 0; t < T; ++t) {
      IterationRecord rec = body(t);
      rec.t = t;
      if (options.record_wall_time) rec.elapsed_ms = ms_since(start);
      if (options.observer) options.observer(rec);
      trace.records.push_back(std::move(rec));
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNonFiniteIterate) throw;
    trace.failure = e.what();
  }
  return trace;
}

}  // namespace

void DtfboConfig::validate() const {
  require(T >= 1, ErrorKind::kInvalidArgument, "T must be >= 1");
  require_positive(alpha_0, "alpha_0");
  require_positive(beta_0, "beta_0");
  require_positive(gamma_0, "gamma_0");
  if (eps_y) require_positive(*eps_y, "eps_y");
  if (eps_v) require_positive(*eps_v, "eps_v");
  require_positive(eta_x, "eta_x");
  require_positive(eta_y, "eta_y");
  require_positive(eta_v, "eta_v");
  require_positive(c_y, "c_y");
  require_positive(c_v, "c_v");
  require(subloop_cap >= 1, ErrorKind::kInvalidArgument, "subloop_cap must be >= 1");
}

void StfboConfig::validate() const {
  require(T >= 1, ErrorKind::kInvalidArgument, "T must be >= 1");
  require(alpha_0 >= 1.0 && std::isfinite(alpha_0), ErrorKind::kInvalidArgument,
          "alpha_0 must be >= 1 for the single-loop solver");
  require_positive(beta_0, "beta_0");
  require_positive(gamma_0, "gamma_0");
  require_positive(eta_x, "eta_x");
  require_positive(eta_y, "eta_y");
  require_positive(eta_v, "eta_v");
}

void TunedAidConfig::validate() const {
  require(T >= 1, ErrorKind::kInvalidArgument, "T must be >= 1");
  require_positive(lr_x, "lr_x");
  require_positive(lr_y, "lr_y");
  require_positive(lr_v, "lr_v");
  require(inner_iters >= 1, ErrorKind::kInvalidArgument, "inner_iters must be >= 1");
}

SubloopResult dtfbo_inner_y(const ProblemOracle& oracle, const Vector& x, const Vector& y_init,
                            double beta_0, double eps_y, double eta_y, std::size_t cap,
                            bool keep_history) {
  check_point(oracle, x, y_init);
  return adaptive_subloop([&](const Vector& y) { return oracle.grad_g_y(x, y); }, y_init, beta_0,
                          eps_y, eta_y, cap, keep_history, "inner iterate y");
}

SubloopResult dtfbo_inner_v(const ProblemOracle& oracle, const Vector& x, const Vector& y,
                            const Vector& v_init, double gamma_0, double eps_v, double eta_v,
                            std::size_t cap, bool keep_history) {
  check_point(oracle, x, y, v_init);
  return adaptive_subloop([&](const Vector& v) { return grad_v_R(oracle, x, y, v); }, v_init,
                          gamma_0, eps_v, eta_v, cap, keep_history, "linear-system iterate v");
}

Trace dtfbo_run(const ProblemOracle& oracle, const DtfboConfig& cfg, const Vector& x_0,
                const Vector& y_0, const Vector& v_0, const RunOptions& options) {
  cfg.validate();
  Vector x = x_0;
  Vector y = or_zeros(y_0, oracle.dim_y());
  Vector v = or_zeros(v_0, oracle.dim_y());
  check_point(oracle, x, y, v);
  const double eps_y = cfg.resolved_eps_y();
  const double eps_v = cfg.resolved_eps_v();
  double alpha = cfg.alpha_0;

  Trace trace = run_loop("dtfbo", cfg.T, options, [&](std::size_t) {
    IterationRecord rec;
    SubloopResult ry = dtfbo_inner_y(oracle, x, y, cfg.beta_0, eps_y, cfg.eta_y, cfg.subloop_cap,
                                     cfg.record_subloops);
    y = std::move(ry.value);
    SubloopResult rv = dtfbo_inner_v(oracle, x, y, v, cfg.gamma_0, eps_v, cfg.eta_v,
                                     cfg.subloop_cap, cfg.record_subloops);
    v = std::move(rv.value);

    const Vector hg = hypergrad_estimate(oracle, x, y, v);
    const double hg_sq = hg.squaredNorm();
    require_finite(hg_sq, "hypergradient estimate");
    fill_diagnostics(oracle, x, y, rec);

    alpha = accumulate(alpha, hg_sq);
    x -= (cfg.eta_x / alpha) * hg;
    require_finite(x, "outer iterate x");

    rec.hypergrad_norm_sq = hg_sq;
    rec.inner_grad_norm_sq = ry.final_norm_sq;
    rec.ls_grad_norm_sq = rv.final_norm_sq;
    rec.alpha = alpha;
    rec.beta = ry.accumulator;
    rec.gamma = rv.accumulator;
    rec.P = ry.steps;
    rec.Q = rv.steps;
    rec.y_cap_reached = ry.cap_reached;
    rec.v_cap_reached = rv.cap_reached;
    rec.inner_steps = std::move(ry.history);
    rec.ls_steps = std::move(rv.history);
    return rec;
  });
  trace.final_x = std::move(x);
  trace.final_y = std::move(y);
  trace.final_v = std::move(v);
  return trace;
}

SolverState stfbo_init(const StfboConfig& cfg, const Vector& x_0, const Vector& y_0,
                       const Vector& v_0) {
  SolverState s;
  s.x = x_0;
  s.y = y_0;
  s.v = v_0;
  s.alpha = cfg.alpha_0;
  s.beta = cfg.beta_0;
  s.gamma = cfg.gamma_0;
  s.phi = std::max(cfg.beta_0, cfg.gamma_0);
  s.t = 0;
  return s;
}

StepResult stfbo_step(const ProblemOracle& oracle, const SolverState& state,
                      const StfboConfig& cfg) {
  check_point(oracle, state.x, state.y, state.v);
  const Vector gy = oracle.grad_g_y(state.x, state.y);
  const Vector gv = grad_v_R(oracle, state.x, state.y, state.v);
  const Vector gf = hypergrad_estimate(oracle, state.x, state.y, state.v);
  const double gy_sq = gy.squaredNorm();
  const double gv_sq = gv.squaredNorm();
  const double gf_sq = gf.squaredNorm();
  require_finite(gy_sq, "inner gradient");
  require_finite(gv_sq, "linear-system residual");
  require_finite(gf_sq, "hypergradient estimate");

  StepResult out;
  SolverState& next = out.state;
  next.beta = accumulate(state.beta, gy_sq);
  next.gamma = accumulate(state.gamma, gv_sq);
  next.phi = std::max(next.beta, next.gamma);
  next.alpha = accumulate(state.alpha, gf_sq);
  next.y = state.y - (cfg.eta_y / next.beta) * gy;
  next.v = state.v - (cfg.eta_v / next.phi) * gv;
  next.x = state.x - (cfg.eta_x / (next.alpha * next.phi)) * gf;
  next.t = state.t + 1;
  require_finite(next.y, "inner iterate y");
  require_finite(next.v, "linear-system iterate v");
  require_finite(next.x, "outer iterate x");

  IterationRecord& rec = out.record;
  rec.t = state.t;
  rec.hypergrad_norm_sq = gf_sq;
  rec.inner_grad_norm_sq = gy_sq;
  rec.ls_grad_norm_sq = gv_sq;
  rec.alpha = next.alpha;
  rec.beta = next.beta;
  rec.gamma = next.gamma;
  rec.phi = next.phi;
  fill_diagnostics(oracle, state.x, state.y, rec);
  return out;
}

Trace stfbo_run(const ProblemOracle& oracle, const StfboConfig& cfg, const Vector& x_0,
                const Vector& y_0, const Vector& v_0, const RunOptions& options) {
  cfg.validate();
  SolverState state = stfbo_init(cfg, x_0, or_zeros(y_0, oracle.dim_y()),
                                 or_zeros(v_0, oracle.dim_y()));
  check_point(oracle, state.x, state.y, state.v);
  Trace trace = run_loop("stfbo", cfg.T, options, [&](std::size_t) {
    StepResult step = stfbo_step(oracle, state, cfg);
    state = std::move(step.state);
    return std::move(step.record);
  });
  trace.final_x = std::move(state.x);
  trace.final_y = std::move(state.y);
  trace.final_v = std::move(state.v);
  return trace;
}

Trace tuned_aid_run(const ProblemOracle& oracle, const TunedAidConfig& cfg, const Vector& x_0,
                    const Vector& y_0, const Vector& v_0, const RunOptions& options) {
  cfg.validate();
  Vector x = x_0;
  Vector y = or_zeros(y_0, oracle.dim_y());
  Vector v = or_zeros(v_0, oracle.dim_y());
  check_point(oracle, x, y, v);

  Trace trace = run_loop("tuned", cfg.T, options, [&](std::size_t) {
    IterationRecord rec;
    for (std::size_t k = 0; k < cfg.inner_iters; ++k) {
      y -= cfg.lr_y * oracle.grad_g_y(x, y);
      require_finite(y, "inner iterate y");
    }
    for (std::size_t k = 0; k < cfg.inner_iters; ++k) {
      v -= cfg.lr_v * grad_v_R(oracle, x, y, v);
      require_finite(v, "linear-system iterate v");
    }
    const Vector hg = hypergrad_estimate(oracle, x, y, v);
    rec.hypergrad_norm_sq = hg.squaredNorm();
    rec.inner_grad_norm_sq = oracle.grad_g_y(x, y).squaredNorm();
    rec.ls_grad_norm_sq = grad_v_R(oracle, x, y, v).squaredNorm();
    require_finite(rec.hypergrad_norm_sq, "hypergradient estimate");
    fill_diagnostics(oracle, x, y, rec);
    x -= cfg.lr_x * hg;
    require_finite(x, "outer iterate x");
    rec.alpha = 1.0 / cfg.lr_x;
    rec.beta = 1.0 / cfg.lr_y;
    rec.gamma = 1.0 / cfg.lr_v;
    rec.P = cfg.inner_iters;
    rec.Q = cfg.inner_iters;
    return rec;
  });
  trace.final_x = std::move(x);
  trace.final_y = std::move(y);
  trace.final_v = std::move(v);
  return trace;
}

}  // namespace tfbo
