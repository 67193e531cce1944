#include "tfbo/hypergrad.hpp"

#include <cmath>

#include "tfbo/errors.hpp"

namespace tfbo {
namespace {

void check_config(const ReferenceSolveConfig& cfg) {
  require(cfg.tol > 0 && cfg.max_iters >= 1, ErrorKind::kInvalidArgument,
          "reference solve needs tol > 0 and max_iters >= 1");
}

}  // namespace

Vector grad_v_R(const ProblemOracle& oracle, const Vector& x, const Vector& y, const Vector& v) {
  check_point(oracle, x, y, v);
  return oracle.hvp_g_yy(x, y, v) - oracle.grad_f_y(x, y);
}

Vector hypergrad_estimate(const ProblemOracle& oracle, const Vector& x, const Vector& y,
                          const Vector& v) {
  check_point(oracle, x, y, v);
  return oracle.grad_f_x(x, y) - oracle.jvp_g_xy(x, y, v);
}

Vector solve_inner_reference(const ProblemOracle& oracle, const Vector& x,
                             const ReferenceSolveConfig& cfg, const Vector& y_init,
                             ReferenceSolveStats* stats) {
  check_config(cfg);
  Vector y = y_init.size() == 0 ? Vector::Zero(oracle.dim_y()) : y_init;
  check_point(oracle, x, y);

  Vector grad = oracle.grad_g_y(x, y);
  double value = oracle.eval_g(x, y);
  double step = 1.0;
  std::size_t it = 0;
  for (; it < cfg.max_iters; ++it) {
    const double gnorm_sq = grad.squaredNorm();
    if (std::sqrt(gnorm_sq) <= cfg.tol) break;

    // Backtracking. The step doubles after each accepted move so it can
    // recover from an early small value.
    step *= 2.0;
    Vector trial;
    Vector trial_grad;
    double trial_value = 0.0;
    for (;;) {
      trial = y - step * grad;
      // Close to the minimizer the predicted decrease is lost in the rounding
      // of g, and a noisy Armijo test can accept steps longer than 2/L. There
      // a step is accepted only if it shrinks the gradient, which any step up
      // to 2/L does for convex smooth g.
      const bool fine = 0.5 * step * gnorm_sq <= 1e-12 * (1.0 + std::abs(value));
      if (fine) {
        trial_grad = oracle.grad_g_y(x, trial);
        if (trial_grad.squaredNorm() < gnorm_sq) {
          trial_value = oracle.eval_g(x, trial);
          break;
        }
      } else {
        trial_value = oracle.eval_g(x, trial);
        if (trial_value <= value - 0.5 * step * gnorm_sq) {
          trial_grad = oracle.grad_g_y(x, trial);
          break;
        }
      }
      step *= 0.5;
      if (step < 1e-30) throw DidNotConverge(it, std::sqrt(gnorm_sq));
    }
    y = std::move(trial);
    grad = std::move(trial_grad);
    value = trial_value;
    if (!y.allFinite()) fail(ErrorKind::kNonFiniteIterate, "reference inner solve diverged");
  }
  if (stats) stats->iterations = it;
  const double final_norm = grad.norm();
  if (final_norm <= cfg.tol) return y;
  throw DidNotConverge(cfg.max_iters, final_norm);
}

Vector solve_ls_reference(const ProblemOracle& oracle, const Vector& x, const Vector& y,
                          const ReferenceSolveConfig& cfg, ReferenceSolveStats* stats) {
  check_config(cfg);
  check_point(oracle, x, y);
  const auto restart_every = static_cast<std::size_t>(oracle.dim_y());
  Vector v = Vector::Zero(oracle.dim_y());
  Vector r = oracle.grad_f_y(x, y);  // -grad_v_R at v = 0
  Vector d = r;
  double rr = r.squaredNorm();
  std::size_t since_restart = 0;
  std::size_t it = 0;
  for (; it < cfg.max_iters; ++it) {
    if (std::sqrt(rr) <= cfg.tol || since_restart == restart_every) {
      // Recompute the true residual; the recursive one drifts.
      r = -grad_v_R(oracle, x, y, v);
      rr = r.squaredNorm();
      if (std::sqrt(rr) <= cfg.tol) break;
      d = r;
      since_restart = 0;
    }
    const Vector hd = oracle.hvp_g_yy(x, y, d);
    const double curvature = d.dot(hd);
    require(curvature > 0, ErrorKind::kNonSpd,
            "Hessian is not positive definite along a CG direction");
    const double step = rr / curvature;
    v += step * d;
    r -= step * hd;
    const double rr_next = r.squaredNorm();
    d = r + (rr_next / rr) * d;
    rr = rr_next;
    ++since_restart;
  }
  if (stats) stats->iterations = it;
  const double final_norm = grad_v_R(oracle, x, y, v).norm();
  if (final_norm <= cfg.tol) return v;
  throw DidNotConverge(cfg.max_iters, final_norm);
}

Vector finite_diff_grad_phi(const ProblemOracle& oracle, const Vector& x, double h) {
  require(h > 0, ErrorKind::kInvalidArgument, "finite-difference step must be positive");
  require(x.size() == oracle.dim_x(), ErrorKind::kShapeMismatch, "x has wrong length");
  const ReferenceSolveConfig cfg{1e-12, 1000000};
  require(cfg.tol < h * h, ErrorKind::kInvalidArgument, "inner tolerance must be far below h^2");
  const Vector y_center = solve_inner_reference(oracle, x, cfg);
  auto phi = [&](const Vector& xx) {
    return oracle.eval_f(xx, solve_inner_reference(oracle, xx, cfg, y_center));
  };
  Vector out(x.size());
  Vector probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double hk = h * (1.0 + std::abs(x(k)));
    probe(k) = x(k) + hk;
    const double up = phi(probe);
    probe(k) = x(k) - hk;
    const double down = phi(probe);
    probe(k) = x(k);
    out(k) = (up - down) / (2.0 * hk);
  }
  return out;
}

}  // namespace tfbo
