#pragma once

#include <cstddef>

#include "tfbo/oracle.hpp"

namespace tfbo {

/// Gradient in v of R(x, y, v) = 1/2 v' H_yy v - v' grad_y f, i.e.
/// hvp_g_yy(x, y, v) - grad_f_y(x, y).
Vector grad_v_R(const ProblemOracle& oracle, const Vector& x, const Vector& y, const Vector& v);

/// Hypergradient estimate grad_x f(x, y) - (d^2 g / dx dy)(x, y) v.
Vector hypergrad_estimate(const ProblemOracle& oracle, const Vector& x, const Vector& y,
                          const Vector& v);

struct ReferenceSolveConfig {
  double tol = 1e-12;  // on the residual norm, not its square
  std::size_t max_iters = 1000000;
};

struct ReferenceSolveStats {
  std::size_t iterations = 0;
};

/// Minimizes g(x, .) by gradient descent with Armijo backtracking until
/// |grad_g_y| <= cfg.tol. Starts from y_init (zeros when empty). Test-oracle
/// use only: it is allowed to search for stepsizes.
Vector solve_inner_reference(const ProblemOracle& oracle, const Vector& x,
                             const ReferenceSolveConfig& cfg, const Vector& y_init = Vector(),
                             ReferenceSolveStats* stats = nullptr);

/// Solves H_yy(x, y) v = grad_f_y(x, y) by conjugate gradients (restarted every
/// d_y iterations) until |grad_v_R| <= cfg.tol.
Vector solve_ls_reference(const ProblemOracle& oracle, const Vector& x, const Vector& y,
                          const ReferenceSolveConfig& cfg,
                          ReferenceSolveStats* stats = nullptr);

/// Central differences of phi(x) = f(x, y*(x)) with per-coordinate step
/// h_k = h * (1 + |x_k|); each y* is a reference solve at tolerance 1e-12,
/// warm-started from y*(x).
Vector finite_diff_grad_phi(const ProblemOracle& oracle, const Vector& x, double h = 1e-5);

}  // namespace tfbo
