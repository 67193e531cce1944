#pragma once

#include <optional>

#include <Eigen/Dense>

namespace tfbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Closed-form ground truth for problems where y*(x) and the hypergradient
/// are available analytically.
class AnalyticSolution {
 public:
  virtual ~AnalyticSolution() = default;

  virtual Vector y_star(const Vector& x) const = 0;
  virtual Vector grad_phi(const Vector& x) const = 0;
  /// Outer objective through the inner solution map, f(x, y*(x)).
  virtual double phi(const Vector& x) const = 0;
};

/// Bilevel problem  min_x f(x, y*(x))  s.t.  y*(x) = argmin_y g(x, y).
///
/// This is the only view of a problem that the solvers get. Second-order
/// information is exposed as Hessian-vector and cross-Jacobian-vector
/// products so that no d_y x d_y matrix ever has to be formed by a caller.
/// Implementations are immutable after construction and may be shared across
/// threads.
class ProblemOracle {
 public:
  virtual ~ProblemOracle() = default;

  virtual Eigen::Index dim_x() const = 0;
  virtual Eigen::Index dim_y() const = 0;

  virtual double eval_f(const Vector& x, const Vector& y) const = 0;
  virtual double eval_g(const Vector& x, const Vector& y) const = 0;

  virtual Vector grad_f_x(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_f_y(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_g_y(const Vector& x, const Vector& y) const = 0;

  /// (d^2 g / dy dy)(x, y) * v, length d_y.
  virtual Vector hvp_g_yy(const Vector& x, const Vector& y, const Vector& v) const = 0;
  /// (d^2 g / dx dy)(x, y) * v, length d_x.
  virtual Vector jvp_g_xy(const Vector& x, const Vector& y, const Vector& v) const = 0;

  /// Strong-convexity constant of g(x, .), when known in closed form.
  virtual std::optional<double> mu() const { return std::nullopt; }
  virtual const AnalyticSolution* analytic() const { return nullptr; }
};

/// Throws ShapeMismatch unless x has d_x entries and y has d_y entries.
void check_point(const ProblemOracle& oracle, const Vector& x, const Vector& y);
/// Same, plus a direction v of length d_y.
void check_point(const ProblemOracle& oracle, const Vector& x, const Vector& y,
                 const Vector& v);

bool all_finite(const Vector& v);

}  // namespace tfbo
