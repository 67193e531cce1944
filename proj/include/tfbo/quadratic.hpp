#pragma once

#include <cstdint>
#include <memory>

#include "tfbo/oracle.hpp"

namespace tfbo {

/// Coefficients of the quadratic bilevel family
///
///   g(x, y) = 1/2 y'Ay - y'(Bx + c)
///   f(x, y) = 1/2 y'Hy + y'Mx + p'y + 1/2 x'Sx + s'x
///
/// with A (d_y x d_y) SPD, B and M (d_y x d_x), H and S symmetric.
struct QuadraticCoefficients {
  Matrix A;
  Matrix B;
  Vector c;
  Matrix H;
  Matrix M;
  Vector p;
  Matrix S;
  Vector s;
};

class QuadraticBilevel final : public ProblemOracle, public AnalyticSolution {
 public:
  /// Use quadratic_make(); this constructor trusts its inputs.
  QuadraticBilevel(QuadraticCoefficients coeffs, double mu);

  Eigen::Index dim_x() const override { return q_.B.cols(); }
  Eigen::Index dim_y() const override { return q_.A.rows(); }

  double eval_f(const Vector& x, const Vector& y) const override;
  double eval_g(const Vector& x, const Vector& y) const override;
  Vector grad_f_x(const Vector& x, const Vector& y) const override;
  Vector grad_f_y(const Vector& x, const Vector& y) const override;
  Vector grad_g_y(const Vector& x, const Vector& y) const override;
  Vector hvp_g_yy(const Vector& x, const Vector& y, const Vector& v) const override;
  Vector jvp_g_xy(const Vector& x, const Vector& y, const Vector& v) const override;

  std::optional<double> mu() const override { return mu_; }
  const AnalyticSolution* analytic() const override { return this; }

  Vector y_star(const Vector& x) const override;
  Vector grad_phi(const Vector& x) const override;
  double phi(const Vector& x) const override;

  const QuadraticCoefficients& coefficients() const { return q_; }
  /// Largest eigenvalue of A, i.e. the gradient Lipschitz constant of g(x, .).
  double lipschitz_g() const { return lipschitz_g_; }
  /// Hessian of phi(x), constant for this family.
  Matrix phi_hessian() const;

 private:
  QuadraticCoefficients q_;
  double mu_;
  double lipschitz_g_;
  Eigen::LLT<Matrix> a_llt_;
};

/// Validates shapes and definiteness, then builds the oracle with
/// mu = lambda_min(A). Throws ShapeMismatch or NonSPD.
std::shared_ptr<const QuadraticBilevel> quadratic_make(QuadraticCoefficients coeffs,
                                                       double mu_min = 1e-10);

/// Smallest eigenvalue of a symmetric positive definite matrix by inverse
/// power iteration with Rayleigh-quotient estimates, to ~1e-8 relative.
/// Throws NonSPD if a Cholesky factorization does not exist.
double smallest_eigenvalue_spd(const Matrix& a);

struct RandomQuadraticOptions {
  Eigen::Index dim_x = 10;
  Eigen::Index dim_y = 10;
  /// Eigenvalues of A are log-spaced in [mu, mu * condition].
  double condition = 10.0;
  double mu = 1.0;
  /// Scale of the linear offsets c, p, s; drives the initial gradient size at
  /// the origin.
  double offset_scale = 1.0;
  /// Eigenvalues of S are log-spaced in [outer_curvature_min, outer_curvature_max].
  double outer_curvature_min = 0.1;
  double outer_curvature_max = 1.0;
  bool with_cross_term = false;
  /// Multiplies every coefficient. Leaves y*(x) and the minimizer of phi
  /// unchanged and scales all gradients by this factor.
  double scale = 1.0;
  std::uint64_t seed = 0;
};

/// Seeded random instance: A, H, S drawn with random orthogonal eigenbases.
/// H is PSD and S is PD, so phi is strongly convex when M = 0.
QuadraticCoefficients random_quadratic(const RandomQuadraticOptions& options);

}  // namespace tfbo
