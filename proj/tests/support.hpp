#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>

#include "tfbo/oracle.hpp"
#include "tfbo/quadratic.hpp"

namespace tfbo::test {

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Matrix scalar_matrix(double a) { return Matrix::Constant(1, 1, a); }

/// Zero-filled coefficients of the given shape; tests set what they need.
inline QuadraticCoefficients zero_quadratic(Eigen::Index dx, Eigen::Index dy) {
  return {Matrix::Identity(dy, dy), Matrix::Zero(dy, dx), Vector::Zero(dy),
          Matrix::Zero(dy, dy),     Matrix::Zero(dy, dx), Vector::Zero(dy),
          Matrix::Zero(dx, dx),     Vector::Zero(dx)};
}

/// g = 1/2 (y - x)^2 up to a constant in x, f = 1/2 y^2, so phi(x) = x^2 / 2.
inline std::shared_ptr<const QuadraticBilevel> tracking_1d() {
  QuadraticCoefficients q = zero_quadratic(1, 1);
  q.B = scalar_matrix(1.0);
  q.H = scalar_matrix(1.0);
  return quadratic_make(q);
}

/// A = diag(2, 3), grad_y f = (2, 6) at every point (p = (2, 6)).
inline std::shared_ptr<const QuadraticBilevel> diag23() {
  QuadraticCoefficients q = zero_quadratic(2, 2);
  q.A = Vector(vec({2.0, 3.0})).asDiagonal();
  q.B = Matrix::Identity(2, 2);
  q.p = vec({2.0, 6.0});
  q.S = Matrix::Identity(2, 2);
  return quadratic_make(q);
}

/// Returns fixed gradient vectors regardless of the point. Lets a test pin
/// the norms that enter each accumulator.
class FixedGradientOracle : public ProblemOracle {
 public:
  Vector gy = Vector::Zero(1);       // grad_g_y
  Vector fy = Vector::Zero(1);       // grad_f_y
  Vector fx = Vector::Zero(1);       // grad_f_x
  double hessian = 1.0;              // hvp = hessian * v
  double cross = 0.0;                // jvp = cross * v

  Eigen::Index dim_x() const override { return fx.size(); }
  Eigen::Index dim_y() const override { return gy.size(); }
  double eval_f(const Vector&, const Vector&) const override { return 0.0; }
  double eval_g(const Vector&, const Vector&) const override { return 0.0; }
  Vector grad_f_x(const Vector&, const Vector&) const override { return fx; }
  Vector grad_f_y(const Vector&, const Vector&) const override { return fy; }
  Vector grad_g_y(const Vector&, const Vector&) const override { return gy; }
  Vector hvp_g_yy(const Vector&, const Vector&, const Vector& v) const override {
    return hessian * v;
  }
  Vector jvp_g_xy(const Vector&, const Vector&, const Vector& v) const override {
    return Vector::Constant(fx.size(), cross * v.sum());
  }
};

/// Forwards to a wrapped oracle and remembers the arguments of the latest
/// jvp_g_xy call. Solvers call jvp_g_xy only inside the hypergradient
/// estimate, so after each outer iteration this holds (x_t, y_t, v_t).
class SpyOracle : public ProblemOracle {
 public:
  explicit SpyOracle(std::shared_ptr<const ProblemOracle> inner) : inner_(std::move(inner)) {}

  mutable Vector last_x, last_y, last_v;

  Eigen::Index dim_x() const override { return inner_->dim_x(); }
  Eigen::Index dim_y() const override { return inner_->dim_y(); }
  double eval_f(const Vector& x, const Vector& y) const override { return inner_->eval_f(x, y); }
  double eval_g(const Vector& x, const Vector& y) const override { return inner_->eval_g(x, y); }
  Vector grad_f_x(const Vector& x, const Vector& y) const override {
    return inner_->grad_f_x(x, y);
  }
  Vector grad_f_y(const Vector& x, const Vector& y) const override {
    return inner_->grad_f_y(x, y);
  }
  Vector grad_g_y(const Vector& x, const Vector& y) const override {
    return inner_->grad_g_y(x, y);
  }
  Vector hvp_g_yy(const Vector& x, const Vector& y, const Vector& v) const override {
    return inner_->hvp_g_yy(x, y, v);
  }
  Vector jvp_g_xy(const Vector& x, const Vector& y, const Vector& v) const override {
    last_x = x;
    last_y = y;
    last_v = v;
    return inner_->jvp_g_xy(x, y, v);
  }
  std::optional<double> mu() const override { return inner_->mu(); }
  const AnalyticSolution* analytic() const override { return inner_->analytic(); }

 private:
  std::shared_ptr<const ProblemOracle> inner_;
};

/// Scale-free comparison: |a - b| / max(|b|, tiny).
inline double rel_err(const Vector& a, const Vector& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

}  // namespace tfbo::test
