#pragma once

#include <memory>

#include "tfbo/dataset.hpp"
#include "tfbo/oracle.hpp"

namespace tfbo {

/// log(1 + exp(z)) without overflow.
double log1pexp(double z);
/// 1 / (1 + exp(-z)), evaluated on the side that does not overflow.
double sigmoid(double z);

/// Regularization selection: x = lambda (per-coordinate log-strengths),
/// y = theta (linear model).
///
///   g = (1/n) sum_i log(1 + exp(-y_i d_i'theta)) + 1/2 sum_k exp(lambda_k) theta_k^2
///   f = (1/m) sum_j log(1 + exp(-y_j d_j'theta))   (validation)
class RegularizationSelection final : public ProblemOracle {
 public:
  RegularizationSelection(Dataset train, Dataset validation);

  Eigen::Index dim_x() const override { return train_.dim(); }
  Eigen::Index dim_y() const override { return train_.dim(); }

  double eval_f(const Vector& x, const Vector& y) const override;
  double eval_g(const Vector& x, const Vector& y) const override;
  Vector grad_f_x(const Vector& x, const Vector& y) const override;
  Vector grad_f_y(const Vector& x, const Vector& y) const override;
  Vector grad_g_y(const Vector& x, const Vector& y) const override;
  Vector hvp_g_yy(const Vector& x, const Vector& y, const Vector& v) const override;
  Vector jvp_g_xy(const Vector& x, const Vector& y, const Vector& v) const override;

 private:
  Dataset train_;
  Dataset val_;
};

/// Data hyper-cleaning: x = lambda (one weight logit per training sample),
/// y = theta.
///
///   g = (1/n) sum_i sigmoid(lambda_i) log(1 + exp(-y_i d_i'theta)) + C |theta|^2
///   f = validation logistic loss
///
/// mu = 2C.
class HyperCleaning final : public ProblemOracle {
 public:
  HyperCleaning(Dataset train, Dataset validation, double c);

  Eigen::Index dim_x() const override { return train_.size(); }
  Eigen::Index dim_y() const override { return train_.dim(); }

  double eval_f(const Vector& x, const Vector& y) const override;
  double eval_g(const Vector& x, const Vector& y) const override;
  Vector grad_f_x(const Vector& x, const Vector& y) const override;
  Vector grad_f_y(const Vector& x, const Vector& y) const override;
  Vector grad_g_y(const Vector& x, const Vector& y) const override;
  Vector hvp_g_yy(const Vector& x, const Vector& y, const Vector& v) const override;
  Vector jvp_g_xy(const Vector& x, const Vector& y, const Vector& v) const override;

  std::optional<double> mu() const override { return 2.0 * c_; }
  double regularization() const { return c_; }

 private:
  Dataset train_;
  Dataset val_;
  double c_;
};

/// Throws ShapeMismatch when column counts differ, EmptyDataset on empty
/// inputs.
std::shared_ptr<const RegularizationSelection> regsel_make(Dataset train, Dataset validation);
/// Additionally throws NonPositiveC when c <= 0.
std::shared_ptr<const HyperCleaning> hyperclean_make(Dataset train, Dataset validation, double c);

/// Mean logistic loss of a linear model on a dataset.
double logistic_loss(const Dataset& ds, const Vector& theta);

}  // namespace tfbo
