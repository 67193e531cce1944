#include "tfbo/logistic.hpp"

#include <cmath>

#include "tfbo/errors.hpp"

namespace tfbo {

double log1pexp(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// z_i = -y_i d_i'theta, the argument of the per-sample loss log(1 + exp(z_i)).
Vector neg_margins(const Dataset& ds, const Vector& theta) {
  return -(ds.labels.array() * (ds.features * theta).array()).matrix();
}

Vector sigmoid_of(const Vector& z) { return z.unaryExpr([](double v) { return sigmoid(v); }); }

// Row i holds grad_theta l_i = -s_i y_i d_i.
Vector loss_gradient(const Dataset& ds, const Vector& theta) {
  const Vector s = sigmoid_of(neg_margins(ds, theta));
  const Vector w = -(s.array() * ds.labels.array()).matrix();
  return ds.features.transpose() * w / static_cast<double>(ds.size());
}

Dataset strip_mask(Dataset ds) {
  ds.corruption_mask.reset();
  return ds;
}

void check_pair(const Dataset& train, const Dataset& val) {
  require(train.size() > 0 && val.size() > 0, ErrorKind::kEmptyDataset,
          "training and validation sets must be non-empty");
  validate(train);
  validate(val);
  require(train.dim() == val.dim(), ErrorKind::kShapeMismatch,
          "training and validation feature counts differ");
}

}  // namespace

double logistic_loss(const Dataset& ds, const Vector& theta) {
  require(theta.size() == ds.dim(), ErrorKind::kShapeMismatch, "theta length != feature count");
  const Vector z = neg_margins(ds, theta);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += log1pexp(z(i));
  return total / static_cast<double>(ds.size());
}

// ---------------------------------------------------------------------------
// Regularization selection

RegularizationSelection::RegularizationSelection(Dataset train, Dataset validation)
    : train_(strip_mask(std::move(train))), val_(strip_mask(std::move(validation))) {}

double RegularizationSelection::eval_f(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  return logistic_loss(val_, y);
}

double RegularizationSelection::eval_g(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  const double reg = 0.5 * (x.array().exp() * y.array().square()).sum();
  return logistic_loss(train_, y) + reg;
}

Vector RegularizationSelection::grad_f_x(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  return Vector::Zero(dim_x());
}

Vector RegularizationSelection::grad_f_y(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  return loss_gradient(val_, y);
}

Vector RegularizationSelection::grad_g_y(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  return loss_gradient(train_, y) + (x.array().exp() * y.array()).matrix();
}

Vector RegularizationSelection::hvp_g_yy(const Vector& x, const Vector& y,
                                         const Vector& v) const {
  check_point(*this, x, y, v);
  const Vector s = sigmoid_of(neg_margins(train_, y));
  const Vector curvature = (s.array() * (1.0 - s.array())).matrix();
  const Vector dv = train_.features * v;
  return train_.features.transpose() * (curvature.array() * dv.array()).matrix() /
             static_cast<double>(train_.size()) +
         (x.array().exp() * v.array()).matrix();
}

Vector RegularizationSelection::jvp_g_xy(const Vector& x, const Vector& y,
                                         const Vector& v) const {
  check_point(*this, x, y, v);
  return (x.array().exp() * y.array() * v.array()).matrix();
}

std::shared_ptr<const RegularizationSelection> regsel_make(Dataset train, Dataset validation) {
  check_pair(train, validation);
  return std::make_shared<const RegularizationSelection>(std::move(train), std::move(validation));
}

// ---------------------------------------------------------------------------
// Data hyper-cleaning

HyperCleaning::HyperCleaning(Dataset train, Dataset validation, double c)
    : train_(strip_mask(std::move(train))), val_(strip_mask(std::move(validation))), c_(c) {}

double HyperCleaning::eval_f(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  return logistic_loss(val_, y);
}

double HyperCleaning::eval_g(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  const Vector z = neg_margins(train_, y);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += sigmoid(x(i)) * log1pexp(z(i));
  return total / static_cast<double>(train_.size()) + c_ * y.squaredNorm();
}

Vector HyperCleaning::grad_f_x(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  return Vector::Zero(dim_x());
}

Vector HyperCleaning::grad_f_y(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  return loss_gradient(val_, y);
}

Vector HyperCleaning::grad_g_y(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  const Vector s = sigmoid_of(neg_margins(train_, y));
  const Vector w = -(sigmoid_of(x).array() * s.array() * train_.labels.array()).matrix();
  return train_.features.transpose() * w / static_cast<double>(train_.size()) + 2.0 * c_ * y;
}

Vector HyperCleaning::hvp_g_yy(const Vector& x, const Vector& y, const Vector& v) const {
  check_point(*this, x, y, v);
  const Vector s = sigmoid_of(neg_margins(train_, y));
  const Vector weight = (sigmoid_of(x).array() * s.array() * (1.0 - s.array())).matrix();
  const Vector dv = train_.features * v;
  return train_.features.transpose() * (weight.array() * dv.array()).matrix() /
             static_cast<double>(train_.size()) +
         2.0 * c_ * v;
}

Vector HyperCleaning::jvp_g_xy(const Vector& x, const Vector& y, const Vector& v) const {
  check_point(*this, x, y, v);
  // i-th entry: (1/n) sigmoid'(lambda_i) * grad_theta l_i' v, with
  // grad_theta l_i = -s_i y_i d_i.
  const Vector s = sigmoid_of(neg_margins(train_, y));
  const Vector sig = sigmoid_of(x);
  const Vector dv = train_.features * v;
  return (sig.array() * (1.0 - sig.array()) * (-s.array() * train_.labels.array()) * dv.array())
             .matrix() /
         static_cast<double>(train_.size());
}

std::shared_ptr<const HyperCleaning> hyperclean_make(Dataset train, Dataset validation, double c) {
  require(c > 0 && std::isfinite(c), ErrorKind::kNonPositiveC, "C must be a positive real");
  check_pair(train, validation);
  return std::make_shared<const HyperCleaning>(std::move(train), std::move(validation), c);
}

}  // namespace tfbo
