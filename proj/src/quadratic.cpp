#include "tfbo/quadratic.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "tfbo/errors.hpp"

namespace tfbo {
namespace {

bool is_symmetric(const Matrix& m) {
  return m.rows() == m.cols() && (m - m.transpose()).norm() <= 1e-12 * (1.0 + m.norm());
}

void require_shape(bool ok, const std::string& what) {
  require(ok, ErrorKind::kShapeMismatch, what);
}

Matrix random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

Vector log_spaced(Eigen::Index n, double lo, double hi) {
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    out(i) = lo * std::pow(hi / lo, frac);
  }
  return out;
}

Matrix spectral(const Matrix& basis, const Vector& eigenvalues) {
  Matrix m = basis * eigenvalues.asDiagonal() * basis.transpose();
  return 0.5 * (m + m.transpose());
}

Vector gaussian_vector(Eigen::Index n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * normal(rng);
  return v;
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * normal(rng);
  return m;
}

}  // namespace

QuadraticBilevel::QuadraticBilevel(QuadraticCoefficients coeffs, double mu)
    : q_(std::move(coeffs)), mu_(mu), a_llt_(q_.A) {
  lipschitz_g_ = Eigen::SelfAdjointEigenSolver<Matrix>(q_.A, Eigen::EigenvaluesOnly)
                     .eigenvalues()
                     .maxCoeff();
}

double QuadraticBilevel::eval_f(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  return 0.5 * y.dot(q_.H * y) + y.dot(q_.M * x) + q_.p.dot(y) + 0.5 * x.dot(q_.S * x) +
         q_.s.dot(x);
}

double QuadraticBilevel::eval_g(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  return 0.5 * y.dot(q_.A * y) - y.dot(q_.B * x + q_.c);
}

Vector QuadraticBilevel::grad_f_x(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  return q_.M.transpose() * y + q_.S * x + q_.s;
}

Vector QuadraticBilevel::grad_f_y(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  return q_.H * y + q_.M * x + q_.p;
}

Vector QuadraticBilevel::grad_g_y(const Vector& x, const Vector& y) const {
  check_point(*this, x, y);
  return q_.A * y - q_.B * x - q_.c;
}

Vector QuadraticBilevel::hvp_g_yy(const Vector& x, const Vector& y, const Vector& v) const {
  check_point(*this, x, y, v);
  return q_.A * v;
}

Vector QuadraticBilevel::jvp_g_xy(const Vector& x, const Vector& y, const Vector& v) const {
  check_point(*this, x, y, v);
  return -(q_.B.transpose() * v);
}

Vector QuadraticBilevel::y_star(const Vector& x) const {
  require_shape(x.size() == dim_x(), "x has wrong length");
  return a_llt_.solve(q_.B * x + q_.c);
}

Vector QuadraticBilevel::grad_phi(const Vector& x) const {
  const Vector y = y_star(x);
  const Vector fy = grad_f_y(x, y);
  // (A^{-1}B)' fy = B' A^{-1} fy, A symmetric.
  return grad_f_x(x, y) + q_.B.transpose() * a_llt_.solve(fy);
}

double QuadraticBilevel::phi(const Vector& x) const { return eval_f(x, y_star(x)); }

Matrix QuadraticBilevel::phi_hessian() const {
  const Matrix k = a_llt_.solve(q_.B);
  const Matrix cross = k.transpose() * q_.M;
  Matrix h = k.transpose() * q_.H * k + cross + cross.transpose() + q_.S;
  return 0.5 * (h + h.transpose());
}

double smallest_eigenvalue_spd(const Matrix& a) {
  require(a.rows() == a.cols() && a.rows() > 0, ErrorKind::kShapeMismatch, "A must be square");
  require(is_symmetric(a), ErrorKind::kNonSpd, "A is not symmetric");
  const Eigen::LLT<Matrix> llt(a);
  require(llt.info() == Eigen::Success, ErrorKind::kNonSpd, "A has no Cholesky factorization");

  // Fixed, non-degenerate start so the estimate is reproducible.
  Vector z = Vector::LinSpaced(a.rows(), 1.0, 2.0);
  z.normalize();
  double rho = z.dot(a * z);
  constexpr int kMaxIters = 100000;
  for (int it = 0; it < kMaxIters; ++it) {
    Vector w = llt.solve(z);
    const double norm = w.norm();
    require(std::isfinite(norm) && norm > 0, ErrorKind::kNonSpd, "inverse iteration broke down");
    z = w / norm;
    const double next = z.dot(a * z);
    const double residual = (a * z - next * z).norm();
    const bool settled = std::abs(next - rho) <= 1e-15 * std::abs(next);
    rho = next;
    // Rayleigh quotient error is O(residual^2 / gap); both tests together
    // keep the relative error well under 1e-8.
    if (settled || residual <= 1e-10 * std::abs(rho)) break;
  }
  require(rho > 0, ErrorKind::kNonSpd, "A has a non-positive eigenvalue");
  return rho;
}

std::shared_ptr<const QuadraticBilevel> quadratic_make(QuadraticCoefficients q, double mu_min) {
  const Eigen::Index dy = q.A.rows();
  const Eigen::Index dx = q.B.cols();
  require_shape(dy > 0 && dx > 0, "dimensions must be positive");
  require_shape(q.A.cols() == dy, "A must be square");
  require_shape(q.B.rows() == dy, "B must be d_y x d_x");
  require_shape(q.c.size() == dy, "c must have length d_y");
  require_shape(q.H.rows() == dy && q.H.cols() == dy, "H must be d_y x d_y");
  require_shape(q.M.rows() == dy && q.M.cols() == dx, "M must be d_y x d_x");
  require_shape(q.p.size() == dy, "p must have length d_y");
  require_shape(q.S.rows() == dx && q.S.cols() == dx, "S must be d_x x d_x");
  require_shape(q.s.size() == dx, "s must have length d_x");
  require(is_symmetric(q.H), ErrorKind::kInvalidArgument, "H must be symmetric");
  require(is_symmetric(q.S), ErrorKind::kInvalidArgument, "S must be symmetric");
  require(mu_min > 0, ErrorKind::kInvalidArgument, "mu_min must be positive");

  const double mu = smallest_eigenvalue_spd(q.A);
  require(mu >= mu_min, ErrorKind::kNonSpd,
          "smallest eigenvalue of A is below the configured floor");
  return std::make_shared<const QuadraticBilevel>(std::move(q), mu);
}

QuadraticCoefficients random_quadratic(const RandomQuadraticOptions& o) {
  require(o.dim_x > 0 && o.dim_y > 0, ErrorKind::kInvalidArgument, "dimensions must be positive");
  require(o.condition >= 1.0 && o.mu > 0 && o.scale > 0, ErrorKind::kInvalidArgument,
          "need condition >= 1, mu > 0 and scale > 0");
  std::mt19937_64 rng(o.seed);
  const Eigen::Index dx = o.dim_x;
  const Eigen::Index dy = o.dim_y;
  QuadraticCoefficients q;
  q.A = spectral(random_orthogonal(dy, rng), log_spaced(dy, o.mu, o.mu * o.condition));
  q.B = gaussian_matrix(dy, dx, 1.0 / std::sqrt(static_cast<double>(dx)), rng);
  q.c = gaussian_vector(dy, o.offset_scale, rng);
  const Matrix h_basis = random_orthogonal(dy, rng);
  Vector h_eig = log_spaced(dy, 0.1, 1.0);
  q.H = spectral(h_basis, h_eig);
  q.M = o.with_cross_term ? gaussian_matrix(dy, dx, 0.1 / std::sqrt(static_cast<double>(dx)), rng)
                          : Matrix::Zero(dy, dx);
  q.p = gaussian_vector(dy, o.offset_scale, rng);
  q.S = spectral(random_orthogonal(dx, rng),
                 log_spaced(dx, o.outer_curvature_min, o.outer_curvature_max));
  q.s = gaussian_vector(dx, o.offset_scale, rng);
  for (Matrix* m : {&q.A, &q.B, &q.H, &q.M, &q.S}) *m *= o.scale;
  for (Vector* v : {&q.c, &q.p, &q.s}) *v *= o.scale;
  return q;
}

}  // namespace tfbo
