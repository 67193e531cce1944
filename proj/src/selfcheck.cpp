#include "tfbo/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>

namespace tfbo {
namespace {

class Checker {
 public:
  explicit Checker(SelfCheckReport& report) : report_(report) {}

  void expect(bool ok, const std::string& check, const std::string& detail) {
    ++report_.checks_run;
    if (!ok && !report_.failed(check)) report_.failures.push_back({check, detail});
  }

  template <class Fn>
  void guarded(const std::string& check, Fn&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      expect(false, check, std::string("oracle threw: ") + e.what());
    }
  }

 private:
  SelfCheckReport& report_;
};

std::string describe(double got, double want) {
  std::ostringstream os;
  os.precision(17);
  os << "got " << got << ", expected " << want;
  return os.str();
}

// Infinity-norm comparison, relative to the magnitude of the reference.
bool close(const Vector& got, const Vector& want, double tol, double* err) {
  *err = (got - want).lpNorm<Eigen::Infinity>();
  return *err <= tol * (1.0 + want.lpNorm<Eigen::Infinity>());
}

Vector random_unit(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v / v.norm();
}

}  // namespace

bool SelfCheckReport::failed(const std::string& check) const {
  return std::any_of(failures.begin(), failures.end(),
                     [&](const SelfCheckFailure& f) { return f.check == check; });
}

SelfCheckReport oracle_selfcheck(const ProblemOracle& oracle, const Vector& x, const Vector& y,
                                 std::size_t trials, const SelfCheckOptions& opt) {
  SelfCheckReport report;
  Checker c(report);
  if (trials == 0) {
    c.expect(false, "precondition", "trials must be >= 1");
    return report;
  }
  if (x.size() != oracle.dim_x() || y.size() != oracle.dim_y()) {
    c.expect(false, "precondition", "point does not match oracle dimensions");
    return report;
  }

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  const Eigen::Index dy = oracle.dim_y();

  c.guarded("finite", [&] {
    c.expect(std::isfinite(oracle.eval_f(x, y)), "finite", "eval_f is not finite");
    c.expect(std::isfinite(oracle.eval_g(x, y)), "finite", "eval_g is not finite");
    c.expect(oracle.grad_f_x(x, y).allFinite(), "finite", "grad_f_x is not finite");
    c.expect(oracle.grad_f_y(x, y).allFinite(), "finite", "grad_f_y is not finite");
    c.expect(oracle.grad_g_y(x, y).allFinite(), "finite", "grad_g_y is not finite");
  });

  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Vector u = random_unit(dy, rng);
    const Vector v = random_unit(dy, rng);
    const double a = coef(rng);
    const double b = coef(rng);

    c.guarded("linearity", [&] {
      const Vector hu = oracle.hvp_g_yy(x, y, u);
      const Vector hv = oracle.hvp_g_yy(x, y, v);
      const Vector lhs = oracle.hvp_g_yy(x, y, a * u + b * v);
      const Vector rhs = a * hu + b * hv;
      const double err = (lhs - rhs).norm();
      c.expect(hu.allFinite() && hv.allFinite(), "finite", "hvp_g_yy is not finite");
      c.expect(err <= opt.operator_tol * (1.0 + (a * hu).norm() + (b * hv).norm()), "linearity",
               "hvp(a u + b v) - a hvp(u) - b hvp(v) has norm " + std::to_string(err));
    });

    c.guarded("symmetry", [&] {
      const double uhv = u.dot(oracle.hvp_g_yy(x, y, v));
      const double vhu = v.dot(oracle.hvp_g_yy(x, y, u));
      c.expect(std::abs(uhv - vhu) <= opt.operator_tol * (1.0 + std::abs(uhv)), "symmetry",
               "u'Hv = " + std::to_string(uhv) + " but v'Hu = " + std::to_string(vhu));
    });

    if (const auto mu = oracle.mu()) {
      c.guarded("strong_convexity", [&] {
        const double curv = v.dot(oracle.hvp_g_yy(x, y, v));
        // mu itself may carry ~1e-8 relative estimation error.
        c.expect(curv >= *mu * (1.0 - 1e-8) - 1e-14, "strong_convexity",
                 "v'Hv below mu for a unit v: " + describe(curv, *mu));
      });
    }

    c.guarded("finite", [&] {
      c.expect(oracle.jvp_g_xy(x, y, v).allFinite(), "finite", "jvp_g_xy is not finite");
    });
  }

  double err = 0.0;
  c.guarded("grad_g_y", [&] {
    const Vector fd = central_difference([&](const Vector& yy) { return oracle.eval_g(x, yy); }, y);
    c.expect(close(oracle.grad_g_y(x, y), fd, opt.fd_tol, &err), "grad_g_y",
             "max abs deviation from central differences " + std::to_string(err));
  });
  c.guarded("grad_f_x", [&] {
    const Vector fd = central_difference([&](const Vector& xx) { return oracle.eval_f(xx, y); }, x);
    c.expect(close(oracle.grad_f_x(x, y), fd, opt.fd_tol, &err), "grad_f_x",
             "max abs deviation from central differences " + std::to_string(err));
  });
  c.guarded("grad_f_y", [&] {
    const Vector fd = central_difference([&](const Vector& yy) { return oracle.eval_f(x, yy); }, y);
    c.expect(close(oracle.grad_f_y(x, y), fd, opt.fd_tol, &err), "grad_f_y",
             "max abs deviation from central differences " + std::to_string(err));
  });

  // Second-order terms against differences of the analytic gradient.
  const Vector u = random_unit(dy, rng);
  c.guarded("hvp_g_yy", [&] {
    const Vector fd = central_difference(
        [&](const Vector& yy) { return oracle.grad_g_y(x, yy).dot(u); }, y);
    const Vector hu = oracle.hvp_g_yy(x, y, u);
    c.expect(close(hu, fd, opt.fd_tol, &err), "hvp_g_yy",
             "max abs deviation from differenced grad_g_y " + std::to_string(err));
  });
  c.guarded("jvp_g_xy", [&] {
    const Vector fd = central_difference(
        [&](const Vector& xx) { return oracle.grad_g_y(xx, y).dot(u); }, x);
    c.expect(close(oracle.jvp_g_xy(x, y, u), fd, opt.fd_tol, &err), "jvp_g_xy",
             "max abs deviation from differenced grad_g_y " + std::to_string(err));
  });
  return report;
}

}  // namespace tfbo
