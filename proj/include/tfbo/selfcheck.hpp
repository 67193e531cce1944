#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfbo/oracle.hpp"

namespace tfbo {

struct SelfCheckFailure {
  std::string check;
  std::string detail;
};

struct SelfCheckReport {
  std::size_t checks_run = 0;
  std::vector<SelfCheckFailure> failures;

  bool ok() const { return failures.empty(); }
  bool failed(const std::string& check) const;
};

struct SelfCheckOptions {
  /// Tolerance for derivative-vs-central-difference comparisons.
  double fd_tol = 1e-6;
  /// Tolerance for the algebraic operator checks (linearity, symmetry).
  double operator_tol = 1e-10;
  std::uint64_t seed = 0;
};

/// Probes an oracle at (x, y): linearity and symmetry of hvp_g_yy, the
/// strong-convexity floor when mu is reported, finiteness of every output,
/// and grad_g_y / grad_f_x / grad_f_y / hvp_g_yy / jvp_g_xy against central
/// differences with h = 1e-5 (1 + |coordinate|). Never throws for a failing
/// check; oracle exceptions are reported as failures too.
SelfCheckReport oracle_selfcheck(const ProblemOracle& oracle, const Vector& x, const Vector& y,
                                 std::size_t trials, const SelfCheckOptions& options = {});

/// Central-difference gradient of a scalar function, per-coordinate step
/// h = 1e-5 (1 + |z_k|).
template <class Fn>
Vector central_difference(const Fn& fn, const Vector& z) {
  Vector out(z.size());
  Vector probe = z;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const double h = 1e-5 * (1.0 + std::abs(z(k)));
    probe(k) = z(k) + h;
    const double up = fn(probe);
    probe(k) = z(k) - h;
    const double down = fn(probe);
    probe(k) = z(k);
    out(k) = (up - down) / (2.0 * h);
  }
  return out;
}

}  // namespace tfbo
