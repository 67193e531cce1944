#include "tfbo/oracle.hpp"

#include <string>

#include "tfbo/errors.hpp"

namespace tfbo {
namespace {

void check_len(const char* name, const Vector& v, Eigen::Index expected) {
  if (v.size() != expected) {
    fail(ErrorKind::kShapeMismatch, std::string(name) + " has length " + std::to_string(v.size()) +
                                        ", expected " + std::to_string(expected));
  }
}

}  // namespace

void check_point(const ProblemOracle& oracle, const Vector& x, const Vector& y) {
  check_len("x", x, oracle.dim_x());
  check_len("y", y, oracle.dim_y());
}

void check_point(const ProblemOracle& oracle, const Vector& x, const Vector& y,
                 const Vector& v) {
  check_point(oracle, x, y);
  check_len("v", v, oracle.dim_y());
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace tfbo
