#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tfbo/solvers.hpp"

namespace tfbo {

/// (1/T) sum_t |grad phi(x_t)|^2 over a trace. Throws InsufficientData if the
/// trace is empty or lacks analytic hypergradients.
double average_grad_phi_norm_sq(const Trace& trace);

struct RatePoint {
  double iterations;
  double average;
};

/// Least-squares slope of log(average) against log(iterations). Needs at
/// least three points with distinct iteration counts and positive averages.
double rate_fit(std::span<const RatePoint> points);
/// Same, with T = records.size() and the average from average_grad_phi_norm_sq.
double rate_fit(std::span<const Trace> traces);

struct WeightSeparation {
  double mean_clean;
  double mean_corrupt;
};

/// Mean sigmoid(lambda_i) over clean and over corrupted samples. A group with
/// no members yields NaN. Throws MaskMissing without a mask.
WeightSeparation weight_separation(const Vector& lambda,
                                   const std::optional<std::vector<bool>>& mask);

}  // namespace tfbo
