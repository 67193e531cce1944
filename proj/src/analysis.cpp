#include "tfbo/analysis.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "tfbo/errors.hpp"
#include "tfbo/logistic.hpp"

namespace tfbo {

double average_grad_phi_norm_sq(const Trace& trace) {
  require(!trace.records.empty(), ErrorKind::kInsufficientData, "trace has no records");
  double sum = 0.0;
  for (const IterationRecord& r : trace.records) {
    require(r.grad_phi_norm_sq.has_value(), ErrorKind::kInsufficientData,
            "trace lacks analytic hypergradient norms");
    sum += *r.grad_phi_norm_sq;
  }
  return sum / static_cast<double>(trace.records.size());
}

double rate_fit(std::span<const RatePoint> points) {
  require(points.size() >= 3, ErrorKind::kInsufficientData, "rate fit needs at least 3 traces");
  std::set<double> distinct;
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const RatePoint& p : points) {
    require(p.iterations > 0 && p.average > 0 && std::isfinite(p.average),
            ErrorKind::kInsufficientData, "rate fit needs positive T and positive averages");
    distinct.insert(p.iterations);
    mean_x += std::log(p.iterations);
    mean_y += std::log(p.average);
  }
  require(distinct.size() == points.size(), ErrorKind::kInsufficientData,
          "rate fit needs distinct T values");
  const auto n = static_cast<double>(points.size());
  mean_x /= n;
  mean_y /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (const RatePoint& p : points) {
    const double dx = std::log(p.iterations) - mean_x;
    sxy += dx * (std::log(p.average) - mean_y);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double rate_fit(std::span<const Trace> traces) {
  std::vector<RatePoint> points;
  points.reserve(traces.size());
  for (const Trace& tr : traces) {
    points.push_back({static_cast<double>(tr.records.size()), average_grad_phi_norm_sq(tr)});
  }
  return rate_fit(std::span<const RatePoint>(points));
}

WeightSeparation weight_separation(const Vector& lambda,
                                   const std::optional<std::vector<bool>>& mask) {
  require(mask.has_value(), ErrorKind::kMaskMissing, "no corruption mask available");
  require(static_cast<Eigen::Index>(mask->size()) == lambda.size(), ErrorKind::kShapeMismatch,
          "mask length differs from weight count");
  double clean = 0.0;
  double corrupt = 0.0;
  std::size_t n_clean = 0;
  std::size_t n_corrupt = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double w = sigmoid(lambda(i));
    if ((*mask)[static_cast<std::size_t>(i)]) {
      corrupt += w;
      ++n_corrupt;
    } else {
      clean += w;
      ++n_clean;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {n_clean ? clean / static_cast<double>(n_clean) : nan,
          n_corrupt ? corrupt / static_cast<double>(n_corrupt) : nan};
}

}  // namespace tfbo
