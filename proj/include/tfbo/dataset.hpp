#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tfbo/oracle.hpp"

namespace tfbo {

/// Dense binary classification data. The corruption mask is evaluation-only
/// ground truth and is never read by the problem oracles.
struct Dataset {
  Matrix features;  // n x d
  Vector labels;    // n entries in {-1, +1}
  std::optional<std::vector<bool>> corruption_mask;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

/// Throws EmptyDataset, NonBinaryLabels, ShapeMismatch or InvalidArgument
/// (non-finite features).
void validate(const Dataset& ds);

/// Parses `label idx:val idx:val ...` lines with 1-based indices. Labels
/// {+1, -1}, {1, 0} and {1, 2} are mapped to +1/-1; anything else is
/// NonBinaryLabels. The feature count is the largest index seen.
Dataset load_libsvm(const std::string& path);
Dataset parse_libsvm(const std::string& text);

/// Flips each label independently with probability p, deterministically in
/// seed, and records the flipped positions in corruption_mask.
Dataset corrupt_labels(const Dataset& ds, double p, std::uint64_t seed);

/// Re-applies a mask: flips exactly the labels marked true.
Dataset flip_masked(const Dataset& ds, const std::vector<bool>& mask);

struct SyntheticSplit {
  Dataset train;
  Dataset validation;
};

/// Gaussian features with labels drawn from a logistic model around a planted
/// unit-norm separator scaled by `margin_scale`. Train and validation share the
/// separator.
SyntheticSplit make_synthetic_split(Eigen::Index n_train, Eigen::Index n_val, Eigen::Index dim,
                                    std::uint64_t seed, double margin_scale = 4.0);

}  // namespace tfbo
