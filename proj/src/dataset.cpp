#include "tfbo/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string_view>
#include <utility>

#include "tfbo/errors.hpp"
#include "tfbo/logistic.hpp"

namespace tfbo {
namespace {

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_index(std::string_view tok, long& out) {
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && out >= 1;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double map_label(double raw, const std::set<double>& seen) {
  const bool pm = std::all_of(seen.begin(), seen.end(), [](double l) { return l == 1 || l == -1; });
  if (pm) return raw;
  const bool zero_one = std::all_of(seen.begin(), seen.end(), [](double l) { return l == 0 || l == 1; });
  if (zero_one) return raw == 1 ? 1.0 : -1.0;
  const bool one_two = std::all_of(seen.begin(), seen.end(), [](double l) { return l == 1 || l == 2; });
  if (one_two) return raw == 1 ? 1.0 : -1.0;
  fail(ErrorKind::kNonBinaryLabels, "labels must take two values ({-1,+1}, {0,1} or {1,2})");
}

}  // namespace

void validate(const Dataset& ds) {
  require(ds.size() > 0, ErrorKind::kEmptyDataset, "dataset has no samples");
  require(ds.labels.size() == ds.size(), ErrorKind::kShapeMismatch,
          "label count differs from row count");
  for (Eigen::Index i = 0; i < ds.labels.size(); ++i) {
    require(ds.labels(i) == 1.0 || ds.labels(i) == -1.0, ErrorKind::kNonBinaryLabels,
            "labels must be -1 or +1");
  }
  require(ds.features.allFinite(), ErrorKind::kInvalidArgument, "features must be finite");
  if (ds.corruption_mask) {
    require(static_cast<Eigen::Index>(ds.corruption_mask->size()) == ds.size(),
            ErrorKind::kShapeMismatch, "corruption mask length differs from sample count");
  }
}

Dataset parse_libsvm(const std::string& text) {
  struct Row {
    double label;
    std::vector<std::pair<long, double>> entries;
  };
  std::vector<Row> rows;
  std::set<double> seen;
  long max_index = 0;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    Row row;
    if (!parse_double(tokens[0], row.label)) throw ParseError(line_no, "bad label");
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const auto colon = tokens[k].find(':');
      long idx = 0;
      double val = 0;
      if (colon == std::string_view::npos || !parse_index(tokens[k].substr(0, colon), idx) ||
          !parse_double(tokens[k].substr(colon + 1), val)) {
        throw ParseError(line_no, "bad feature token '" + std::string(tokens[k]) + "'");
      }
      max_index = std::max(max_index, idx);
      row.entries.emplace_back(idx, val);
    }
    seen.insert(row.label);
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorKind::kEmptyDataset, "no samples in input");
  require(seen.size() <= 2, ErrorKind::kNonBinaryLabels, "more than two distinct labels");

  Dataset ds;
  ds.features = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), max_index);
  ds.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    ds.labels(r) = map_label(rows[i].label, seen);
    for (const auto& [idx, val] : rows[i].entries) ds.features(r, idx - 1) = val;
  }
  return ds;
}

Dataset load_libsvm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_libsvm(buf.str());
}

Dataset corrupt_labels(const Dataset& ds, double p, std::uint64_t seed) {
  require(p >= 0.0 && p <= 1.0, ErrorKind::kInvalidArgument, "p must lie in [0, 1]");
  validate(ds);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<bool> mask(static_cast<std::size_t>(ds.size()));
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = unif(rng) < p;
  return flip_masked(ds, mask);
}

Dataset flip_masked(const Dataset& ds, const std::vector<bool>& mask) {
  require(static_cast<Eigen::Index>(mask.size()) == ds.size(), ErrorKind::kShapeMismatch,
          "mask length differs from sample count");
  Dataset out = ds;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.labels(static_cast<Eigen::Index>(i)) = -out.labels(static_cast<Eigen::Index>(i));
  out.corruption_mask = mask;
  return out;
}

SyntheticSplit make_synthetic_split(Eigen::Index n_train, Eigen::Index n_val, Eigen::Index dim,
                                    std::uint64_t seed, double margin_scale) {
  require(n_train > 0 && n_val > 0 && dim > 0, ErrorKind::kInvalidArgument,
          "synthetic split needs positive sizes");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Vector w(dim);
  for (Eigen::Index k = 0; k < dim; ++k) w(k) = normal(rng);
  w *= margin_scale / w.norm();

  auto draw = [&](Eigen::Index n) {
    Dataset ds;
    ds.features.resize(n, dim);
    ds.labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < dim; ++k) ds.features(i, k) = normal(rng);
      ds.labels(i) = unif(rng) < sigmoid(ds.features.row(i).dot(w)) ? 1.0 : -1.0;
    }
    return ds;
  };
  SyntheticSplit split;
  split.train = draw(n_train);
  split.validation = draw(n_val);
  return split;
}

}  // namespace tfbo
