#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "support.hpp"
#include "tfbo/analysis.hpp"
#include "tfbo/dataset.hpp"
#include "tfbo/errors.hpp"
#include "tfbo/experiment.hpp"
#include "tfbo/trace_io.hpp"

using namespace tfbo;
using namespace tfbo::test;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "tfbo_test_harness";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no exception");
  return ErrorKind::kInvalidArgument;
}

Trace synthetic_trace(std::size_t T, double avg) {
  Trace tr;
  for (std::size_t t = 0; t < T; ++t) {
    IterationRecord r;
    r.t = t;
    r.grad_phi_norm_sq = avg;
    tr.records.push_back(r);
  }
  return tr;
}

ExperimentSpec quadratic_spec(Algorithm algo, std::size_t T, double scale) {
  ExperimentSpec spec;
  spec.problem = ProblemKind::kQuadratic;
  spec.algorithm = algo;
  spec.scale = scale;
  spec.set_iterations(T);
  return spec;
}

}  // namespace

TEST_CASE("libsvm parsing") {
  const Dataset ds = parse_libsvm("+1 1:0.5 3:2.0\n-1 2:1.0");
  REQUIRE(ds.size() == 2);
  REQUIRE(ds.dim() == 3);
  Matrix expected(2, 3);
  expected << 0.5, 0.0, 2.0, 0.0, 1.0, 0.0;
  CHECK(ds.features == expected);
  CHECK(ds.labels == vec({1.0, -1.0}));
  CHECK_FALSE(ds.corruption_mask.has_value());

  const Dataset zero_one = parse_libsvm("# comment\n1 1:1\n\n0 1:2\n");
  CHECK(zero_one.labels == vec({1.0, -1.0}));
  const Dataset one_two = parse_libsvm("2 1:1\n1 2:1\n");
  CHECK(one_two.labels == vec({-1.0, 1.0}));
}

TEST_CASE("libsvm errors") {
  CHECK(kind_of([] { parse_libsvm(""); }) == ErrorKind::kEmptyDataset);
  try {
    parse_libsvm("abc");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  try {
    parse_libsvm("+1 1:1\n-1 0:2\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK(kind_of([] { parse_libsvm("+1 1:x"); }) == ErrorKind::kParseError);
  CHECK(kind_of([] { parse_libsvm("1 1:1\n2 1:1\n3 1:1"); }) == ErrorKind::kNonBinaryLabels);
  CHECK(kind_of([] { parse_libsvm("5 1:1\n7 1:1"); }) == ErrorKind::kNonBinaryLabels);
  CHECK(kind_of([] { load_libsvm("/nonexistent/file.svm"); }) == ErrorKind::kIoError);
  CHECK(kind_of([] { load_libsvm(write_file("empty.svm", "")); }) == ErrorKind::kEmptyDataset);
}

TEST_CASE("libsvm loading from a file") {
  const Dataset ds = load_libsvm(write_file("two.svm", "+1 1:0.5 3:2.0\n-1 2:1.0\n"));
  CHECK(ds.size() == 2);
  CHECK(ds.features(0, 2) == 2.0);
}

TEST_CASE("dataset validation") {
  Dataset ds = parse_libsvm("+1 1:1\n-1 1:2\n");
  CHECK_NOTHROW(validate(ds));
  ds.labels(0) = 0.5;
  CHECK(kind_of([&] { validate(ds); }) == ErrorKind::kNonBinaryLabels);
  ds.labels(0) = 1.0;
  ds.corruption_mask = std::vector<bool>{true};
  CHECK(kind_of([&] { validate(ds); }) == ErrorKind::kShapeMismatch);
}

TEST_CASE("label corruption") {
  const SyntheticSplit split = make_synthetic_split(1000, 10, 3, 0);
  const Dataset& ds = split.train;

  const Dataset none = corrupt_labels(ds, 0.0, 1);
  CHECK(none.labels == ds.labels);
  CHECK(std::none_of(none.corruption_mask->begin(), none.corruption_mask->end(),
                     [](bool b) { return b; }));

  const Dataset all = corrupt_labels(ds, 1.0, 1);
  CHECK(all.labels == -ds.labels);
  CHECK(std::all_of(all.corruption_mask->begin(), all.corruption_mask->end(),
                    [](bool b) { return b; }));

  const Dataset some = corrupt_labels(ds, 0.1, 42);
  const auto flips = std::count(some.corruption_mask->begin(), some.corruption_mask->end(), true);
  CHECK(flips >= 70);
  CHECK(flips <= 130);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    CHECK((some.labels(i) != ds.labels(i)) == (*some.corruption_mask)[static_cast<std::size_t>(i)]);
  }
  CHECK(corrupt_labels(ds, 0.1, 42).labels == some.labels);
  CHECK(flip_masked(some, *some.corruption_mask).labels == ds.labels);

  CHECK(kind_of([&] { corrupt_labels(ds, 1.5, 0); }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("synthetic split is seeded") {
  const SyntheticSplit a = make_synthetic_split(50, 20, 4, 3);
  const SyntheticSplit b = make_synthetic_split(50, 20, 4, 3);
  CHECK(a.train.features == b.train.features);
  CHECK(a.validation.labels == b.validation.labels);
  CHECK_NOTHROW(validate(a.train));
  CHECK(a.train.labels.cwiseAbs().minCoeff() == 1.0);
}

TEST_CASE("trace CSV round trip is exact") {
  auto q = quadratic_make(random_quadratic({.dim_x = 3, .dim_y = 2, .seed = 1}));
  DtfboConfig cfg;
  cfg.T = 25;
  Trace tr = dtfbo_run(*q, cfg, vec({1.0 / 3.0, -2.0, 1e-300}));
  tr.records[3].elapsed_ms = 0.1;
  tr.records[4].phi = std::numeric_limits<double>::infinity();

  std::stringstream ss;
  write_trace_csv(ss, tr.records);
  const std::string text = ss.str();
  CHECK(text.substr(0, text.find('\n')) == kTraceCsvHeader);
  const std::vector<IterationRecord> back = read_trace_csv(ss);
  REQUIRE(back.size() == tr.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const IterationRecord& a = tr.records[i];
    const IterationRecord& b = back[i];
    CHECK(a.t == b.t);
    CHECK(a.grad_phi_norm_sq == b.grad_phi_norm_sq);
    CHECK(a.hypergrad_norm_sq == b.hypergrad_norm_sq);
    CHECK(a.inner_grad_norm_sq == b.inner_grad_norm_sq);
    CHECK(a.ls_grad_norm_sq == b.ls_grad_norm_sq);
    CHECK(a.alpha == b.alpha);
    CHECK(a.beta == b.beta);
    CHECK(a.gamma == b.gamma);
    CHECK(a.phi == b.phi);
    CHECK(a.P == b.P);
    CHECK(a.Q == b.Q);
    CHECK(a.f_val == b.f_val);
    CHECK(a.g_val == b.g_val);
    CHECK(a.elapsed_ms == b.elapsed_ms);
  }
  std::stringstream again;
  write_trace_csv(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("trace CSV reader rejects malformed input") {
  std::stringstream bad_header("t,foo\n");
  CHECK(kind_of([&] { read_trace_csv(bad_header); }) == ErrorKind::kParseError);
  std::stringstream short_row(std::string(kTraceCsvHeader) + "\n1,2,3\n");
  CHECK(kind_of([&] { read_trace_csv(short_row); }) == ErrorKind::kParseError);
  CHECK(kind_of([] { read_trace_csv(std::string("/nonexistent/t.csv")); }) ==
        ErrorKind::kIoError);
}

TEST_CASE("format_real") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(200.0) == "200");
  CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_real(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_real(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("rate fit") {
  std::vector<RatePoint> inverse, flat, scaled;
  for (double T : {100.0, 200.0, 400.0, 800.0}) {
    inverse.push_back({T, 1.0 / T});
    flat.push_back({T, 0.3});
    scaled.push_back({T, 7.5 / T});
  }
  CHECK(rate_fit(inverse) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(rate_fit(flat)) <= 1e-12);
  CHECK(rate_fit(scaled) == doctest::Approx(rate_fit(inverse)).epsilon(1e-12));

  std::vector<Trace> traces;
  for (std::size_t T : {10, 20, 40}) traces.push_back(synthetic_trace(T, 2.0 / double(T)));
  CHECK(rate_fit(traces) == doctest::Approx(-1.0).epsilon(1e-9));

  const std::vector<RatePoint> two(inverse.begin(), inverse.begin() + 2);
  CHECK(kind_of([&] { rate_fit(two); }) == ErrorKind::kInsufficientData);
  std::vector<RatePoint> dup = inverse;
  dup[1].iterations = dup[0].iterations;
  dup.resize(3);
  CHECK(kind_of([&] { rate_fit(dup); }) == ErrorKind::kInsufficientData);
  Trace no_analytic = synthetic_trace(5, 1.0);
  no_analytic.records[2].grad_phi_norm_sq.reset();
  CHECK(kind_of([&] { average_grad_phi_norm_sq(no_analytic); }) ==
        ErrorKind::kInsufficientData);
  CHECK(kind_of([] { average_grad_phi_norm_sq(Trace{}); }) == ErrorKind::kInsufficientData);
}

TEST_CASE("weight separation") {
  const std::vector<bool> mask{false, true, false, true, false};
  const WeightSeparation zero = weight_separation(Vector::Zero(5), mask);
  CHECK(zero.mean_clean == 0.5);
  CHECK(zero.mean_corrupt == 0.5);

  const WeightSeparation split = weight_separation(vec({3, -3, 3, -3, 3}), mask);
  CHECK(split.mean_clean == doctest::Approx(0.9525741268224334).epsilon(1e-15));
  CHECK(split.mean_corrupt == doctest::Approx(0.04742587317756678).epsilon(1e-14));

  CHECK(kind_of([] { weight_separation(Vector::Zero(3), std::nullopt); }) ==
        ErrorKind::kMaskMissing);
  CHECK(kind_of([&] { weight_separation(Vector::Zero(3), mask); }) ==
        ErrorKind::kShapeMismatch);
  CHECK(std::isnan(weight_separation(Vector::Zero(2), std::vector<bool>{false, false})
                       .mean_corrupt));
}

TEST_CASE("initial points") {
  auto q = quadratic_make(random_quadratic({.dim_x = 4, .dim_y = 3, .seed = 0}));
  const InitialPoint z = initial_point(*q, InitPolicy::kZeros, 5);
  CHECK(z.x.isZero());
  CHECK(z.v.size() == 3);
  const InitialPoint r = initial_point(*q, InitPolicy::kRandom, 5);
  CHECK(r.x.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(r.y.size() == 3);
  CHECK_FALSE(r.x.isZero());
  CHECK(initial_point(*q, InitPolicy::kRandom, 5).x == r.x);
}

TEST_CASE("run_experiment writes identical CSVs for identical specs") {
  for (ProblemKind problem : {ProblemKind::kQuadratic, ProblemKind::kHyperclean}) {
    ExperimentSpec spec;
    spec.problem = problem;
    spec.algorithm = Algorithm::kStfbo;
    spec.C = 0.5;
    spec.init = InitPolicy::kRandom;
    spec.seed = 3;
    spec.set_iterations(40);
    spec.out_path = (scratch_dir() / "a.csv").string();
    run_experiment(spec);
    const std::string first = slurp(spec.out_path);
    spec.out_path = (scratch_dir() / "b.csv").string();
    const ExperimentResult r = run_experiment(spec);
    CHECK(slurp(spec.out_path) == first);
    CHECK(std::count(first.begin(), first.end(), '\n') == 41);
    CHECK(r.metrics.front().first == "iterations");
  }
}

TEST_CASE("regsel: D-TFBO lowers the validation loss") {
  ExperimentSpec spec;
  spec.problem = ProblemKind::kRegsel;
  spec.algorithm = Algorithm::kDtfbo;
  spec.n_train = 200;
  spec.n_val = 100;
  spec.n_features = 20;
  spec.set_iterations(300);
  const ExperimentResult r = run_experiment(spec);
  REQUIRE(r.trace.ok());
  CHECK(r.trace.records.back().f_val < r.trace.records.front().f_val);
  CHECK(r.sweep_metric < r.trace.records.front().f_val);
}

TEST_CASE("hyperclean requires C and paired paths") {
  ExperimentSpec spec;
  spec.problem = ProblemKind::kHyperclean;
  CHECK(kind_of([&] { build_problem(spec); }) == ErrorKind::kConfigError);
  spec.C = 0.5;
  spec.train_path = "only-train.svm";
  CHECK(kind_of([&] { build_problem(spec); }) == ErrorKind::kConfigError);
}

TEST_CASE("problems load from libsvm files") {
  const SyntheticSplit split = make_synthetic_split(30, 10, 3, 1);
  auto to_text = [](const Dataset& ds) {
    std::string out;
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
      out += ds.labels(i) > 0 ? "+1" : "-1";
      for (Eigen::Index k = 0; k < ds.dim(); ++k) {
        out += " " + std::to_string(k + 1) + ":" + format_real(ds.features(i, k));
      }
      out += "\n";
    }
    return out;
  };
  ExperimentSpec spec;
  spec.problem = ProblemKind::kRegsel;
  spec.train_path = write_file("train.svm", to_text(split.train));
  spec.val_path = write_file("val.svm", to_text(split.validation));
  const BuiltProblem built = build_problem(spec);
  CHECK(built.oracle->dim_x() == 3);
  CHECK(built.train->features == split.train.features);
}

TEST_CASE("sensitivity sweep") {
  ExperimentSpec spec = quadratic_spec(Algorithm::kDtfbo, 200, 10.0);
  const std::vector<double> same{5.0, 5.0};
  CHECK(sensitivity_sweep(spec, 5.0, same).relative_average_change == 0.0);

  const std::vector<double> inits{2.0, 4.0, 6.0, 8.0};
  const SweepResult d = sensitivity_sweep(spec, 5.0, inits);
  CHECK(d.cells.size() == 4);
  CHECK(d.relative_average_change >= 0.0);
  CHECK(d.relative_average_change <= 0.10);

  const SweepResult s = sensitivity_sweep(quadratic_spec(Algorithm::kStfbo, 200, 10.0), 5.0, inits);
  CHECK(s.relative_average_change <= 0.10);

  ExperimentSpec tuned = quadratic_spec(Algorithm::kTuned, 200, 10.0);
  const auto q = std::dynamic_pointer_cast<const QuadraticBilevel>(build_problem(tuned).oracle);
  REQUIRE(q);
  tuned.tuned.lr_x =
      1.0 / Eigen::SelfAdjointEigenSolver<Matrix>(q->phi_hessian()).eigenvalues().maxCoeff();
  tuned.tuned.lr_y = tuned.tuned.lr_v = 1.0 / q->lipschitz_g();
  const std::vector<double> multipliers{0.25, 0.5, 2.0, 4.0};
  const SweepResult t = sensitivity_sweep(tuned, 1.0, multipliers);
  CHECK(t.relative_average_change > d.relative_average_change);

  const std::string path = (scratch_dir() / "sweep.csv").string();
  write_sweep_csv(path, t);
  const std::string text = slurp(path);
  CHECK(text.rfind("init_value,metric,relative_change\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);

  CHECK(kind_of([&] { sensitivity_sweep(spec, 5.0, std::vector<double>{1.0}); }) ==
        ErrorKind::kInsufficientData);
}

TEST_CASE("failed sweep cells count as infinite change") {
  ExperimentSpec tuned = quadratic_spec(Algorithm::kTuned, 100, 1.0);
  tuned.tuned.lr_x = 0.5;
  tuned.tuned.lr_y = tuned.tuned.lr_v = 0.05;
  const SweepResult r = sensitivity_sweep(tuned, 1.0, std::vector<double>{1.0, 1000.0});
  CHECK(r.cells[0].relative_change == 0.0);
  CHECK(r.cells[1].error.has_value());
  CHECK(std::isinf(r.cells[1].relative_change));
  CHECK(std::isinf(r.relative_average_change));
}

TEST_CASE("spec parsing") {
  KeyValues kv{{"problem", "quadratic"}, {"algo", "dtfbo"}, {"T", "50"},
               {"eps-y", "auto"},        {"c-y", "0.5"},    {"eps-v", "1e-4"},
               {"alpha0", "2"},          {"scale", "10"},   {"init", "random"}};
  const ExperimentSpec spec = parse_experiment_spec(kv);
  CHECK(spec.iterations() == 50);
  CHECK(spec.dtfbo.resolved_eps_y() == 0.01);
  CHECK(spec.dtfbo.resolved_eps_v() == 1e-4);
  CHECK(spec.dtfbo.alpha_0 == 2.0);
  CHECK(spec.scale == 10.0);
  CHECK(spec.init == InitPolicy::kRandom);

  auto with = [&](const std::string& key, const std::string& value) {
    KeyValues copy = kv;
    copy[key] = value;
    return copy;
  };
  auto without = [&](const std::string& key) {
    KeyValues copy = kv;
    copy.erase(key);
    return copy;
  };
  CHECK(kind_of([&] { parse_experiment_spec(with("bogus", "1")); }) == ErrorKind::kConfigError);
  CHECK(kind_of([&] { parse_experiment_spec(with("problem", "covtype")); }) ==
        ErrorKind::kConfigError);
  CHECK(kind_of([&] { parse_experiment_spec(with("T", "ten")); }) == ErrorKind::kConfigError);
  CHECK(kind_of([&] { parse_experiment_spec(with("alpha0", "-1")); }) == ErrorKind::kConfigError);
  CHECK(kind_of([&] { parse_experiment_spec(without("T")); }) == ErrorKind::kConfigError);
  CHECK(kind_of([&] { parse_experiment_spec(with("algo", "tuned")); }) == ErrorKind::kConfigError);
  CHECK(kind_of([&] { parse_experiment_spec(with("problem", "hyperclean")); }) ==
        ErrorKind::kConfigError);
  CHECK_NOTHROW(parse_experiment_spec(with("algo", "stfbo")));
  CHECK(kind_of([] { parse_problem_kind("nope"); }) == ErrorKind::kConfigError);
  CHECK(kind_of([] { parse_algorithm("adam"); }) == ErrorKind::kConfigError);
}

TEST_CASE("spec files") {
  const KeyValues kv = load_spec_file(
      write_file("ok.spec", "# run\nproblem = quadratic\n  algo=stfbo  \n\nT = 10 # inline\n"));
  CHECK(kv.at("problem") == "quadratic");
  CHECK(kv.at("algo") == "stfbo");
  CHECK(kv.at("T") == "10");
  CHECK(kind_of([] { load_spec_file(write_file("dup.spec", "T = 1\nT = 2\n")); }) ==
        ErrorKind::kConfigError);
  CHECK(kind_of([] { load_spec_file(write_file("bad.spec", "just words\n")); }) ==
        ErrorKind::kConfigError);
  CHECK(kind_of([] { load_spec_file("/nonexistent/x.spec"); }) == ErrorKind::kIoError);
}

TEST_CASE("every documented spec key is accepted") {
  for (const SpecKey& key : spec_keys()) {
    CHECK(std::string(key.help).size() > 0);
    CHECK(std::string(key.value_hint).size() > 0);
  }
  KeyValues kv{{"problem", "hyperclean"}, {"algo", "tuned"}, {"T", "5"}, {"C", "0.5"},
               {"lr-x", "0.1"},           {"lr-y", "0.1"},   {"lr-v", "0.1"}};
  const ExperimentSpec spec = parse_experiment_spec(kv);
  CHECK(spec.tuned.lr_x == 0.1);
  CHECK(spec.C.value() == 0.5);
}
