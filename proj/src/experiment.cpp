#include "tfbo/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "tfbo/analysis.hpp"
#include "tfbo/errors.hpp"
#include "tfbo/logistic.hpp"
#include "tfbo/quadratic.hpp"
#include "tfbo/trace_io.hpp"

namespace tfbo {

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kQuadratic: return "quadratic";
    case ProblemKind::kRegsel: return "regsel";
    case ProblemKind::kHyperclean: return "hyperclean";
  }
  return "?";
}

const char* to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kDtfbo: return "dtfbo";
    case Algorithm::kStfbo: return "stfbo";
    case Algorithm::kTuned: return "tuned";
  }
  return "?";
}

ProblemKind parse_problem_kind(const std::string& tag) {
  if (tag == "quadratic") return ProblemKind::kQuadratic;
  if (tag == "regsel") return ProblemKind::kRegsel;
  if (tag == "hyperclean") return ProblemKind::kHyperclean;
  fail(ErrorKind::kConfigError, "unknown problem '" + tag + "'");
}

Algorithm parse_algorithm(const std::string& tag) {
  if (tag == "dtfbo") return Algorithm::kDtfbo;
  if (tag == "stfbo") return Algorithm::kStfbo;
  if (tag == "tuned") return Algorithm::kTuned;
  fail(ErrorKind::kConfigError, "unknown algorithm '" + tag + "'");
}

std::size_t ExperimentSpec::iterations() const {
  switch (algorithm) {
    case Algorithm::kDtfbo: return dtfbo.T;
    case Algorithm::kStfbo: return stfbo.T;
    case Algorithm::kTuned: return tuned.T;
  }
  return 0;
}

void ExperimentSpec::set_iterations(std::size_t T) {
  dtfbo.T = T;
  stfbo.T = T;
  tuned.T = T;
}

RandomQuadraticOptions benchmark_quadratic_options(std::uint64_t seed) {
  RandomQuadraticOptions o;
  o.dim_x = 10;
  o.dim_y = 10;
  o.condition = 10.0;
  o.offset_scale = 1.0;
  o.seed = seed;
  return o;
}

namespace {

struct DataDefaults {
  Eigen::Index n_train;
  Eigen::Index n_val;
  Eigen::Index n_features;
};

SyntheticSplit load_or_synthesize(const ExperimentSpec& spec, DataDefaults defaults) {
  if (!spec.train_path.empty() || !spec.val_path.empty()) {
    require(!spec.train_path.empty() && !spec.val_path.empty(), ErrorKind::kConfigError,
            "train and val paths must be given together");
    return {load_libsvm(spec.train_path), load_libsvm(spec.val_path)};
  }
  return make_synthetic_split(spec.n_train.value_or(defaults.n_train),
                              spec.n_val.value_or(defaults.n_val),
                              spec.n_features.value_or(defaults.n_features), spec.seed);
}

}  // namespace

BuiltProblem build_problem(const ExperimentSpec& spec) {
  BuiltProblem built;
  switch (spec.problem) {
    case ProblemKind::kQuadratic: {
      RandomQuadraticOptions o = benchmark_quadratic_options(spec.seed);
      o.dim_x = spec.dim_x;
      o.dim_y = spec.dim_y;
      o.condition = spec.condition;
      o.offset_scale = spec.offset_scale;
      o.scale = spec.scale;
      built.oracle = quadratic_make(random_quadratic(o));
      break;
    }
    case ProblemKind::kRegsel: {
      SyntheticSplit data = load_or_synthesize(spec, {200, 100, 20});
      built.oracle = regsel_make(data.train, data.validation);
      built.train = std::move(data.train);
      built.validation = std::move(data.validation);
      break;
    }
    case ProblemKind::kHyperclean: {
      require(spec.C.has_value(), ErrorKind::kConfigError,
              "hyperclean needs an explicit regularization constant C");
      SyntheticSplit data = load_or_synthesize(spec, {300, 100, 10});
      Dataset noisy = corrupt_labels(data.train, spec.corruption, spec.seed + 1);
      built.oracle = hyperclean_make(noisy, data.validation, *spec.C);
      built.train = std::move(noisy);
      built.validation = std::move(data.validation);
      break;
    }
  }
  return built;
}

InitialPoint initial_point(const ProblemOracle& oracle, InitPolicy policy, std::uint64_t seed) {
  InitialPoint p{Vector::Zero(oracle.dim_x()), Vector::Zero(oracle.dim_y()),
                 Vector::Zero(oracle.dim_y())};
  if (policy == InitPolicy::kRandom) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (Vector* v : {&p.x, &p.y, &p.v})
      for (Eigen::Index i = 0; i < v->size(); ++i) (*v)(i) = unif(rng);
  }
  return p;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const Observer& observer) {
  return run_experiment(spec, build_problem(spec), observer);
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const BuiltProblem& problem,
                                const Observer& observer) {
  const ProblemOracle& oracle = *problem.oracle;
  const InitialPoint start = initial_point(oracle, spec.init, spec.seed + 7);
  const RunOptions options{observer, spec.record_wall_time};

  ExperimentResult result;
  switch (spec.algorithm) {
    case Algorithm::kDtfbo:
      result.trace = dtfbo_run(oracle, spec.dtfbo, start.x, start.y, start.v, options);
      break;
    case Algorithm::kStfbo:
      result.trace = stfbo_run(oracle, spec.stfbo, start.x, start.y, start.v, options);
      break;
    case Algorithm::kTuned:
      result.trace = tuned_aid_run(oracle, spec.tuned, start.x, start.y, start.v, options);
      break;
  }
  const Trace& tr = result.trace;
  if (!spec.out_path.empty()) write_trace_csv(spec.out_path, tr.records);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool finite_end = tr.final_x.allFinite() && tr.final_y.allFinite();
  auto& m = result.metrics;
  m.emplace_back("iterations", static_cast<double>(tr.records.size()));
  m.emplace_back("failed", tr.ok() ? 0.0 : 1.0);
  if (!tr.records.empty()) {
    m.emplace_back("initial_f", tr.records.front().f_val);
    m.emplace_back("final_hypergrad_norm_sq", tr.records.back().hypergrad_norm_sq);
    m.emplace_back("final_alpha", tr.records.back().alpha);
  }
  const double final_f = finite_end ? oracle.eval_f(tr.final_x, tr.final_y) : nan;
  m.emplace_back("final_f", final_f);
  result.sweep_metric = final_f;
  if (const AnalyticSolution* a = oracle.analytic()) {
    const double gp = finite_end ? a->grad_phi(tr.final_x).squaredNorm() : nan;
    m.emplace_back("final_grad_phi_norm_sq", gp);
    result.sweep_metric = gp;
  }
  if (spec.problem == ProblemKind::kHyperclean && problem.train && finite_end) {
    const WeightSeparation sep = weight_separation(tr.final_x, problem.train->corruption_mask);
    m.emplace_back("mean_weight_clean", sep.mean_clean);
    m.emplace_back("mean_weight_corrupt", sep.mean_corrupt);
  }
  return result;
}

namespace {

ExperimentSpec with_sweep_value(ExperimentSpec spec, double value) {
  switch (spec.algorithm) {
    case Algorithm::kDtfbo:
      spec.dtfbo.alpha_0 = spec.dtfbo.beta_0 = spec.dtfbo.gamma_0 = value;
      break;
    case Algorithm::kStfbo:
      spec.stfbo.alpha_0 = spec.stfbo.beta_0 = spec.stfbo.gamma_0 = value;
      break;
    case Algorithm::kTuned:
      spec.tuned.lr_x *= value;
      spec.tuned.lr_y *= value;
      spec.tuned.lr_v *= value;
      break;
  }
  spec.out_path.clear();
  return spec;
}

double relative_change(double metric, double baseline) {
  if (!std::isfinite(metric)) return std::numeric_limits<double>::infinity();
  const double diff = std::abs(metric - baseline);
  if (baseline == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / std::abs(baseline);
}

}  // namespace

SweepResult sensitivity_sweep(const ExperimentSpec& spec, double baseline_value,
                              std::span<const double> values) {
  require(values.size() >= 2, ErrorKind::kInsufficientData, "a sweep needs at least two values");
  const BuiltProblem problem = build_problem(spec);

  SweepResult out;
  out.baseline_value = baseline_value;
  const ExperimentResult base = run_experiment(with_sweep_value(spec, baseline_value), problem);
  require(base.trace.ok() && std::isfinite(base.sweep_metric), ErrorKind::kNonFiniteIterate,
          "baseline run failed: " + base.trace.failure.value_or("non-finite metric"));
  out.baseline_metric = base.sweep_metric;

  double total = 0.0;
  for (double value : values) {
    SweepCell cell{value, std::nullopt, std::numeric_limits<double>::infinity(), std::nullopt};
    try {
      const ExperimentResult r = run_experiment(with_sweep_value(spec, value), problem);
      if (!r.trace.ok()) {
        cell.error = *r.trace.failure;
      } else if (!std::isfinite(r.sweep_metric)) {
        cell.error = "non-finite metric";
      } else {
        cell.metric = r.sweep_metric;
        cell.relative_change = relative_change(r.sweep_metric, out.baseline_metric);
      }
    } catch (const Error& e) {
      cell.error = e.what();
    }
    total += cell.relative_change;
    out.cells.push_back(std::move(cell));
  }
  out.relative_average_change = total / static_cast<double>(values.size());
  return out;
}

void write_sweep_csv(const std::string& path, const SweepResult& result) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kIoError, "cannot open " + path + " for writing");
  out << "init_value,metric,relative_change\n";
  for (const SweepCell& c : result.cells) {
    out << format_real(c.init_value) << ',' << (c.metric ? format_real(*c.metric) : "") << ','
        << format_real(c.relative_change) << '\n';
  }
  out.flush();
  require(static_cast<bool>(out), ErrorKind::kIoError, "failed writing " + path);
}

// ---------------------------------------------------------------------------
// Key-value specs

namespace {

constexpr SpecKey kSpecKeys[] = {
    {"problem", "quadratic|regsel|hyperclean", "problem family (required)"},
    {"algo", "dtfbo|stfbo|tuned", "solver (required)"},
    {"T", "<int>", "number of outer iterations (required)"},
    {"alpha0", "<f>", "initial outer accumulator (default 1)"},
    {"beta0", "<f>", "initial inner accumulator (default 1)"},
    {"gamma0", "<f>", "initial linear-system accumulator (default 1)"},
    {"eta-x", "<f>", "outer stepsize coefficient (default 1)"},
    {"eta-y", "<f>", "inner stepsize coefficient (default 1)"},
    {"eta-v", "<f>", "linear-system stepsize coefficient (default 1)"},
    {"eps-y", "<f|auto>", "inner stopping threshold, auto = c-y/T (dtfbo)"},
    {"eps-v", "<f|auto>", "linear-system stopping threshold, auto = c-v/T (dtfbo)"},
    {"c-y", "<f>", "auto threshold coefficient for eps-y (default 1)"},
    {"c-v", "<f>", "auto threshold coefficient for eps-v (default 1)"},
    {"subloop-cap", "<int>", "sub-loop iteration cap (default 1000000)"},
    {"lr-x", "<f>", "fixed outer learning rate (tuned, required)"},
    {"lr-y", "<f>", "fixed inner learning rate (tuned, required)"},
    {"lr-v", "<f>", "fixed linear-system learning rate (tuned, required)"},
    {"inner-iters", "<int>", "inner and linear-system steps per outer iteration (tuned, default 10)"},
    {"seed", "<int>", "seed for problem generation and random init (default 0)"},
    {"init", "zeros|random", "initialization policy for x0, y0, v0 (default zeros)"},
    {"out", "<path>", "trace CSV output path"},
    {"dim-x", "<int>", "outer dimension (quadratic, default 10)"},
    {"dim-y", "<int>", "inner dimension (quadratic, default 10)"},
    {"condition", "<f>", "condition number of the inner Hessian (quadratic, default 10)"},
    {"offset-scale", "<f>", "scale of the linear terms (quadratic, default 1)"},
    {"scale", "<f>", "multiplies all quadratic coefficients (quadratic, default 1)"},
    {"train", "<path>", "libsvm training file (regsel/hyperclean; synthetic if absent)"},
    {"val", "<path>", "libsvm validation file (regsel/hyperclean; synthetic if absent)"},
    {"n-train", "<int>", "synthetic training size"},
    {"n-val", "<int>", "synthetic validation size"},
    {"features", "<int>", "synthetic feature count"},
    {"corruption", "<f>", "label flip probability (hyperclean, default 0.2)"},
    {"C", "<f>", "regularization constant (hyperclean, required)"},
    {"wall-time", "true|false", "record elapsed_ms in the trace (default false)"},
};

double to_real(const std::string& key, const std::string& text) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(v),
          ErrorKind::kConfigError, "value of '" + key + "' is not a real number: '" + text + "'");
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(!text.empty() && ec == std::errc() && ptr == text.data() + text.size(),
          ErrorKind::kConfigError,
          "value of '" + key + "' is not a non-negative integer: '" + text + "'");
  return v;
}

std::optional<double> to_threshold(const std::string& key, const std::string& text) {
  if (text == "auto") return std::nullopt;
  return to_real(key, text);
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  fail(ErrorKind::kConfigError, "value of '" + key + "' must be true or false");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::span<const SpecKey> spec_keys() { return kSpecKeys; }

ExperimentSpec parse_experiment_spec(const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    bool known = false;
    for (const SpecKey& k : kSpecKeys) known = known || key == k.name;
    require(known, ErrorKind::kConfigError, "unknown key '" + key + "'");
  }
  auto get = [&](const char* key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto need = [&](const char* key) -> const std::string& {
    const std::string* v = get(key);
    require(v != nullptr, ErrorKind::kConfigError, std::string("missing required key '") + key + "'");
    return *v;
  };

  ExperimentSpec spec;
  spec.problem = parse_problem_kind(need("problem"));
  spec.algorithm = parse_algorithm(need("algo"));
  const std::uint64_t T = to_uint("T", need("T"));
  require(T >= 1, ErrorKind::kConfigError, "T must be >= 1");
  spec.set_iterations(static_cast<std::size_t>(T));

  if (auto v = get("seed")) spec.seed = to_uint("seed", *v);
  if (auto v = get("alpha0")) spec.dtfbo.alpha_0 = spec.stfbo.alpha_0 = to_real("alpha0", *v);
  if (auto v = get("beta0")) spec.dtfbo.beta_0 = spec.stfbo.beta_0 = to_real("beta0", *v);
  if (auto v = get("gamma0")) spec.dtfbo.gamma_0 = spec.stfbo.gamma_0 = to_real("gamma0", *v);
  if (auto v = get("eta-x")) spec.dtfbo.eta_x = spec.stfbo.eta_x = to_real("eta-x", *v);
  if (auto v = get("eta-y")) spec.dtfbo.eta_y = spec.stfbo.eta_y = to_real("eta-y", *v);
  if (auto v = get("eta-v")) spec.dtfbo.eta_v = spec.stfbo.eta_v = to_real("eta-v", *v);
  if (auto v = get("eps-y")) spec.dtfbo.eps_y = to_threshold("eps-y", *v);
  if (auto v = get("eps-v")) spec.dtfbo.eps_v = to_threshold("eps-v", *v);
  if (auto v = get("c-y")) spec.dtfbo.c_y = to_real("c-y", *v);
  if (auto v = get("c-v")) spec.dtfbo.c_v = to_real("c-v", *v);
  if (auto v = get("subloop-cap")) spec.dtfbo.subloop_cap = to_uint("subloop-cap", *v);
  if (auto v = get("lr-x")) spec.tuned.lr_x = to_real("lr-x", *v);
  if (auto v = get("lr-y")) spec.tuned.lr_y = to_real("lr-y", *v);
  if (auto v = get("lr-v")) spec.tuned.lr_v = to_real("lr-v", *v);
  if (auto v = get("inner-iters")) spec.tuned.inner_iters = to_uint("inner-iters", *v);
  if (auto v = get("init")) {
    if (*v == "zeros") spec.init = InitPolicy::kZeros;
    else if (*v == "random") spec.init = InitPolicy::kRandom;
    else fail(ErrorKind::kConfigError, "init must be zeros or random");
  }
  if (auto v = get("out")) spec.out_path = *v;
  if (auto v = get("dim-x")) spec.dim_x = static_cast<Eigen::Index>(to_uint("dim-x", *v));
  if (auto v = get("dim-y")) spec.dim_y = static_cast<Eigen::Index>(to_uint("dim-y", *v));
  if (auto v = get("condition")) spec.condition = to_real("condition", *v);
  if (auto v = get("offset-scale")) spec.offset_scale = to_real("offset-scale", *v);
  if (auto v = get("scale")) spec.scale = to_real("scale", *v);
  if (auto v = get("train")) spec.train_path = *v;
  if (auto v = get("val")) spec.val_path = *v;
  if (auto v = get("n-train")) spec.n_train = static_cast<Eigen::Index>(to_uint("n-train", *v));
  if (auto v = get("n-val")) spec.n_val = static_cast<Eigen::Index>(to_uint("n-val", *v));
  if (auto v = get("features")) spec.n_features = static_cast<Eigen::Index>(to_uint("features", *v));
  if (auto v = get("corruption")) spec.corruption = to_real("corruption", *v);
  if (auto v = get("C")) spec.C = to_real("C", *v);
  if (auto v = get("wall-time")) spec.record_wall_time = to_bool("wall-time", *v);

  if (spec.algorithm == Algorithm::kTuned) {
    for (const char* key : {"lr-x", "lr-y", "lr-v"}) {
      require(get(key) != nullptr, ErrorKind::kConfigError,
              std::string("the tuned baseline requires an explicit ") + key);
    }
  }
  if (spec.problem == ProblemKind::kHyperclean) {
    require(spec.C.has_value(), ErrorKind::kConfigError, "hyperclean requires C");
  }
  try {
    switch (spec.algorithm) {
      case Algorithm::kDtfbo: spec.dtfbo.validate(); break;
      case Algorithm::kStfbo: spec.stfbo.validate(); break;
      case Algorithm::kTuned: spec.tuned.validate(); break;
    }
  } catch (const Error& e) {
    fail(ErrorKind::kConfigError, e.what());
  }
  return spec;
}

KeyValues load_spec_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIoError, "cannot open " + path);
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::kConfigError,
            path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorKind::kConfigError,
            path + ":" + std::to_string(line_no) + ": empty key");
    require(kv.emplace(key, value).second, ErrorKind::kConfigError,
            path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return kv;
}

}  // namespace tfbo
