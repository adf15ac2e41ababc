// gcovtest: command-line front end.
//
//   gcovtest test data.csv --mode nlsd|gcov-spec|bootstrap [options]
//   gcovtest fit data.csv --model "MAR(1,1)" --estimator gcov|aml|ols [options]
//   gcovtest mc [config.txt] [--preset table1] [--reps N] [--T 100,200]
//   gcovtest simulate --model "MAR(1,1)" --theta 0.4,0.8 --dist t5 --T 500
//
// Exit codes: 0 no rejection, 1 rejection, 2 error.

#include <Eigen/Core>
#include <boost/version.hpp>
#include <complex>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gcovtest/gcovtest.hpp"

namespace {

using namespace gcovtest;

constexpr const char* kVersion = "1.0.0";

Json versions() {
  return {{"gcovtest", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." +
                        std::to_string(BOOST_VERSION / 100 % 1000)}};
}

void emit(const Json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write '" + path + "'");
  f << text;
}

void write_vector_csv(const std::string& path, const std::vector<std::pair<std::string, Vector>>& cols) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write '" + path + "'");
  Index n = 0;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    f << (i ? "," : "") << cols[i].first;
    n = std::max(n, cols[i].second.size());
  }
  f << '\n';
  f.precision(17);
  for (Index t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) f << ',';
      if (t < cols[i].second.size()) f << cols[i].second[t];
    }
    f << '\n';
  }
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : detail::split(text, ',')) {
    if (detail::trim(item).empty()) continue;
    double v;
    if (!detail::parse_double(detail::trim(item), v)) throw UsageError("bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

struct DataOptions {
  std::string path;
  int column = -1;
  int detrend = -1;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("data", d.path, "CSV file, one column per variable")->required();
  cmd->add_option("--column", d.column, "use only this column (0-based)");
  cmd->add_option("--detrend", d.detrend, "remove a polynomial trend of this degree")
      ->expected(0, 1)
      ->default_str("1");
}

TimeSeries load(const DataOptions& d, Json& echo) {
  TimeSeries y = read_csv_file(d.path);
  if (d.column >= 0) {
    if (d.column >= y.dim()) throw UsageError("column index out of range");
    y = TimeSeries(Matrix(y.values().col(d.column)), {}, y.origin());
  }
  echo["input"] = d.path;
  echo["T"] = y.length();
  echo["columns"] = y.dim();
  if (d.detrend >= 0) {
    y = detrend_polynomial(y, d.detrend);
    echo["detrend_degree"] = d.detrend;
  }
  return y;
}

Json ks_json(const TimeSeries& y) {
  if (y.dim() != 1) return nullptr;
  const KsResult ks = ks_normality(y);
  return {{"statistic", ks.statistic}, {"critical_value_5pct", ks.critical_value}, {"reject", ks.reject}};
}

void check_open_alpha(double a) {
  if (!(a > 0.0 && a < 1.0)) throw UsageError("--alpha must lie in (0,1)");
}

Json roots_json(const Vector& c) {
  Json out = Json::array();
  for (const auto& z : polynomial_roots(c))
    out.push_back({{"re", z.real()}, {"im", z.imag()}, {"modulus", std::abs(z)}});
  return out;
}

// --- test --------------------------------------------------------------------

struct TestCmd {
  DataOptions data;
  std::string mode = "nlsd";
  std::string transforms = "identity,power:2";
  Index H = 1;
  double alpha = 0.05;
  std::string model = "MAR(0,1)";
  std::string estimator = "gcov";
  std::uint64_t seed = 1;
  Index S = 100;
  bool permutation = false;
  std::string out;
};

int run_test(const TestCmd& c) {
  check_open_alpha(c.alpha);
  Json bundle;
  Json manifest;
  manifest["command"] = "test";
  manifest["versions"] = versions();
  const TimeSeries y = load(c.data, manifest);
  const TransformSet ts = parse_transform_set(c.transforms);
  manifest["mode"] = c.mode;
  manifest["seed"] = c.seed;
  bundle["manifest"] = manifest;
  bundle["ks_normality"] = ks_json(y);
  bool reject = false;
  if (c.mode == "nlsd") {
    const TestReport r = nlsd_test(y, ts, c.H, c.alpha);
    bundle["report"] = to_json(r);
    reject = r.reject;
  } else if (c.mode == "gcov-spec") {
    const ModelSpec tmpl = parse_model(c.model, static_cast<int>(y.dim()));
    const GcovFit fit = gcov_fit(tmpl, y, ts, c.H);
    const TestReport r = gcov_spec_test(fit, c.alpha);
    bundle["fit"] = to_json(fit);
    bundle["report"] = to_json(r);
    reject = r.reject;
  } else if (c.mode == "bootstrap") {
    const ModelSpec tmpl = parse_model(c.model, static_cast<int>(y.dim()));
    BootstrapConfig bc;
    bc.S = c.S;
    bc.seed = c.seed;
    bc.with_replacement = !c.permutation;
    bc.estimator.kind = parse_estimator(c.estimator);
    bc.workers = default_workers();
    const BootstrapTest bt = bootstrap_test(tmpl, y, ts, c.H, c.alpha, bc);
    bundle["report"] = to_json(bt.report);
    bundle["bootstrap"] = to_json(bt.bootstrap);
    reject = bt.report.reject;
  } else {
    throw UsageError("unknown --mode '" + c.mode + "'");
  }
  emit(bundle, c.out);
  return reject ? 1 : 0;
}

// --- fit ---------------------------------------------------------------------

struct FitCmd {
  DataOptions data;
  std::string model = "MAR(1,1)";
  std::string estimator = "gcov";
  std::string transforms = "identity,power:2";
  Index H = 3;
  bool spec_test = false;
  double alpha = 0.05;
  std::string residuals_out;
  std::string components_out;
  std::string out;
};

int run_fit(const FitCmd& c) {
  check_open_alpha(c.alpha);
  Json bundle;
  Json manifest;
  manifest["command"] = "fit";
  manifest["versions"] = versions();
  const TimeSeries y = load(c.data, manifest);
  const ModelSpec tmpl = parse_model(c.model, static_cast<int>(y.dim()));
  const TransformSet ts = parse_transform_set(c.transforms);
  const EstimatorKind kind = parse_estimator(c.estimator);
  manifest["model"] = tmpl.name();
  manifest["estimator"] = to_string(kind);
  bundle["manifest"] = manifest;

  Json est;
  Vector theta;
  std::optional<GcovFit> gfit;
  if (kind == EstimatorKind::gcov) {
    gfit = gcov_fit(tmpl, y, ts, c.H);
    theta = gfit->theta_hat;
    est = to_json(*gfit);
  } else if (kind == EstimatorKind::aml) {
    const FitResult f = aml_fit(tmpl, y);
    theta = f.theta;
    est = {{"model", tmpl.name()}, {"parameters", tmpl.parameter_names()}, {"theta_hat", to_json(theta)},
           {"nu", f.nu}, {"scale", f.scale}, {"loglik", f.loglik}, {"n", f.n}, {"converged", f.converged}};
  } else {
    EstimatorConfig ec;
    ec.kind = kind;
    theta = estimate_theta(tmpl, y, ts, c.H, ec);
    est = {{"model", tmpl.name()}, {"parameters", tmpl.parameter_names()}, {"theta_hat", to_json(theta)}};
  }
  const ModelSpec fitted = tmpl.with_theta_unchecked(theta);
  if (fitted.is_mar()) {
    est["roots_causal"] = roots_json(fitted.phi());
    est["roots_noncausal"] = roots_json(fitted.psi());
  }
  bundle["estimate"] = est;

  const Matrix u = residuals_raw(tmpl, theta, y.values());
  if (!c.residuals_out.empty()) {
    std::vector<std::pair<std::string, Vector>> cols;
    for (Index j = 0; j < u.cols(); ++j) cols.emplace_back("u" + std::to_string(j), u.col(j));
    write_vector_csv(c.residuals_out, cols);
    bundle["residuals_file"] = c.residuals_out;
  }
  bundle["residual_count"] = u.rows();
  if (!c.components_out.empty()) {
    if (!(fitted.is_mar() && fitted.r() <= 1 && fitted.s() <= 1 && y.dim() == 1))
      throw UsageError("--components-out needs a univariate MAR(r,s) with r,s <= 1");
    const double phi = fitted.r() ? fitted.phi()[0] : 0.0;
    const double psi = fitted.s() ? fitted.psi()[0] : 0.0;
    const MarComponents mc = mar_components(y, phi, psi);
    write_vector_csv(c.components_out, {{"v1", mc.v1}, {"v2", mc.v2}});
    bundle["components_file"] = c.components_out;
  }
  bool reject = false;
  if (c.spec_test) {
    const TestReport r = gfit ? gcov_spec_test(*gfit, c.alpha)
                              : plugin_spec_test(fitted, y, ts, c.H, c.alpha, "gcov-plugin-" + to_string(kind));
    bundle["spec_test"] = to_json(r);
    reject = r.reject;
  }
  emit(bundle, c.out);
  return reject ? 1 : 0;
}

// --- mc ----------------------------------------------------------------------

struct McCmd {
  std::string config;
  std::string preset;
  std::vector<std::string> set;
  std::string reps, T, dists, seed, S;
  std::string out;
  std::string csv;
  unsigned workers = 0;
};

int run_mc(const McCmd& c) {
  ExperimentConfig cfg;
  if (!c.preset.empty()) cfg = preset(c.preset);
  if (!c.config.empty()) {
    std::ifstream f(c.config);
    if (!f) throw UsageError("cannot open config '" + c.config + "'");
    cfg = parse_experiment(f, cfg);
  }
  auto override_key = [&](const char* key, const std::string& v) {
    if (!v.empty()) apply_setting(cfg, key, v);
  };
  override_key("reps", c.reps);
  override_key("T", c.T);
  override_key("dists", c.dists);
  override_key("seed", c.seed);
  override_key("S", c.S);
  for (const auto& kv : c.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value");
    apply_setting(cfg, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  const std::string json_path = !c.out.empty() ? c.out : cfg.output;
  auto dump = [&](const McTable& t, bool partial) {
    Json j = to_json(t);
    j["manifest"]["preset"] = c.preset;
    j["manifest"]["versions"] = versions();
    j["partial"] = partial;
    if (!json_path.empty()) emit(j, json_path);
    if (!c.csv.empty()) {
      std::ofstream f(c.csv);
      write_csv(f, t);
    }
    return j;
  };
  const McTable table = run_experiment(cfg, c.workers, [&](const McTable& t) { dump(t, true); });
  const Json j = dump(table, false);
  if (json_path.empty()) std::cout << j.dump(2) << '\n';
  if (json_path.empty() || !c.csv.empty()) write_csv(std::cerr, table);
  return 0;
}

// --- simulate ----------------------------------------------------------------

struct SimCmd {
  std::string model = "MAR(1,1)";
  std::string theta;
  std::string dist = "t5";
  Index T = 500;
  int dim = 1;
  std::uint64_t seed = 1;
  Index burn = -1;
  std::string out;
};

int run_simulate(const SimCmd& c) {
  const ModelSpec tmpl = parse_model(c.model, c.dim);
  const auto th = parse_numbers(c.theta);
  const ModelSpec spec =
      tmpl.with_theta(Eigen::Map<const Vector>(th.data(), static_cast<Index>(th.size())));
  const Simulation sim = simulate(spec, parse_distribution(c.dist), c.T, c.seed, c.burn);
  if (c.out.empty() || c.out == "-") {
    write_csv(std::cout, sim.series);
  } else {
    std::ofstream f(c.out);
    if (!f) throw UsageError("cannot write '" + c.out + "'");
    write_csv(f, sim.series);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Portmanteau tests for nonlinear serial dependence and GCov specification"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  TestCmd tc;
  auto* t = app.add_subcommand("test", "run the NLSD, GCov specification or bootstrap test");
  add_data_options(t, tc.data);
  t->add_option("--mode", tc.mode, "nlsd | gcov-spec | bootstrap")->capture_default_str();
  t->add_option("--transforms", tc.transforms, "comma-separated transforms")->capture_default_str();
  t->add_option("--H", tc.H, "number of lags")->capture_default_str();
  t->add_option("--alpha", tc.alpha, "nominal level")->capture_default_str();
  t->add_option("--model", tc.model, "MAR(r,s), noncausalAR1, DAR1 or VAR(p)")->capture_default_str();
  t->add_option("--estimator", tc.estimator, "bootstrap estimator: gcov | aml | ols")->capture_default_str();
  t->add_option("--seed", tc.seed, "bootstrap seed")->capture_default_str();
  t->add_option("--S", tc.S, "bootstrap replicates")->capture_default_str();
  t->add_flag("--permutation", tc.permutation, "resample residuals without replacement");
  t->add_option("--out", tc.out, "JSON report path (default stdout)");

  FitCmd fc;
  auto* f = app.add_subcommand("fit", "estimate a model and report roots, components and residuals");
  add_data_options(f, fc.data);
  f->add_option("--model", fc.model)->capture_default_str();
  f->add_option("--estimator", fc.estimator, "gcov | aml | ols")->capture_default_str();
  f->add_option("--transforms", fc.transforms)->capture_default_str();
  f->add_option("--H", fc.H)->capture_default_str();
  f->add_flag("--spec-test", fc.spec_test, "also run the GCov specification test");
  f->add_option("--alpha", fc.alpha)->capture_default_str();
  f->add_option("--residuals-out", fc.residuals_out, "CSV path for residuals");
  f->add_option("--components-out", fc.components_out, "CSV path for v1, v2");
  f->add_option("--out", fc.out, "JSON report path (default stdout)");

  McCmd mc;
  auto* m = app.add_subcommand("mc", "Monte Carlo size/power tables");
  m->add_option("config", mc.config, "key = value configuration file");
  m->add_option("--preset", mc.preset, "table1 | table2 | table3b | table5 | table9 | figure2 | figure3");
  m->add_option("--reps", mc.reps, "override replications");
  m->add_option("--T", mc.T, "override sample sizes, comma-separated");
  m->add_option("--dists", mc.dists, "override distributions, comma-separated");
  m->add_option("--seed", mc.seed, "override master seed");
  m->add_option("--S", mc.S, "override bootstrap replicates");
  m->add_option("--set", mc.set, "extra key=value settings");
  m->add_option("--out", mc.out, "JSON path");
  m->add_option("--csv", mc.csv, "CSV table path");
  m->add_option("--workers", mc.workers, "worker threads (default GCOVTEST_WORKERS or all cores)");

  SimCmd sc;
  auto* s = app.add_subcommand("simulate", "simulate a model to CSV");
  s->add_option("--model", sc.model)->capture_default_str();
  s->add_option("--theta", sc.theta, "comma-separated parameters")->required();
  s->add_option("--dist", sc.dist, "uniform | laplace | gaussian | cauchy | t<nu>")->capture_default_str();
  s->add_option("--T", sc.T)->capture_default_str();
  s->add_option("--dim", sc.dim, "VAR dimension")->capture_default_str();
  s->add_option("--seed", sc.seed)->capture_default_str();
  s->add_option("--burn", sc.burn, "burn-in per side (default from the model)");
  s->add_option("--out", sc.out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (t->parsed()) return run_test(tc);
    if (f->parsed()) return run_fit(fc);
    if (m->parsed()) return run_mc(mc);
    if (s->parsed()) return run_simulate(sc);
  } catch (const gcovtest::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
