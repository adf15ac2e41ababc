#ifndef GCOVTEST_BASIS_HPP
#define GCOVTEST_BASIS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gcovtest/distributions.hpp"
#include "gcovtest/errors.hpp"
#include "gcovtest/gcov.hpp"
#include "gcovtest/models.hpp"
#include "gcovtest/optimize.hpp"
#include "gcovtest/report.hpp"
#include "gcovtest/series.hpp"

namespace gcovtest {

enum class SignMode { positive_support, absolute_value };

/** a_{t,p}(u) = u^p e^{-tu}, or |u|^p e^{-t|u|} in absolute-value mode. */
struct Generator {
  double t = 0.0;
  int p = 0;

  double operator()(double u, SignMode mode) const {
    const double x = mode == SignMode::absolute_value ? std::abs(u) : u;
    double v = 1.0;
    for (int i = 0; i < p; ++i) v *= x;
    return t == 0.0 ? v : v * std::exp(-t * x);
  }

  std::string label(SignMode mode) const {
    std::ostringstream os;
    os << (mode == SignMode::absolute_value ? "|u|^" : "u^") << p << "*exp(-" << t
       << (mode == SignMode::absolute_value ? "|u|)" : "u)");
    return os.str();
  }
};

/** Generators ordered by (t, p). */
struct GeneratorGrid {
  int P_n = 1;
  int min_power = 0;
  std::vector<double> t_grid;
  SignMode mode = SignMode::positive_support;
  std::vector<Generator> generators;

  Index count() const noexcept { return static_cast<Index>(generators.size()); }
};

inline GeneratorGrid build_generators(int P_n, std::vector<double> t_grid, SignMode mode,
                                      int min_power = 0) {
  if (P_n < 1) throw UsageError("generator grid needs P_n >= 1");
  if (min_power < 0 || min_power > P_n) throw UsageError("minimum power outside 0..P_n");
  if (t_grid.empty()) throw UsageError("generator grid needs at least one weight");
  std::sort(t_grid.begin(), t_grid.end());
  for (double t : t_grid)
    if (!(t >= 0.0 && t <= 1.0)) throw UsageError("generator weights must lie in [0,1]");
  GeneratorGrid g;
  g.P_n = P_n;
  g.min_power = min_power;
  g.t_grid = std::move(t_grid);
  g.mode = mode;
  for (double t : g.t_grid)
    for (int p = min_power; p <= P_n; ++p) g.generators.push_back({t, p});
  return g;
}

/** n weights equi-spaced on [0, t_max]; count (P_n + 1) n. */
inline GeneratorGrid build_generators(int P_n, int n, SignMode mode, double t_max = 0.1) {
  if (n < 1) throw UsageError("generator grid needs n >= 1");
  std::vector<double> ts;
  for (int i = 0; i < n; ++i) ts.push_back(n == 1 ? 0.0 : t_max * i / (n - 1));
  return build_generators(P_n, std::move(ts), mode);
}

/**
 * One accepted element: a*(u) = (g(u) - intercept - sum_j loadings_j a*_j(u)) / norm,
 * where a*_j are the previously accepted elements.
 */
struct BasisElement {
  Generator generator;
  double intercept = 0.0;
  Vector loadings;
  double norm = 1.0;
  double one_minus_r2 = 1.0;
};

struct RejectedGenerator {
  Generator generator;
  double one_minus_r2 = 0.0;
};

struct OrthonormalBasis {
  std::vector<BasisElement> selected;
  std::vector<RejectedGenerator> rejected;
  double epsilon = 0.0;
  SignMode mode = SignMode::positive_support;
  Index reference_T = 0;
  double reference_fingerprint = 0.0;  // sum of the reference residuals

  Index size() const noexcept { return static_cast<Index>(selected.size()); }

  /** n x K* matrix of basis values on u, by the stored recipe. */
  Matrix evaluate(const Vector& u) const {
    const Index n = u.size();
    Matrix out(n, size());
    for (Index k = 0; k < size(); ++k) {
      const BasisElement& el = selected[static_cast<std::size_t>(k)];
      Vector v(n);
      for (Index i = 0; i < n; ++i) v[i] = el.generator(u[i], mode);
      v.array() -= el.intercept;
      if (k > 0) v.noalias() -= out.leftCols(k) * el.loadings;
      out.col(k) = v / el.norm;
    }
    if (!out.allFinite()) throw DomainViolation(0, "basis evaluation overflow");
    return out;
  }
};

/** max(1e-8, K_n / T). */
inline double default_epsilon(Index K_n, Index T) {
  return std::max(1e-8, static_cast<double>(K_n) / static_cast<double>(T));
}

/**
 * Forward Gram-Schmidt regression of each generator on the constant and the
 * accepted elements (two orthogonalization passes); accept iff 1 - R^2 > epsilon,
 * then scale to unit sample norm sqrt((1/T) sum e^2).
 */
inline OrthonormalBasis orthonormalize(const Vector& u, const GeneratorGrid& grid,
                                       std::optional<double> epsilon = std::nullopt) {
  const Index T = u.size();
  if (T <= grid.count()) throw InsufficientSample("orthonormalization needs T > K_n");
  OrthonormalBasis b;
  b.epsilon = epsilon.value_or(default_epsilon(grid.count(), T));
  if (!(b.epsilon >= 0.0 && b.epsilon < 1.0)) throw UsageError("epsilon must lie in [0,1)");
  b.mode = grid.mode;
  b.reference_T = T;
  b.reference_fingerprint = u.sum();
  const double invT = 1.0 / static_cast<double>(T);
  Matrix A(T, 0);
  for (const Generator& g : grid.generators) {
    Vector w(T);
    for (Index i = 0; i < T; ++i) w[i] = g(u[i], grid.mode);
    if (!w.allFinite()) throw DomainViolation(0, g.label(grid.mode));
    const double mean = w.mean();
    const double tss = (w.array() - mean).square().mean();
    if (!(tss > 0.0)) {
      b.rejected.push_back({g, 0.0});
      continue;
    }
    const Index k = A.cols();
    Vector c = Vector::Zero(k);
    Vector e = w.array() - mean;
    for (int pass = 0; pass < 2; ++pass) {
      if (k == 0) break;
      const Vector d = invT * (A.transpose() * e);
      e.noalias() -= A * d;
      c += d;
    }
    Vector resid = w;
    if (k > 0) resid.noalias() -= A * c;
    const double intercept = resid.mean();
    resid.array() -= intercept;
    const double ssr = resid.squaredNorm() * invT;
    const double share = ssr / tss;
    if (!(share > b.epsilon)) {
      b.rejected.push_back({g, share});
      continue;
    }
    BasisElement el;
    el.generator = g;
    el.intercept = intercept;
    el.loadings = c;
    el.norm = std::sqrt(ssr);
    el.one_minus_r2 = share;
    A.conservativeResize(Eigen::NoChange, k + 1);
    A.col(k) = resid / el.norm;
    b.selected.push_back(std::move(el));
  }
  if (b.selected.empty()) throw AllRejected("every generator was rejected");
  return b;
}

/**
 * L_{n,T}(theta) = sum_{h=1..H} sum_{j,k} ((1/n) sum_t a*_j(u_t) a*_k(u_{t-h}))^2,
 * uncentered, identity weighting.
 */
inline double many_transform_objective(const ModelSpec& tmpl, const Vector& theta, const Matrix& y,
                                       const OrthonormalBasis& basis, Index H) {
  const Matrix u = residuals_raw(tmpl, theta, y);
  if (u.cols() != 1) throw ShapeMismatch("generator bases apply to univariate residuals");
  const Matrix A = basis.evaluate(u.col(0));
  const Index n = A.rows();
  if (n <= H + 1) throw InsufficientSample("need n > H + 1");
  const double inv = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (Index h = 1; h <= H; ++h)
    sum += (inv * (A.bottomRows(n - h).transpose() * A.topRows(n - h))).squaredNorm();
  return sum;
}

struct ManyTransformValue {
  double xi = 0.0;
  Vector theta;
  Index K_star = 0;
  Index n = 0;
};

/** xi = n L_{n,T}, minimized over theta from theta_start when `reminimize`. */
inline ManyTransformValue many_transform_statistic(const ModelSpec& tmpl, const TimeSeries& y,
                                                   const Vector& theta_start,
                                                   const OrthonormalBasis& basis, Index H,
                                                   bool reminimize = true,
                                                   const SimplexOptions& simplex = {}) {
  const Matrix& Y = y.values();
  ManyTransformValue out;
  out.K_star = basis.size();
  out.n = y.length() - tmpl.lags() - tmpl.leads();
  out.theta = theta_start;
  double L = many_transform_objective(tmpl, theta_start, Y, basis, H);
  if (reminimize && tmpl.dim_theta() > 0) {
    Objective f = [&](const Vector& eta) {
      return many_transform_objective(tmpl, from_unconstrained(tmpl, eta), Y, basis, H);
    };
    SimplexOptions so = simplex;
    so.initial_step = 0.05;
    const LocalResult r = nelder_mead(f, to_unconstrained(tmpl, theta_start), so);
    if (r.f < L) {
      L = r.f;
      out.theta = from_unconstrained(tmpl, r.x);
    }
  }
  out.xi = static_cast<double>(out.n) * L;
  return out;
}

/** (xi - H K*^2) / sqrt(2 H K*^2). */
inline double standardized_statistic(double xi, Index H, Index K_star) {
  if (K_star < 1) throw UsageError("K* must be at least 1");
  const double m = static_cast<double>(H) * static_cast<double>(K_star * K_star);
  return (xi - m) / std::sqrt(2.0 * m);
}

/** Minimizer of L with Gamma(0) replaced by its diagonal. */
inline GcovFit diagonal_gcov_start(const ModelSpec& tmpl, const TimeSeries& y, const TransformSet& ts,
                                   Index H, GcovOptions opt = {}) {
  opt.autocov.gamma0 = Gamma0Mode::diagonal;
  return gcov_fit(tmpl, y, ts, H, opt);
}

struct GrowthDiagnostics {
  double k6_over_t = 0.0;  // K_n^6 / T
  double hk2_over_t = 0.0; // H K_n^2 / T
  std::vector<std::string> warnings;
};

inline GrowthDiagnostics growth_diagnostics(Index K_n, Index H, Index T) {
  GrowthDiagnostics d;
  const double k = static_cast<double>(K_n), t = static_cast<double>(T);
  d.k6_over_t = std::pow(k, 6) / t;
  d.hk2_over_t = static_cast<double>(H) * k * k / t;
  if (d.k6_over_t > 1.0) d.warnings.push_back("K_n^6 / T exceeds 1");
  if (d.hk2_over_t > 0.5) d.warnings.push_back("H K_n^2 / T exceeds 0.5");
  return d;
}

struct ManyTransformConfig {
  GeneratorGrid grid;
  std::optional<double> epsilon;
  TransformSet first_step = TransformSet::linear_quadratic();
  bool reminimize = true;
  GcovOptions gcov{};
};

struct ManyTransformTest {
  TestReport report;
  OrthonormalBasis basis;
  ManyTransformValue value;
  Vector theta_first_step;
  double z = 0.0;
  GrowthDiagnostics growth;
};

/**
 * Two-step test: GCov fit with the first-step transforms, basis built on its
 * residuals, xi = n L_{n,T}, one-sided normal test of the standardized value.
 */
inline ManyTransformTest many_transform_test(const ModelSpec& tmpl, const TimeSeries& y, Index H,
                                             const ManyTransformConfig& cfg, double alpha = 0.05) {
  check_alpha(alpha);
  ManyTransformTest out;
  out.theta_first_step = gcov_fit(tmpl, y, cfg.first_step, H, cfg.gcov).theta_hat;
  const Matrix u = residuals_raw(tmpl, out.theta_first_step, y.values());
  out.basis = orthonormalize(u.col(0), cfg.grid, cfg.epsilon);
  out.value = many_transform_statistic(tmpl, y, out.theta_first_step, out.basis, H, cfg.reminimize,
                                       cfg.gcov.simplex);
  const Index Ks = out.basis.size();
  out.z = standardized_statistic(out.value.xi, H, Ks);
  out.growth = growth_diagnostics(cfg.grid.count(), H, y.length());
  const double m = static_cast<double>(H * Ks * Ks);
  std::vector<std::string> labels;
  for (const auto& el : out.basis.selected) labels.push_back(el.generator.label(out.basis.mode));
  ConfigEcho echo{labels, H, out.value.n, Ks, Json::object()};
  echo.extra["model"] = tmpl.name();
  echo.extra["theta"] = to_json(out.value.theta);
  echo.extra["z"] = out.z;
  echo.extra["epsilon"] = out.basis.epsilon;
  echo.extra["K_n"] = cfg.grid.count();
  echo.extra["warnings"] = out.growth.warnings;
  out.report = normal_report(out.value.xi, {m, std::sqrt(2.0 * m)}, alpha, "many-transform",
                             std::move(echo));
  return out;
}

inline Json to_json(const OrthonormalBasis& b) {
  Json j;
  j["epsilon"] = b.epsilon;
  j["mode"] = b.mode == SignMode::absolute_value ? "absolute-value" : "positive-support";
  j["reference_T"] = b.reference_T;
  j["reference_fingerprint"] = b.reference_fingerprint;
  Json sel = Json::array();
  for (const auto& el : b.selected)
    sel.push_back({{"t", el.generator.t}, {"p", el.generator.p}, {"intercept", el.intercept},
                   {"loadings", to_json(el.loadings)}, {"norm", el.norm},
                   {"one_minus_r2", el.one_minus_r2}});
  j["selected"] = sel;
  Json rej = Json::array();
  for (const auto& r : b.rejected)
    rej.push_back({{"t", r.generator.t}, {"p", r.generator.p}, {"one_minus_r2", r.one_minus_r2}});
  j["rejected"] = rej;
  return j;
}

}  // namespace gcovtest

#endif  // GCOVTEST_BASIS_HPP
