#ifndef GCOVTEST_GCOV_HPP
#define GCOVTEST_GCOV_HPP

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gcovtest/autocov.hpp"
#include "gcovtest/distributions.hpp"
#include "gcovtest/errors.hpp"
#include "gcovtest/models.hpp"
#include "gcovtest/optimize.hpp"
#include "gcovtest/report.hpp"
#include "gcovtest/series.hpp"

namespace gcovtest {

struct GcovOptions {
  double grid_step = 0.1;     // spacing of the partial-autocorrelation start grid
  std::size_t n_starts = 2;   // grid points refined by Nelder-Mead
  SimplexOptions simplex{};
  AutocovOptions autocov{};
  std::vector<Vector> starts; // replaces the default start grid when non-empty
};

/** L(theta) = sum_{h=1..H} Tr[R^2(h, theta)] of the transformed residuals. */
inline double gcov_objective_raw(const ModelSpec& tmpl, const Vector& theta, const Matrix& y,
                                 const TransformSet& ts, Index H,
                                 const AutocovOptions& opt = {}) {
  const Matrix u = residuals_raw(tmpl, theta, y);
  const AutocovStack st = sample_autocov_matrix(transform_matrix(u, ts), H);
  const Whitener w(st.gamma[0], opt);
  double sum = 0.0;
  for (Index h = 1; h <= H; ++h) sum += w.trace_r2(st.gamma[static_cast<std::size_t>(h)]);
  return sum;
}

inline double gcov_objective(const Vector& theta, const ModelSpec& spec, const TimeSeries& y,
                             const TransformSet& ts, Index H, const AutocovOptions& opt = {}) {
  return gcov_objective_raw(spec, theta, y.values(), ts, H, opt);
}

struct GcovFit {
  ModelSpec spec = ModelSpec::mar_template(0, 1);
  Vector theta_hat;
  double objective_min = 0.0;
  Index H = 0;
  Index K = 0;
  Index T = 0;  // residual count used as sample size
  TransformSet transforms;
  std::vector<LocalResult> trace;
  std::size_t best_start = 0;
};

inline void check_identification(Index dim_theta, Index K, Index H) {
  if (K * K * H < dim_theta)
    throw DfNonPositive("K^2 H = " + std::to_string(K * K * H) + " is below dim(theta) = " +
                        std::to_string(dim_theta));
}

/** Argmin of L over the model's parameter region, multi-start Nelder-Mead. */
inline GcovFit gcov_fit(const ModelSpec& tmpl, const TimeSeries& y, const TransformSet& ts, Index H,
                        const GcovOptions& opt = {}) {
  check_identification(tmpl.dim_theta(), ts.size(), H);
  const Matrix& Y = y.values();
  Objective f = [&](const Vector& eta) {
    return gcov_objective_raw(tmpl, from_unconstrained(tmpl, eta), Y, ts, H, opt.autocov);
  };
  std::vector<Vector> cand;
  for (const Vector& th : opt.starts.empty() ? default_starts(tmpl, Y, opt.grid_step) : opt.starts)
    cand.push_back(to_unconstrained(tmpl, th));
  const auto best = best_candidates(f, cand, std::max<std::size_t>(1, opt.n_starts));
  if (best.empty()) throw AllStartsFailed("GCov objective undefined at every start");
  std::vector<Vector> starts;
  for (std::size_t i : best) starts.push_back(cand[i]);
  const MultiStartResult ms = multistart(f, starts, opt.simplex);
  GcovFit fit;
  fit.theta_hat = from_unconstrained(tmpl, ms.x);
  fit.spec = tmpl.with_theta_unchecked(fit.theta_hat);
  fit.objective_min = ms.f;
  fit.H = H;
  fit.K = ts.size();
  fit.T = y.length() - tmpl.lags() - tmpl.leads();
  fit.transforms = ts;
  fit.trace = ms.runs;
  fit.best_start = ms.best_start;
  return fit;
}

/** n L(theta) against chi2(K^2 H - dim theta). */
inline TestReport gcov_spec_test(const GcovFit& fit, double alpha = 0.05) {
  const Index df = fit.K * fit.K * fit.H - fit.spec.dim_theta();
  if (df < 1) throw DfNonPositive("K^2 H - dim(theta) must be at least 1");
  ConfigEcho echo{fit.transforms.labels(), fit.H, fit.T, fit.K, Json::object()};
  echo.extra["model"] = fit.spec.name();
  echo.extra["theta_hat"] = to_json(fit.theta_hat);
  return chi2_report(static_cast<double>(fit.T) * fit.objective_min, static_cast<double>(df), alpha,
                     "gcov-spec", std::move(echo));
}

/** Same test for residuals at a theta not produced by GCov (plug-in estimators). */
inline TestReport plugin_spec_test(const ModelSpec& spec, const TimeSeries& y, const TransformSet& ts,
                                   Index H, double alpha, const std::string& method) {
  GcovFit fit;
  fit.spec = spec;
  fit.theta_hat = spec.theta();
  fit.objective_min = gcov_objective(spec.theta(), spec, y, ts, H);
  fit.H = H;
  fit.K = ts.size();
  fit.T = y.length() - spec.lags() - spec.leads();
  fit.transforms = ts;
  TestReport r = gcov_spec_test(fit, alpha);
  r.method = method;
  return r;
}

// ---------------------------------------------------------------------------
// estimator dispatch

enum class EstimatorKind { gcov, aml, ols };

inline std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::gcov: return "gcov";
    case EstimatorKind::aml: return "aml";
    case EstimatorKind::ols: return "ols";
  }
  return "?";
}

inline EstimatorKind parse_estimator(const std::string& s) {
  if (s == "gcov") return EstimatorKind::gcov;
  if (s == "aml") return EstimatorKind::aml;
  if (s == "ols") return EstimatorKind::ols;
  throw UsageError("unknown estimator '" + s + "'");
}

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::gcov;
  GcovOptions gcov{};
  AmlOptions aml{};
};

/** Point estimate of theta; GCov uses (ts, H), AML and OLS ignore them. */
inline Vector estimate_theta(const ModelSpec& tmpl, const TimeSeries& y, const TransformSet& ts,
                             Index H, const EstimatorConfig& cfg) {
  switch (cfg.kind) {
    case EstimatorKind::gcov:
      return gcov_fit(tmpl, y, ts, H, cfg.gcov).theta_hat;
    case EstimatorKind::aml:
      return aml_fit(tmpl, y, cfg.aml).theta;
    case EstimatorKind::ols: {
      if (!(tmpl.is_mar() && tmpl.r() == 0 && tmpl.s() == 1))
        throw UsageError("OLS estimator is available for MAR(0,1) only");
      Vector th(1);
      th[0] = ols_noncausal_ar1(y);
      return th;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// local power

/** Pi = W - W J (J' W J)^{-1} J' W with W = Gamma0^{-1} (x) Gamma0^{-1}. */
inline Matrix pi_projector(const Matrix& gamma0, const Matrix& J) {
  const Index K = gamma0.rows();
  if (gamma0.cols() != K) throw ShapeMismatch("Gamma(0) must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(gamma0);
  if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0))
    throw SingularGamma0("Gamma(0) must be positive definite");
  const Matrix g0inv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                       es.eigenvectors().transpose();
  const Matrix W = Eigen::kroneckerProduct(g0inv, g0inv).eval();
  if (J.cols() == 0) return W;
  if (J.rows() != K * K) throw ShapeMismatch("Jacobian must have K^2 rows");
  const Matrix WJ = W * J;
  const Matrix M = J.transpose() * WJ;
  Eigen::LDLT<Matrix> ldlt(M);
  Eigen::SelfAdjointEigenSolver<Matrix> mes(M);
  if (ldlt.info() != Eigen::Success ||
      !(mes.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, mes.eigenvalues().maxCoeff())))
    throw RankDeficientJacobian("J' W J is singular");
  Matrix P = W - WJ * ldlt.solve(WJ.transpose());
  return 0.5 * (P + P.transpose());
}

/**
 * Drift mu (theta) and nu (extra parameter gamma) with the Jacobians of
 * vec Gamma(h), h = 1..H, at the null.
 */
struct LocalAlternative {
  Vector mu;
  Vector nu;
  std::vector<Matrix> dGamma_dtheta;  // K^2 x dim(theta) per lag
  std::vector<Matrix> dGamma_dgamma;  // K^2 x dim(gamma) per lag
  Matrix gamma0;
};

/** lambda = sum_h delta(h)' Pi(h) delta(h), delta = J_theta mu + J_gamma nu. */
inline double noncentrality(const LocalAlternative& la) {
  const Index K = la.gamma0.rows();
  const std::size_t H = std::max(la.dGamma_dtheta.size(), la.dGamma_dgamma.size());
  if (!la.dGamma_dtheta.empty() && la.dGamma_dtheta.size() != H)
    throw ShapeMismatch("theta Jacobian list has the wrong length");
  if (!la.dGamma_dgamma.empty() && la.dGamma_dgamma.size() != H)
    throw ShapeMismatch("gamma Jacobian list has the wrong length");
  double lambda = 0.0;
  for (std::size_t h = 0; h < H; ++h) {
    Vector delta = Vector::Zero(K * K);
    Matrix J(K * K, 0);
    if (!la.dGamma_dtheta.empty()) {
      J = la.dGamma_dtheta[h];
      if (J.rows() != K * K || J.cols() != la.mu.size())
        throw ShapeMismatch("theta Jacobian shape does not match K and mu");
      if (J.cols() > 0) delta += J * la.mu;
    }
    if (!la.dGamma_dgamma.empty()) {
      const Matrix& G = la.dGamma_dgamma[h];
      if (G.rows() != K * K || G.cols() != la.nu.size())
        throw ShapeMismatch("gamma Jacobian shape does not match K and nu");
      if (G.cols() > 0) delta += G * la.nu;
    }
    lambda += delta.dot(pi_projector(la.gamma0, J) * delta);
  }
  return std::max(lambda, 0.0);
}

/** beta = Q_{df/2}(sqrt(lambda), sqrt(chi2_{1-alpha}(df))). */
inline double local_power(double lambda, double df, double alpha = 0.05) {
  check_alpha(alpha);
  if (!(lambda >= 0.0)) throw UsageError("non-centrality must be nonnegative");
  const double crit = chi2_quantile(df, 1.0 - alpha);
  if (lambda == 0.0) return chi2_sf(crit, df);
  return marcum_q(0.5 * df, std::sqrt(lambda), std::sqrt(crit));
}

/** Builds the data-generating spec from (theta, gamma). */
using DgpBuilder = std::function<ModelSpec(const Vector& theta, const Vector& gamma)>;

struct JacobianConfig {
  Index T_large = 100000;
  double step = 1e-3;  // relative: h_i = step * max(1, |theta_i|)
  std::uint64_t seed = 1;
};

namespace detail {

inline Vector long_run_vec_gamma(const ModelSpec& dgp, const ModelSpec& null_tmpl,
                                 const Vector& theta0, const TransformSet& ts, Index H,
                                 const ErrorDistribution& dist, const JacobianConfig& cfg,
                                 Index burn, Matrix* gamma0_out) {
  const Simulation sim = simulate(dgp, dist, cfg.T_large, cfg.seed, burn);
  const Matrix u = residuals_raw(null_tmpl, theta0, sim.series.values());
  const AutocovStack st = sample_autocov_matrix(transform_matrix(u, ts), H);
  const Index K = st.K;
  Vector out(K * K * H);
  for (Index h = 1; h <= H; ++h)
    out.segment((h - 1) * K * K, K * K) =
        Eigen::Map<const Vector>(st.gamma[static_cast<std::size_t>(h)].data(), K * K);
  if (gamma0_out) *gamma0_out = st.gamma[0];
  return out;
}

}  // namespace detail

/**
 * Central finite differences of long-run autocovariances of transformed
 * residuals (computed at the null theta0) with respect to the DGP
 * parameters, using common random numbers for every perturbation.
 */
inline LocalAlternative jacobian_dGamma(const DgpBuilder& dgp, const ModelSpec& null_tmpl,
                                        const Vector& theta0, const Vector& gamma0,
                                        const TransformSet& ts, Index H,
                                        const ErrorDistribution& dist,
                                        const JacobianConfig& cfg = {}) {
  if (!(cfg.step > 0.0)) throw UsageError("finite-difference step must be positive");
  const Index K = ts.size();
  const Index burn = default_burn(dgp(theta0, gamma0)) + 200;
  LocalAlternative la;
  la.mu = Vector::Zero(theta0.size());
  la.nu = Vector::Zero(gamma0.size());
  detail::long_run_vec_gamma(dgp(theta0, gamma0), null_tmpl, theta0, ts, H, dist, cfg, burn,
                             &la.gamma0);
  auto diff = [&](bool wrt_theta, Index i) {
    Vector th = theta0, ga = gamma0;
    Vector& v = wrt_theta ? th : ga;
    const double hstep = cfg.step * std::max(1.0, std::abs(v[i]));
    const double base = v[i];
    v[i] = base + hstep;
    const Vector plus =
        detail::long_run_vec_gamma(dgp(th, ga), null_tmpl, theta0, ts, H, dist, cfg, burn, nullptr);
    v[i] = base - hstep;
    const Vector minus =
        detail::long_run_vec_gamma(dgp(th, ga), null_tmpl, theta0, ts, H, dist, cfg, burn, nullptr);
    return Vector((plus - minus) / (2.0 * hstep));
  };
  std::vector<Vector> dth, dga;
  for (Index i = 0; i < theta0.size(); ++i) dth.push_back(diff(true, i));
  for (Index i = 0; i < gamma0.size(); ++i) dga.push_back(diff(false, i));
  for (Index h = 0; h < H; ++h) {
    Matrix Jt(K * K, theta0.size()), Jg(K * K, gamma0.size());
    for (Index i = 0; i < theta0.size(); ++i)
      Jt.col(i) = dth[static_cast<std::size_t>(i)].segment(h * K * K, K * K);
    for (Index i = 0; i < gamma0.size(); ++i)
      Jg.col(i) = dga[static_cast<std::size_t>(i)].segment(h * K * K, K * K);
    la.dGamma_dtheta.push_back(Jt);
    la.dGamma_dgamma.push_back(Jg);
  }
  return la;
}

// ---------------------------------------------------------------------------
// extended concentrated CUGMM (lag 1)

struct CugmmResult {
  Vector theta_hat;
  Vector beta_hat;
  double objective = 0.0;
  bool converged = false;
};

/**
 * Continuously updated quadratic form in the K + K^2 centered moments
 * m_t = [a_t - beta ; vec((a_t - beta)(a_{t-1} - beta)')], t = 1..n-1,
 * with beta concentrated out as the mean of a_t over the same range.
 */
inline double cugmm_objective(const ModelSpec& tmpl, const Vector& theta, const Matrix& y,
                              const TransformSet& ts, Vector* beta_out = nullptr) {
  const Matrix a = transform_matrix(residuals_raw(tmpl, theta, y), ts);
  const Index n = a.rows(), K = a.cols();
  if (n < 3) throw InsufficientSample("CUGMM needs at least 3 residuals");
  const Index m = n - 1;
  const Vector beta = a.bottomRows(m).colwise().mean().transpose();
  Matrix M(m, K + K * K);
  for (Index t = 1; t < n; ++t) {
    const Eigen::RowVectorXd cur = a.row(t) - beta.transpose();
    const Eigen::RowVectorXd lag = a.row(t - 1) - beta.transpose();
    M.block(t - 1, 0, 1, K) = cur;
    for (Index j = 0; j < K; ++j)
      for (Index i = 0; i < K; ++i) M(t - 1, K + j * K + i) = cur[i] * lag[j];
  }
  const Eigen::RowVectorXd mbar = M.colwise().mean();
  const Matrix C = M.rowwise() - mbar;
  const Matrix S = (C.transpose() * C) / static_cast<double>(m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  if (es.info() != Eigen::Success ||
      !(es.eigenvalues().minCoeff() > 1e-13 * std::max(1e-300, es.eigenvalues().maxCoeff())))
    throw SingularWeighting("moment covariance is singular");
  const Vector proj = es.eigenvectors().transpose() * mbar.transpose();
  if (beta_out) *beta_out = beta;
  return (proj.array().square() / es.eigenvalues().array()).sum();
}

inline CugmmResult cugmm_extended_fit(const ModelSpec& tmpl, const TimeSeries& y,
                                      const TransformSet& ts, Index H = 1,
                                      const GcovOptions& opt = {},
                                      std::optional<Vector> start = std::nullopt) {
  if (H != 1) throw UsageError("extended CUGMM is implemented for H = 1");
  const Index K = ts.size();
  if (K + K * K < tmpl.dim_theta() + K)
    throw DfNonPositive("fewer moments than parameters in extended CUGMM");
  const Matrix& Y = y.values();
  if (!start) start = gcov_fit(tmpl, y, ts, 1, opt).theta_hat;
  Objective f = [&](const Vector& eta) {
    return cugmm_objective(tmpl, from_unconstrained(tmpl, eta), Y, ts);
  };
  SimplexOptions so = opt.simplex;
  so.tolerance = std::min(so.tolerance, 1e-10);
  so.initial_step = 0.05;
  const MultiStartResult ms = multistart(f, {to_unconstrained(tmpl, *start)}, so);
  CugmmResult res;
  res.theta_hat = from_unconstrained(tmpl, ms.x);
  res.objective = cugmm_objective(tmpl, res.theta_hat, Y, ts, &res.beta_hat);
  res.converged = ms.runs.front().converged;
  return res;
}

inline Json to_json(const GcovFit& fit) {
  Json j;
  j["model"] = fit.spec.name();
  j["parameters"] = fit.spec.parameter_names();
  j["theta_hat"] = to_json(fit.theta_hat);
  j["objective_min"] = fit.objective_min;
  j["H"] = fit.H;
  j["K"] = fit.K;
  j["T"] = fit.T;
  j["transforms"] = fit.transforms.labels();
  Json tr = Json::array();
  for (const auto& r : fit.trace)
    tr.push_back({{"x", to_json(r.x)}, {"f", r.f}, {"iterations", r.iterations},
                  {"converged", r.converged}});
  j["optimizer_trace"] = tr;
  j["best_start"] = fit.best_start;
  return j;
}

}  // namespace gcovtest

#endif  // GCOVTEST_GCOV_HPP
