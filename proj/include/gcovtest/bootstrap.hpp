#ifndef GCOVTEST_BOOTSTRAP_HPP
#define GCOVTEST_BOOTSTRAP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "gcovtest/distributions.hpp"
#include "gcovtest/errors.hpp"
#include "gcovtest/gcov.hpp"
#include "gcovtest/models.hpp"
#include "gcovtest/parallel.hpp"
#include "gcovtest/report.hpp"

namespace gcovtest {

struct BootstrapConfig {
  Index S = 100;
  bool with_replacement = true;
  std::uint64_t seed = 1;
  Index burn = -1;  // < 0: default_burn of the fitted spec, capped at max_burn
  Index max_burn = 100000;
  double max_drop_fraction = 0.05;
  EstimatorConfig estimator{};
  unsigned workers = 1;
};

struct BootstrapResult {
  std::vector<double> statistics;  // kept replicates, in replicate order
  Matrix refit_estimates;          // one row per kept replicate
  Index S = 0;
  Index dropped = 0;
  bool with_replacement = true;
  std::uint64_t seed = 0;

  /** Nearest-rank quantile: the ceil(level * S)-th order statistic. */
  double quantile(double level) const {
    if (statistics.empty()) throw RefitFailure("no bootstrap statistics");
    if (level <= 0.0) return -std::numeric_limits<double>::infinity();
    std::vector<double> s = statistics;
    std::sort(s.begin(), s.end());
    const auto n = static_cast<double>(s.size());
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(level * n - 1e-9)));
    return s[std::min(k, s.size()) - 1];
  }
  double q95() const { return quantile(0.95); }
};

namespace detail {

/**
 * Error path of length T + 2 burn drawn from the residual pool.  In the
 * permutation scheme the positions matching the original residuals carry
 * a shuffle of the pool and only the burn margins are drawn with
 * replacement.
 */
inline Matrix resample_errors(const Matrix& pool, Index T, Index burn, Index first, bool with_repl,
                              Rng& rng) {
  const Index n = pool.rows();
  const Index N = T + 2 * burn;
  Matrix e(N, pool.cols());
  std::uniform_int_distribution<Index> pick(0, n - 1);
  for (Index t = 0; t < N; ++t) e.row(t) = pool.row(pick(rng));
  if (!with_repl) {
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Index i = 0; i < n; ++i) e.row(burn + first + i) = pool.row(perm[static_cast<std::size_t>(i)]);
  }
  return e;
}

inline Index bootstrap_burn(const ModelSpec& spec, const BootstrapConfig& cfg) {
  if (cfg.burn >= 0) return cfg.burn;
  return std::min(default_burn(spec), cfg.max_burn);
}

}  // namespace detail

/** Rebuilds a series of length T from an error path via the model's generator. */
inline Matrix rebuild_series(const ModelSpec& spec, const Matrix& errors, Index T, Index burn) {
  if (errors.rows() != T + 2 * burn) throw ShapeMismatch("error path length must be T + 2 burn");
  return filter_errors(spec, errors).middleRows(burn, T);
}

/** Statistic n L(theta) at a given theta. */
inline double spec_statistic(const ModelSpec& tmpl, const Vector& theta, const Matrix& y,
                             const TransformSet& ts, Index H) {
  const double n = static_cast<double>(y.rows() - tmpl.lags() - tmpl.leads());
  return n * gcov_objective_raw(tmpl, theta, y, ts, H);
}

/**
 * Residual bootstrap of the spec-test statistic under the fitted null:
 * resample residuals at theta_hat, rebuild, re-estimate with the configured
 * estimator, recompute n L.  Replicates whose refit fails are dropped and
 * counted; more than max_drop_fraction drops aborts.
 */
inline BootstrapResult bootstrap_null(const ModelSpec& tmpl, const Vector& theta_hat,
                                      const TimeSeries& y, const TransformSet& ts, Index H,
                                      const BootstrapConfig& cfg) {
  if (cfg.S < 1) throw UsageError("bootstrap needs S >= 1");
  const ModelSpec fitted = tmpl.with_theta(theta_hat);
  const Matrix pool = residuals_raw(tmpl, theta_hat, y.values());
  const Index T = y.length();
  const Index burn = detail::bootstrap_burn(fitted, cfg);
  const std::size_t S = static_cast<std::size_t>(cfg.S);
  std::vector<std::optional<double>> stat(S);
  std::vector<Vector> est(S);
  parallel_for(
      S,
      [&](std::size_t s) {
        Rng rng(derive_seed(cfg.seed, s));
        const Matrix e = detail::resample_errors(pool, T, burn, tmpl.lags(), cfg.with_replacement, rng);
        try {
          const TimeSeries ys(rebuild_series(fitted, e, T, burn));
          const Vector th = estimate_theta(tmpl, ys, ts, H, cfg.estimator);
          stat[s] = spec_statistic(tmpl, th, ys.values(), ts, H);
          est[s] = th;
          if (!std::isfinite(*stat[s])) stat[s].reset();
        } catch (const Error&) {
          stat[s].reset();
        }
      },
      cfg.workers);
  BootstrapResult res;
  res.S = cfg.S;
  res.with_replacement = cfg.with_replacement;
  res.seed = cfg.seed;
  std::vector<Vector> kept;
  for (std::size_t s = 0; s < S; ++s) {
    if (stat[s]) {
      res.statistics.push_back(*stat[s]);
      kept.push_back(est[s]);
    } else {
      ++res.dropped;
    }
  }
  if (static_cast<double>(res.dropped) > cfg.max_drop_fraction * static_cast<double>(S))
    throw RefitFailure(std::to_string(res.dropped) + " of " + std::to_string(S) +
                       " bootstrap refits failed");
  res.refit_estimates.resize(static_cast<Index>(kept.size()), tmpl.dim_theta());
  for (std::size_t i = 0; i < kept.size(); ++i)
    res.refit_estimates.row(static_cast<Index>(i)) = kept[i].transpose();
  return res;
}

struct BootstrapTest {
  TestReport report;
  BootstrapResult bootstrap;
  Vector theta_hat;
};

/** Estimate, compute n L(theta_hat), and reject iff it exceeds the bootstrap (1 - alpha) quantile. */
inline BootstrapTest bootstrap_test(const ModelSpec& tmpl, const TimeSeries& y, const TransformSet& ts,
                                    Index H, double alpha, const BootstrapConfig& cfg) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in (0,1]");
  BootstrapTest out;
  out.theta_hat = estimate_theta(tmpl, y, ts, H, cfg.estimator);
  const double stat = spec_statistic(tmpl, out.theta_hat, y.values(), ts, H);
  out.bootstrap = bootstrap_null(tmpl, out.theta_hat, y, ts, H, cfg);
  TestReport& r = out.report;
  r.statistic = stat;
  r.critical_value = out.bootstrap.quantile(1.0 - alpha);
  const auto& bs = out.bootstrap.statistics;
  r.p_value = static_cast<double>(std::count_if(bs.begin(), bs.end(), [&](double v) { return v >= stat; })) /
              static_cast<double>(bs.size());
  r.alpha = alpha;
  r.reject = stat > r.critical_value;
  r.method = "gcov-bootstrap-" + to_string(cfg.estimator.kind);
  r.config = ConfigEcho{ts.labels(), H, y.length() - tmpl.lags() - tmpl.leads(), ts.size(), Json::object()};
  r.config.extra["model"] = tmpl.name();
  r.config.extra["theta_hat"] = to_json(out.theta_hat);
  r.config.extra["S"] = cfg.S;
  r.config.extra["seed"] = cfg.seed;
  r.config.extra["scheme"] = cfg.with_replacement ? "with-replacement" : "permutation";
  r.config.extra["dropped"] = out.bootstrap.dropped;
  return out;
}

struct RejectionRate {
  double rate = 0.0;
  double se = 0.0;
  Index reps = 0;
  Index failures = 0;
};

inline RejectionRate make_rate(Index rejections, Index valid, Index failures) {
  RejectionRate r;
  r.reps = valid;
  r.failures = failures;
  if (valid > 0) {
    r.rate = static_cast<double>(rejections) / static_cast<double>(valid);
    r.se = std::sqrt(r.rate * (1.0 - r.rate) / static_cast<double>(valid));
  }
  return r;
}

struct BootstrapStudy {
  RejectionRate size;
  RejectionRate power;
};

/**
 * Rejection rates of the bootstrap test on data simulated from the null
 * spec and from the alternative spec; replicate i uses derive_seed(seed, i).
 */
inline BootstrapStudy bootstrap_size_power_study(const ModelSpec& null_spec, const ModelSpec& alt_spec,
                                                 const ErrorDistribution& dist, Index T,
                                                 const TransformSet& ts, Index H, Index reps,
                                                 double alpha, BootstrapConfig cfg,
                                                 std::uint64_t seed, bool run_power = true,
                                                 unsigned workers = 0) {
  const ModelSpec tmpl = null_spec.with_theta_unchecked(Vector::Zero(null_spec.dim_theta()));
  auto run = [&](const ModelSpec& dgp, std::uint64_t stream) {
    std::vector<int> outcome(static_cast<std::size_t>(reps), -1);
    parallel_for(
        static_cast<std::size_t>(reps),
        [&](std::size_t i) {
          const std::uint64_t s = derive_seed(derive_seed(seed, stream), i);
          BootstrapConfig c = cfg;
          c.seed = derive_seed(s, 7);
          c.workers = 1;
          try {
            const Simulation sim = simulate(dgp, dist, T, s);
            outcome[i] = bootstrap_test(tmpl, sim.series, ts, H, alpha, c).report.reject ? 1 : 0;
          } catch (const Error&) {
            outcome[i] = -1;
          }
        },
        workers);
    Index rej = 0, valid = 0, fail = 0;
    for (int o : outcome) {
      if (o < 0) ++fail;
      else {
        ++valid;
        rej += o;
      }
    }
    return make_rate(rej, valid, fail);
  };
  BootstrapStudy st;
  st.size = run(null_spec, 0);
  if (run_power) st.power = run(alt_spec, 1);
  return st;
}

/**
 * Bootstrap approximation of power against a fitted alternative: fit the
 * alternative by GCov, resample its residuals, rebuild under it, refit the
 * null and compare n L with the null bootstrap quantile.
 */
inline double bootstrap_local_power(const ModelSpec& alt_tmpl, const ModelSpec& null_tmpl,
                                    const TimeSeries& y, const TransformSet& ts, Index H,
                                    Index S, std::uint64_t seed, double alpha,
                                    const BootstrapConfig& base = {}) {
  if (S < 1) throw UsageError("bootstrap needs S >= 1");
  check_alpha(alpha);
  BootstrapConfig null_cfg = base;
  null_cfg.S = S;
  null_cfg.seed = derive_seed(seed, 1);
  const Vector theta0 = estimate_theta(null_tmpl, y, ts, H, base.estimator);
  const double q = bootstrap_null(null_tmpl, theta0, y, ts, H, null_cfg).quantile(1.0 - alpha);

  const GcovFit alt = gcov_fit(alt_tmpl, y, ts, H, base.estimator.gcov);
  const ModelSpec alt_spec = alt_tmpl.with_theta(alt.theta_hat);
  const Matrix pool = residuals_raw(alt_tmpl, alt.theta_hat, y.values());
  const Index T = y.length();
  const Index burn = detail::bootstrap_burn(alt_spec, base);
  const std::uint64_t alt_seed = derive_seed(seed, 2);
  std::vector<int> outcome(static_cast<std::size_t>(S), -1);
  parallel_for(
      static_cast<std::size_t>(S),
      [&](std::size_t s) {
        Rng rng(derive_seed(alt_seed, s));
        const Matrix e = detail::resample_errors(pool, T, burn, alt_tmpl.lags(), base.with_replacement, rng);
        try {
          const TimeSeries ys(rebuild_series(alt_spec, e, T, burn));
          const Vector th = estimate_theta(null_tmpl, ys, ts, H, base.estimator);
          outcome[s] = spec_statistic(null_tmpl, th, ys.values(), ts, H) > q ? 1 : 0;
        } catch (const Error&) {
          outcome[s] = -1;
        }
      },
      base.workers);
  Index rej = 0, valid = 0;
  for (int o : outcome)
    if (o >= 0) {
      ++valid;
      rej += o;
    }
  if (static_cast<double>(S - valid) > base.max_drop_fraction * static_cast<double>(S))
    throw RefitFailure("too many failed refits in the local-power bootstrap");
  return static_cast<double>(rej) / static_cast<double>(valid);
}

inline Json to_json(const BootstrapResult& b) {
  Json j;
  j["S"] = b.S;
  j["seed"] = b.seed;
  j["scheme"] = b.with_replacement ? "with-replacement" : "permutation";
  j["dropped"] = b.dropped;
  j["q95"] = b.statistics.empty() ? 0.0 : b.q95();
  j["statistics"] = b.statistics;
  return j;
}

}  // namespace gcovtest

#endif  // GCOVTEST_BOOTSTRAP_HPP
