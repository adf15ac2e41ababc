#ifndef GCOVTEST_DISTRIBUTIONS_HPP
#define GCOVTEST_DISTRIBUTIONS_HPP

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "gcovtest/errors.hpp"
#include "gcovtest/series.hpp"

namespace gcovtest {

using Rng = std::mt19937_64;

/** splitmix64 finalizer, used to derive independent stream seeds. */
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/**
 * Seed of sub-stream `index` of `seed`.  Parallel workers and Monte Carlo
 * replicates draw from derive_seed(seed, replicate) so results do not
 * depend on the worker count.
 */
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x5851f42d4c957f2dULL));
}

enum class DistKind { uniform, laplace, student_t, cauchy, gaussian };

class ErrorDistribution {
 public:
  static ErrorDistribution uniform() { return ErrorDistribution(DistKind::uniform, 0.0); }
  static ErrorDistribution laplace() { return ErrorDistribution(DistKind::laplace, 0.0); }
  static ErrorDistribution gaussian() { return ErrorDistribution(DistKind::gaussian, 0.0); }
  static ErrorDistribution cauchy() { return ErrorDistribution(DistKind::cauchy, 1.0); }
  /** Standard t(nu); variance nu/(nu-2) when nu > 2, never rescaled. */
  static ErrorDistribution student_t(double nu) {
    if (!(nu > 0.0) || !std::isfinite(nu))
      throw UsageError("student-t needs nu > 0");
    return ErrorDistribution(DistKind::student_t, nu);
  }

  DistKind kind() const noexcept { return kind_; }
  double nu() const noexcept { return nu_; }

  std::string name() const {
    switch (kind_) {
      case DistKind::uniform: return "uniform";
      case DistKind::laplace: return "laplace";
      case DistKind::gaussian: return "gaussian";
      case DistKind::cauchy: return "cauchy";
      case DistKind::student_t: {
        std::ostringstream os;
        os << "t(" << nu_ << ")";
        return os.str();
      }
    }
    return "?";
  }

  /** Variance of the law, infinity when it does not exist. */
  double variance() const {
    switch (kind_) {
      case DistKind::uniform: return 1.0 / 3.0;
      case DistKind::laplace: return 1.0;
      case DistKind::gaussian: return 1.0;
      case DistKind::cauchy: return std::numeric_limits<double>::infinity();
      case DistKind::student_t:
        return nu_ > 2.0 ? nu_ / (nu_ - 2.0) : std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  double draw(Rng& rng) const {
    switch (kind_) {
      case DistKind::uniform:
        return 2.0 * open_unit(rng) - 1.0;
      case DistKind::laplace: {
        const double u = open_unit(rng) - 0.5;
        const double b = 1.0 / std::numbers::sqrt2;
        return u < 0 ? b * std::log1p(2.0 * u) : -b * std::log1p(-2.0 * u);
      }
      case DistKind::gaussian:
        return std::normal_distribution<double>(0.0, 1.0)(rng);
      case DistKind::cauchy:
        return std::tan(std::numbers::pi * (open_unit(rng) - 0.5));
      case DistKind::student_t:
        return std::student_t_distribution<double>(nu_)(rng);
    }
    return 0.0;
  }

  /** Uniform on the open interval (0,1) from the top 53 bits. */
  static double open_unit(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  ErrorDistribution(DistKind k, double nu) : kind_(k), nu_(nu) {}
  DistKind kind_;
  double nu_;
};

inline ErrorDistribution parse_distribution(const std::string& text) {
  if (text == "uniform") return ErrorDistribution::uniform();
  if (text == "laplace") return ErrorDistribution::laplace();
  if (text == "gaussian" || text == "normal") return ErrorDistribution::gaussian();
  if (text == "cauchy") return ErrorDistribution::cauchy();
  std::string nu;
  if (text.rfind("t(", 0) == 0 && text.back() == ')') nu = text.substr(2, text.size() - 3);
  else if (text.rfind("t", 0) == 0) nu = text.substr(1);
  else if (text.rfind("student-t:", 0) == 0) nu = text.substr(10);
  double v;
  if (!nu.empty() && detail::parse_double(nu, v)) return ErrorDistribution::student_t(v);
  throw UsageError("unknown distribution '" + text + "'");
}

inline std::vector<double> sample(const ErrorDistribution& dist, std::size_t n,
                                  std::uint64_t seed) {
  if (n == 0) throw UsageError("sample size must be positive");
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = dist.draw(rng);
  return out;
}

inline Vector sample_vector(const ErrorDistribution& dist, Index n, Rng& rng) {
  Vector out(n);
  for (Index i = 0; i < n; ++i) out[i] = dist.draw(rng);
  return out;
}

// ---------------------------------------------------------------------------
// central chi-square and normal

inline double chi2_cdf(double x, double df) {
  if (!(df > 0.0)) throw UsageError("chi-square df must be positive");
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(0.5 * df, 0.5 * x);
}

inline double chi2_sf(double x, double df) {
  if (!(df > 0.0)) throw UsageError("chi-square df must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

inline double chi2_quantile(double df, double prob) {
  if (!(df > 0.0)) throw UsageError("chi-square df must be positive");
  if (!(prob > 0.0 && prob < 1.0)) throw UsageError("probability must lie in (0,1)");
  return 2.0 * boost::math::gamma_p_inv(0.5 * df, prob);
}

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw UsageError("probability must lie in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

// ---------------------------------------------------------------------------
// Marcum Q and non-central chi-square

enum class MarcumRoute { closed_form, integral, series };

struct MarcumResult {
  double value;
  MarcumRoute route;
  double error_bound;
};

/**
 * Q_delta(a,b) from the Poisson mixture of central chi-square tails,
 * sum_j Pois(j; a^2/2) Q(delta + j, b^2/2).  Valid for any real delta > 0.
 */
inline double marcum_q_series(double delta, double a, double b) {
  if (!(delta > 0.0)) throw UsageError("Marcum Q order must be positive");
  if (a < 0.0 || b < 0.0) throw UsageError("Marcum Q arguments must be nonnegative");
  if (b == 0.0) return 1.0;
  const double mu = 0.5 * a * a;
  const double x = 0.5 * b * b;
  if (mu == 0.0) return boost::math::gamma_q(delta, x);
  // sum outward from the Poisson mode so no weight underflows prematurely
  const double mode = std::floor(mu);
  const double spread = std::sqrt(mu) * 12.0 + 40.0;
  const long jlo = static_cast<long>(std::max(0.0, mode - spread));
  const long jhi = static_cast<long>(mode + spread);
  double sum = 0.0;
  for (long j = jlo; j <= jhi; ++j) {
    const double jd = static_cast<double>(j);
    const double logw = -mu + jd * std::log(mu) - std::lgamma(jd + 1.0);
    const double w = std::exp(logw);
    if (w == 0.0) continue;
    sum += w * boost::math::gamma_q(delta + jd, x);
  }
  return std::clamp(sum, 0.0, 1.0);
}

namespace detail {

/**
 * The trigonometric representation H_delta(a,b), integer delta, a != b or
 * a == b via the removable limit at w = 0.  Returns the value and an
 * absolute error bound combining quadrature error and amplified roundoff.
 */
inline std::pair<double, double> marcum_h_integral(int delta, double a, double b) {
  const double zeta = a / b;
  const double d = static_cast<double>(delta);
  const double ab = a * b;
  const bool equal = a == b;
  // exp(ab cos w) is factored as exp(ab) * exp(ab (cos w - 1)) so that the
  // prefactor combines into exp(-(b-a)^2/2) without overflow
  auto integrand = [&](double w) {
    const double c = std::cos(w);
    const double e = std::exp(ab * (c - 1.0));
    if (equal) {
      const double den = 2.0 - 2.0 * c;
      if (den < 1e-12) return (2.0 * d - 1.0) / 2.0 * e;
      return (std::cos((d - 1.0) * w) - std::cos(d * w)) / den * e;
    }
    const double den = 1.0 - 2.0 * zeta * c + zeta * zeta;
    return (std::cos((d - 1.0) * w) - zeta * std::cos(d * w)) / den * e;
  };
  double qerr = 0.0;
  double l1 = 0.0;
  // even integrand: integral over [0, 2pi] equals twice the one over [0, pi]
  const double I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, std::numbers::pi, 15, 1e-14, &qerr, &l1);
  const double pref = std::exp((1.0 - d) * std::log(zeta) - 0.5 * (b - a) * (b - a)) /
                      std::numbers::pi;
  const double value = pref * I;
  const double roundoff =
      pref * (l1 + 1.0) * 64.0 * std::numeric_limits<double>::epsilon();
  return {value, pref * qerr + roundoff};
}

}  // namespace detail

/**
 * Q_delta(a,b) by the three-branch trigonometric integral (integer delta)
 * with the Poisson-mixture series as fallback and for non-integer delta.
 */
inline MarcumResult marcum_q_detailed(double delta, double a, double b,
                                      double tolerance = 1e-9) {
  if (!(delta > 0.0)) throw UsageError("Marcum Q order must be positive");
  if (a < 0.0 || b < 0.0 || !std::isfinite(a) || !std::isfinite(b))
    throw UsageError("Marcum Q arguments must be finite and nonnegative");
  if (b == 0.0) return {1.0, MarcumRoute::closed_form, 0.0};
  if (a == 0.0)
    return {boost::math::gamma_q(delta, 0.5 * b * b), MarcumRoute::closed_form, 0.0};
  const bool integer = delta == std::floor(delta) && delta <= 1e6;
  if (integer) {
    const auto [h, bound] = detail::marcum_h_integral(static_cast<int>(delta), a, b);
    if (std::isfinite(h) && bound <= tolerance) {
      double q = a < b ? h : (a == b ? 0.5 + h : 1.0 + h);
      return {std::clamp(q, 0.0, 1.0), MarcumRoute::integral, bound};
    }
  }
  const double q = marcum_q_series(delta, a, b);
  if (!std::isfinite(q)) throw NonConvergence("Marcum Q evaluation failed");
  return {q, MarcumRoute::series, 1e-12};
}

inline double marcum_q(double delta, double a, double b) {
  return marcum_q_detailed(delta, a, b).value;
}

/** Value of the integral branch alone, for integer delta; used in cross-checks. */
inline MarcumResult marcum_q_integral(int delta, double a, double b) {
  if (delta < 1) throw UsageError("integral branch needs a positive integer order");
  if (b == 0.0) return {1.0, MarcumRoute::closed_form, 0.0};
  if (a == 0.0)
    return {boost::math::gamma_q(static_cast<double>(delta), 0.5 * b * b),
            MarcumRoute::closed_form, 0.0};
  const auto [h, bound] = detail::marcum_h_integral(delta, a, b);
  const double q = a < b ? h : (a == b ? 0.5 + h : 1.0 + h);
  return {std::clamp(q, 0.0, 1.0), MarcumRoute::integral, bound};
}

struct NoncentralChiSquare {
  double df;
  double lambda;
  NoncentralChiSquare(double df_, double lambda_) : df(df_), lambda(lambda_) {
    if (!(df > 0.0)) throw UsageError("non-central chi-square df must be positive");
    if (!(lambda >= 0.0)) throw UsageError("non-centrality must be nonnegative");
  }
};

/** F(x; df, lambda) = 1 - Q_{df/2}(sqrt(lambda), sqrt(x)). */
inline double noncentral_chi2_cdf(double x, const NoncentralChiSquare& d) {
  if (x < 0.0) throw UsageError("non-central chi-square argument must be nonnegative");
  if (x == 0.0) return 0.0;
  if (d.lambda == 0.0) return chi2_cdf(x, d.df);
  return 1.0 - marcum_q(0.5 * d.df, std::sqrt(d.lambda), std::sqrt(x));
}

inline double noncentral_chi2_sf(double x, const NoncentralChiSquare& d) {
  if (x <= 0.0) return 1.0;
  if (d.lambda == 0.0) return chi2_sf(x, d.df);
  return marcum_q(0.5 * d.df, std::sqrt(d.lambda), std::sqrt(x));
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov normality

struct KsResult {
  double statistic;
  double critical_value;
  bool reject;
};

/** KS distance of the standardized series to N(0,1); 5% critical value 1.36/sqrt(T). */
inline KsResult ks_normality(const TimeSeries& series) {
  if (series.dim() != 1) throw ShapeMismatch("KS normality expects one column");
  const Index n = series.length();
  if (n < 8) throw InsufficientSample("KS normality needs at least 8 points");
  Vector x = series.values().col(0);
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw DegenerateSeries("zero sample standard deviation");
  std::vector<double> z(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = (x[i] - mean) / sd;
  std::sort(z.begin(), z.end());
  double D = 0.0;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double F = normal_cdf(z[i]);
    D = std::max({D, static_cast<double>(i + 1) / dn - F, F - static_cast<double>(i) / dn});
  }
  const double crit = 1.36 / std::sqrt(dn);
  return {D, crit, D > crit};
}

inline double ks_normality_statistic(const TimeSeries& series) {
  return ks_normality(series).statistic;
}

}  // namespace gcovtest

#endif  // GCOVTEST_DISTRIBUTIONS_HPP
