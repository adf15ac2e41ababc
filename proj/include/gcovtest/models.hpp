#ifndef GCOVTEST_MODELS_HPP
#define GCOVTEST_MODELS_HPP

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gcovtest/distributions.hpp"
#include "gcovtest/errors.hpp"
#include "gcovtest/optimize.hpp"
#include "gcovtest/series.hpp"

namespace gcovtest {

enum class ModelKind { mar, dar1, var, noncausal_ar1 };

/** Companion-matrix eigenvalues of 1 - c_1 z - ... - c_q z^q (reciprocal roots). */
inline std::vector<std::complex<double>> reciprocal_roots(const Vector& c) {
  const Index q = c.size();
  if (q == 0) return {};
  Matrix comp = Matrix::Zero(q, q);
  comp.row(0) = c.transpose();
  for (Index i = 1; i < q; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Matrix> es(comp, false);
  std::vector<std::complex<double>> out;
  for (Index i = 0; i < q; ++i) out.push_back(es.eigenvalues()[i]);
  return out;
}

/** Roots of 1 - sum c_i z^i, ordered by modulus. */
inline std::vector<std::complex<double>> polynomial_roots(const Vector& c) {
  std::vector<std::complex<double>> out;
  for (const auto& ev : reciprocal_roots(c))
    out.push_back(std::abs(ev) > 0.0 ? 1.0 / ev
                                     : std::complex<double>(std::numeric_limits<double>::infinity()));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return std::abs(a) < std::abs(b); });
  return out;
}

inline double max_reciprocal_modulus(const Vector& c) {
  double m = 0.0;
  for (const auto& ev : reciprocal_roots(c)) m = std::max(m, std::abs(ev));
  return m;
}

/** True when every root of 1 - sum c_i z^i has modulus above 1 + 1e-8. */
inline bool roots_outside_unit_circle(const Vector& c) {
  return max_reciprocal_modulus(c) * (1.0 + 1e-8) < 1.0;
}

namespace detail {

constexpr double kPacfBound = 0.999999;

/** Partial autocorrelations to AR coefficients (Durbin-Levinson). */
inline Vector pacf_to_coeffs(const Vector& kappa) {
  const Index q = kappa.size();
  Vector c = Vector::Zero(q);
  Vector prev = Vector::Zero(q);
  for (Index k = 0; k < q; ++k) {
    prev = c;
    c[k] = kappa[k];
    for (Index j = 0; j < k; ++j) c[j] = prev[j] - kappa[k] * prev[k - 1 - j];
  }
  return c;
}

inline Vector coeffs_to_pacf(const Vector& c_in) {
  const Index q = c_in.size();
  Vector c = c_in;
  Vector kappa(q);
  for (Index k = q - 1; k >= 0; --k) {
    const double kk = c[k];
    kappa[k] = kk;
    if (std::abs(kk) >= 1.0) throw InvalidTheta("coefficients outside the stationarity region");
    Vector next(k);
    for (Index j = 0; j < k; ++j) next[j] = (c[j] + kk * c[k - 1 - j]) / (1.0 - kk * kk);
    c.head(k) = next;
  }
  return kappa;
}

inline double bounded_tanh(double x) {
  return std::clamp(std::tanh(x), -kPacfBound, kPacfBound);
}

inline double bounded_atanh(double k) {
  return std::atanh(std::clamp(k, -kPacfBound, kPacfBound));
}

}  // namespace detail

/**
 * Residual model g(y; theta) with its parameter vector.
 *
 * MAR(r,s): theta = (phi_1..phi_r, psi_1..psi_s), Phi(L) Psi(L^{-1}) y_t = u_t.
 * DAR1: theta = (w, phi, alpha).  VAR(p) in dimension m: theta stacks
 * Phi_1..Phi_p row by row.  A spec built through a named constructor or
 * with_theta is validated; a template only fixes the structure.
 */
class ModelSpec {
 public:
  static ModelSpec mar(std::vector<double> phi, std::vector<double> psi) {
    ModelSpec m(ModelKind::mar, static_cast<int>(phi.size()), static_cast<int>(psi.size()), 0, 1);
    Vector th(m.dim_theta());
    for (std::size_t i = 0; i < phi.size(); ++i) th[static_cast<Index>(i)] = phi[i];
    for (std::size_t j = 0; j < psi.size(); ++j)
      th[static_cast<Index>(phi.size() + j)] = psi[j];
    return m.with_theta(th);
  }
  static ModelSpec mar_template(int r, int s) {
    if (r < 0 || s < 0) throw UsageError("MAR orders must be nonnegative");
    return ModelSpec(ModelKind::mar, r, s, 0, 1);
  }
  static ModelSpec noncausal_ar1(double psi) {
    return noncausal_ar1_template().with_theta(Vector::Constant(1, psi));
  }
  static ModelSpec noncausal_ar1_template() {
    return ModelSpec(ModelKind::noncausal_ar1, 0, 1, 0, 1);
  }
  static ModelSpec dar1(double w, double phi, double alpha) {
    Vector th(3);
    th << w, phi, alpha;
    return dar1_template().with_theta(th);
  }
  static ModelSpec dar1_template() { return ModelSpec(ModelKind::dar1, 0, 0, 1, 1); }
  static ModelSpec var(int p, int m, const Vector& theta) {
    return var_template(p, m).with_theta(theta);
  }
  static ModelSpec var_template(int p, int m) {
    if (p < 1 || m < 1) throw UsageError("VAR order and dimension must be positive");
    return ModelSpec(ModelKind::var, 0, 0, p, m);
  }

  ModelKind kind() const noexcept { return kind_; }
  bool is_mar() const noexcept { return kind_ == ModelKind::mar || kind_ == ModelKind::noncausal_ar1; }
  int r() const noexcept { return r_; }
  int s() const noexcept { return s_; }
  int p() const noexcept { return p_; }
  int m() const noexcept { return m_; }
  const Vector& theta() const noexcept { return theta_; }

  Index dim_theta() const noexcept {
    switch (kind_) {
      case ModelKind::mar:
      case ModelKind::noncausal_ar1: return r_ + s_;
      case ModelKind::dar1: return 3;
      case ModelKind::var: return static_cast<Index>(p_) * m_ * m_;
    }
    return 0;
  }
  /** Observations lost at the start and at the end of the sample. */
  Index lags() const noexcept { return is_mar() ? r_ : p_; }
  Index leads() const noexcept { return is_mar() ? s_ : 0; }
  Index input_dim() const noexcept { return kind_ == ModelKind::var ? m_ : 1; }

  Vector phi() const { return is_mar() ? Vector(theta_.head(r_)) : Vector(); }
  Vector psi() const { return is_mar() ? Vector(theta_.segment(r_, s_)) : Vector(); }

  /** Coefficient matrix Phi_i (1-based) of a VAR spec. */
  Matrix var_coefficient(int i) const {
    Matrix P(m_, m_);
    const Index off = static_cast<Index>(i - 1) * m_ * m_;
    for (Index a = 0; a < m_; ++a)
      for (Index b = 0; b < m_; ++b) P(a, b) = theta_[off + a * m_ + b];
    return P;
  }

  ModelSpec with_theta(const Vector& theta) const {
    ModelSpec out = *this;
    out.theta_ = theta;
    out.validate();
    return out;
  }

  /** Copy carrying theta without the stationarity guard (optimizer internals). */
  ModelSpec with_theta_unchecked(const Vector& theta) const {
    ModelSpec out = *this;
    out.theta_ = theta;
    return out;
  }

  std::string name() const {
    switch (kind_) {
      case ModelKind::mar: return "MAR(" + std::to_string(r_) + "," + std::to_string(s_) + ")";
      case ModelKind::noncausal_ar1: return "noncausalAR1";
      case ModelKind::dar1: return "DAR1";
      case ModelKind::var: return "VAR(" + std::to_string(p_) + "," + std::to_string(m_) + ")";
    }
    return "?";
  }

  std::vector<std::string> parameter_names() const {
    std::vector<std::string> out;
    switch (kind_) {
      case ModelKind::mar:
      case ModelKind::noncausal_ar1:
        for (int i = 1; i <= r_; ++i) out.push_back("phi_" + std::to_string(i));
        for (int j = 1; j <= s_; ++j) out.push_back("psi_" + std::to_string(j));
        break;
      case ModelKind::dar1:
        out = {"w", "phi", "alpha"};
        break;
      case ModelKind::var:
        for (int i = 1; i <= p_; ++i)
          for (int a = 1; a <= m_; ++a)
            for (int b = 1; b <= m_; ++b)
              out.push_back("Phi" + std::to_string(i) + "_" + std::to_string(a) +
                            std::to_string(b));
        break;
    }
    return out;
  }

 private:
  ModelSpec(ModelKind k, int r, int s, int p, int m)
      : kind_(k), r_(r), s_(s), p_(p), m_(m), theta_(Vector::Zero(0)) {
    theta_ = Vector::Zero(dim_theta());
    if (kind_ == ModelKind::dar1) theta_[0] = 1.0;
  }

  void validate() const {
    if (theta_.size() != dim_theta())
      throw InvalidTheta(name() + ": theta has " + std::to_string(theta_.size()) +
                         " entries, expected " + std::to_string(dim_theta()));
    if (!theta_.allFinite()) throw InvalidTheta(name() + ": non-finite theta");
    switch (kind_) {
      case ModelKind::mar:
      case ModelKind::noncausal_ar1:
        if (!roots_outside_unit_circle(phi()))
          throw InvalidTheta(name() + ": causal polynomial has a root inside the unit circle");
        if (!roots_outside_unit_circle(psi()))
          throw InvalidTheta(name() + ": noncausal polynomial has a root inside the unit circle");
        break;
      case ModelKind::dar1:
        if (!(theta_[0] > 0.0)) throw InvalidTheta("DAR1 needs w > 0");
        if (theta_[1] < 0.0 || theta_[2] < 0.0)
          throw InvalidTheta("DAR1 needs phi >= 0 and alpha >= 0");
        break;
      case ModelKind::var:
        break;
    }
  }

  ModelKind kind_;
  int r_, s_, p_, m_;
  Vector theta_;
};

// ---------------------------------------------------------------------------
// residuals

/**
 * u = g(y; theta) for the structure of `spec` and the given theta, without
 * stationarity checks.  MAR output covers t = r..T-s-1, DAR1 t = 1..T-1,
 * VAR t = p..T-1.
 */
inline Matrix residuals_raw(const ModelSpec& spec, const Vector& theta, const Matrix& y) {
  const Index T = y.rows();
  if (y.cols() != spec.input_dim())
    throw ShapeMismatch(spec.name() + " expects " + std::to_string(spec.input_dim()) +
                        " input column(s)");
  if (theta.size() != spec.dim_theta()) throw InvalidTheta("theta has the wrong length");
  const Index lost = spec.lags() + spec.leads();
  if (T <= lost + 1) throw InsufficientSample(spec.name() + ": sample too short");
  switch (spec.kind()) {
    case ModelKind::mar:
    case ModelKind::noncausal_ar1: {
      const Index r = spec.r(), s = spec.s();
      // w = Phi(L) y on t = r..T-1, then u = Psi(L^{-1}) w on t = r..T-s-1
      Vector w = y.col(0).tail(T - r);
      for (Index i = 1; i <= r; ++i) w -= theta[i - 1] * y.col(0).segment(r - i, T - r);
      const Index n = T - r - s;
      Vector u = w.head(n);
      for (Index j = 1; j <= s; ++j) u -= theta[r + j - 1] * w.segment(j, n);
      return Matrix(u);
    }
    case ModelKind::dar1: {
      const double w = theta[0], phi = theta[1], alpha = theta[2];
      Matrix u(T - 1, 1);
      for (Index t = 1; t < T; ++t) {
        const double prev = y(t - 1, 0);
        const double v = w + alpha * prev * prev;
        if (!(v > 0.0)) throw InvalidTheta("DAR1 conditional variance not positive");
        u(t - 1, 0) = (y(t, 0) - phi * prev) / std::sqrt(v);
      }
      return u;
    }
    case ModelKind::var: {
      const Index p = spec.p(), m = spec.m();
      Matrix u = y.bottomRows(T - p);
      for (Index i = 1; i <= p; ++i) {
        Matrix P(m, m);
        const Index off = (i - 1) * m * m;
        for (Index a = 0; a < m; ++a)
          for (Index b = 0; b < m; ++b) P(a, b) = theta[off + a * m + b];
        u.noalias() -= y.middleRows(p - i, T - p) * P.transpose();
      }
      return u;
    }
  }
  return {};
}

inline TimeSeries residuals(const ModelSpec& spec, const TimeSeries& y) {
  return TimeSeries(residuals_raw(spec, spec.theta(), y.values()), {},
                    spec.name() + " residuals");
}

// ---------------------------------------------------------------------------
// unconstrained parameterization and start grids

/** Maps theta to the optimizer space: atanh of partial autocorrelations for MAR. */
inline Vector to_unconstrained(const ModelSpec& spec, const Vector& theta) {
  switch (spec.kind()) {
    case ModelKind::mar:
    case ModelKind::noncausal_ar1: {
      const Index r = spec.r(), s = spec.s();
      Vector eta(r + s);
      const Vector kp = detail::coeffs_to_pacf(theta.head(r));
      const Vector ks = detail::coeffs_to_pacf(theta.segment(r, s));
      for (Index i = 0; i < r; ++i) eta[i] = detail::bounded_atanh(kp[i]);
      for (Index j = 0; j < s; ++j) eta[r + j] = detail::bounded_atanh(ks[j]);
      return eta;
    }
    case ModelKind::dar1: {
      Vector eta(3);
      eta << std::log(theta[0]), std::sqrt(std::max(theta[1], 0.0)),
          std::sqrt(std::max(theta[2], 0.0));
      return eta;
    }
    case ModelKind::var:
      return theta;
  }
  return theta;
}

inline Vector from_unconstrained(const ModelSpec& spec, const Vector& eta) {
  switch (spec.kind()) {
    case ModelKind::mar:
    case ModelKind::noncausal_ar1: {
      const Index r = spec.r(), s = spec.s();
      Vector kp(r), ks(s);
      for (Index i = 0; i < r; ++i) kp[i] = detail::bounded_tanh(eta[i]);
      for (Index j = 0; j < s; ++j) ks[j] = detail::bounded_tanh(eta[r + j]);
      Vector th(r + s);
      th.head(r) = detail::pacf_to_coeffs(kp);
      th.segment(r, s) = detail::pacf_to_coeffs(ks);
      return th;
    }
    case ModelKind::dar1: {
      Vector th(3);
      th << std::exp(std::clamp(eta[0], -50.0, 50.0)), eta[1] * eta[1], eta[2] * eta[2];
      return th;
    }
    case ModelKind::var:
      return eta;
  }
  return eta;
}

/**
 * Starting points for GCov: a grid with spacing `step` over the partial
 * autocorrelations in (-1,1) for MAR; a small fixed design for DAR1;
 * least squares and zero for VAR.
 */
inline std::vector<Vector> default_starts(const ModelSpec& spec, const Matrix& y, double step) {
  std::vector<Vector> out;
  switch (spec.kind()) {
    case ModelKind::mar:
    case ModelKind::noncausal_ar1: {
      const Index q = spec.r() + spec.s();
      std::vector<double> axis;
      for (double v = -1.0 + step; v < 1.0 - 1e-9; v += step)
        axis.push_back(std::round(v * 1e9) / 1e9);
      if (q == 0) {
        out.emplace_back(0);
        break;
      }
      std::vector<std::size_t> idx(static_cast<std::size_t>(q), 0);
      while (true) {
        Vector kappa(q);
        for (Index i = 0; i < q; ++i) kappa[i] = axis[idx[static_cast<std::size_t>(i)]];
        Vector eta(q);
        for (Index i = 0; i < q; ++i) eta[i] = detail::bounded_atanh(kappa[i]);
        out.push_back(from_unconstrained(spec, eta));
        Index d = q - 1;
        while (d >= 0 && ++idx[static_cast<std::size_t>(d)] == axis.size()) {
          idx[static_cast<std::size_t>(d)] = 0;
          --d;
        }
        if (d < 0) break;
      }
      break;
    }
    case ModelKind::dar1: {
      const Vector v = y.col(0);
      const double var = (v.array() - v.mean()).square().mean();
      for (double phi : {0.1, 0.5})
        for (double alpha : {0.1, 0.5}) {
          Vector th(3);
          th << std::max(var * (1.0 - alpha), 1e-6), phi, alpha;
          out.push_back(th);
        }
      break;
    }
    case ModelKind::var: {
      const Index p = spec.p(), m = spec.m(), T = y.rows();
      out.push_back(Vector::Zero(spec.dim_theta()));
      if (T > p * m + 2) {
        Matrix X(T - p, p * m);
        for (Index i = 1; i <= p; ++i) X.middleCols((i - 1) * m, m) = y.middleRows(p - i, T - p);
        const Matrix B = X.colPivHouseholderQr().solve(Matrix(y.bottomRows(T - p)));
        Vector th(spec.dim_theta());
        for (Index i = 1; i <= p; ++i)
          for (Index a = 0; a < m; ++a)
            for (Index b = 0; b < m; ++b) th[(i - 1) * m * m + a * m + b] = B((i - 1) * m + b, a);
        out.push_back(th);
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// simulation

/** Burn-in whose geometric tail weight rho^burn is below 1e-10. */
inline Index default_burn(const ModelSpec& spec) {
  double rho = 0.0;
  if (spec.is_mar()) {
    rho = std::max(max_reciprocal_modulus(spec.phi()), max_reciprocal_modulus(spec.psi()));
  } else if (spec.kind() == ModelKind::var) {
    const Index m = spec.m(), p = spec.p();
    Matrix comp = Matrix::Zero(m * p, m * p);
    for (int i = 1; i <= p; ++i) comp.block(0, (i - 1) * m, m, m) = spec.var_coefficient(i);
    if (p > 1) comp.block(m, 0, m * (p - 1), m * (p - 1)) = Matrix::Identity(m * (p - 1), m * (p - 1));
    Eigen::EigenSolver<Matrix> es(comp, false);
    for (Index i = 0; i < comp.rows(); ++i) rho = std::max(rho, std::abs(es.eigenvalues()[i]));
  } else {
    rho = std::min(spec.theta()[1] + std::sqrt(spec.theta()[2]), 0.99);
  }
  if (rho >= 1.0) throw InvalidTheta(spec.name() + ": explosive dynamics cannot be simulated");
  if (rho <= 0.0) return 10;
  return std::max<Index>(10, static_cast<Index>(std::ceil(std::log(1e-10) / std::log(rho))));
}

inline void check_burn(const ModelSpec& spec, Index burn) {
  const Index need = default_burn(spec);
  if (burn >= need) return;
  double rho = spec.is_mar()
                   ? std::max(max_reciprocal_modulus(spec.phi()), max_reciprocal_modulus(spec.psi()))
                   : 0.0;
  if (spec.is_mar() && std::pow(rho, static_cast<double>(burn)) > 1e-8)
    throw BurnTooSmall("burn " + std::to_string(burn) + " leaves truncation weight above 1e-8");
}

/**
 * Deterministic generator: maps an error path of length N (rows) to a
 * series of length N with zero boundary conditions.  MAR runs the
 * noncausal filter backward and the causal filter forward; DAR1 and VAR run
 * their causal recursions.
 */
inline Matrix filter_errors(const ModelSpec& spec, const Matrix& e) {
  const Index N = e.rows();
  switch (spec.kind()) {
    case ModelKind::mar:
    case ModelKind::noncausal_ar1: {
      const Index r = spec.r(), s = spec.s();
      const Vector& th = spec.theta();
      Vector z(N);
      for (Index t = N - 1; t >= 0; --t) {
        double v = e(t, 0);
        for (Index j = 1; j <= s && t + j < N; ++j) v += th[r + j - 1] * z[t + j];
        z[t] = v;
      }
      Matrix y(N, 1);
      for (Index t = 0; t < N; ++t) {
        double v = z[t];
        for (Index i = 1; i <= r && t - i >= 0; ++i) v += th[i - 1] * y(t - i, 0);
        y(t, 0) = v;
      }
      return y;
    }
    case ModelKind::dar1: {
      const double w = spec.theta()[0], phi = spec.theta()[1], alpha = spec.theta()[2];
      Matrix y(N, 1);
      double prev = 0.0;
      for (Index t = 0; t < N; ++t) {
        prev = phi * prev + e(t, 0) * std::sqrt(w + alpha * prev * prev);
        y(t, 0) = prev;
      }
      return y;
    }
    case ModelKind::var: {
      const Index m = spec.m(), p = spec.p();
      if (e.cols() != m) throw ShapeMismatch("VAR error path has the wrong dimension");
      std::vector<Matrix> P;
      for (int i = 1; i <= p; ++i) P.push_back(spec.var_coefficient(i));
      Matrix y = Matrix::Zero(N, m);
      for (Index t = 0; t < N; ++t) {
        Eigen::RowVectorXd v = e.row(t);
        for (Index i = 1; i <= p && t - i >= 0; ++i)
          v += y.row(t - i) * P[static_cast<std::size_t>(i - 1)].transpose();
        y.row(t) = v;
      }
      return y;
    }
  }
  return {};
}

struct Simulation {
  TimeSeries series;
  Matrix errors;  // errors aligned with series rows
  Index burn = 0;
};

/**
 * Draws T + 2 burn errors, filters them, and keeps the central T points.
 * burn < 0 selects default_burn(spec).
 */
inline Simulation simulate(const ModelSpec& spec, const ErrorDistribution& dist, Index T,
                           std::uint64_t seed, Index burn = -1) {
  if (T < 2) throw InsufficientSample("simulation length must be at least 2");
  if (spec.kind() == ModelKind::var) {
    const Index need = default_burn(spec);
    if (burn < 0) burn = need;
  } else if (burn < 0) {
    burn = default_burn(spec);
  } else {
    check_burn(spec, burn);
  }
  Rng rng(seed);
  const Index N = T + 2 * burn;
  Matrix e(N, spec.input_dim());
  for (Index t = 0; t < N; ++t)
    for (Index j = 0; j < e.cols(); ++j) e(t, j) = dist.draw(rng);
  const Matrix y = filter_errors(spec, e);
  return {TimeSeries(Matrix(y.middleRows(burn, T)), {}, spec.name() + " simulation"),
          Matrix(e.middleRows(burn, T)), burn};
}

inline Simulation simulate_mar(const ModelSpec& spec, const ErrorDistribution& dist, Index T,
                               Index burn, std::uint64_t seed) {
  if (!spec.is_mar()) throw UsageError("simulate_mar needs a MAR spec");
  return simulate(spec, dist, T, seed, burn);
}

/**
 * Rebuilds a MAR series from residuals u (t = r..T-s-1) and the boundary
 * values of y: the noncausal recursion runs backward from the last s
 * observations and the causal one forward from the first r.
 */
inline Matrix invert_residuals(const ModelSpec& spec, const Matrix& y_boundary, const Matrix& u) {
  if (!spec.is_mar()) throw UsageError("residual inversion is implemented for MAR specs");
  const Index T = y_boundary.rows();
  const Index r = spec.r(), s = spec.s();
  if (u.rows() != T - r - s) throw ShapeMismatch("residual length does not match T - r - s");
  const Vector& th = spec.theta();
  // w = Phi(L) y is known on the last s points from the boundary values
  Vector w(T);
  for (Index t = T - s; t < T; ++t) {
    double v = y_boundary(t, 0);
    for (Index i = 1; i <= r; ++i) v -= th[i - 1] * y_boundary(t - i, 0);
    w[t] = v;
  }
  for (Index t = T - s - 1; t >= r; --t) {
    double v = u(t - r, 0);
    for (Index j = 1; j <= s; ++j) v += th[r + j - 1] * w[t + j];
    w[t] = v;
  }
  Matrix y = y_boundary;
  for (Index t = r; t < T - s; ++t) {
    double v = w[t];
    for (Index i = 1; i <= r; ++i) v += th[i - 1] * y(t - i, 0);
    y(t, 0) = v;
  }
  return y;
}

// ---------------------------------------------------------------------------
// MAR(1,1) components

/**
 * v1 = (1 - phi L) y on t = 1..T-1 (noncausal component) and
 * v2 = (1 - psi L^{-1}) y on t = 0..T-2 (causal component).
 */
struct MarComponents {
  Vector v1;  // v1[i] is time i + 1
  Vector v2;  // v2[i] is time i
  double phi = 0.0;
  double psi = 0.0;

  /** y_t = (phi v2_{t-1} + v1_t) / (1 - phi psi) on t = 1..T-2. */
  Vector reconstruct_causal() const {
    const Index n = v2.size() - 1;
    return (phi * v2.head(n) + v1.head(n)) / (1.0 - phi * psi);
  }
  /** y_t = (v2_t + psi v1_{t+1}) / (1 - phi psi) on t = 1..T-2. */
  Vector reconstruct_noncausal() const {
    const Index n = v2.size() - 1;
    return (v2.segment(1, n) + psi * v1.segment(1, n)) / (1.0 - phi * psi);
  }
};

inline MarComponents mar_components(const TimeSeries& y, double phi, double psi) {
  if (y.dim() != 1) throw ShapeMismatch("MAR components need one column");
  if (!(std::abs(phi) < 1.0 && std::abs(psi) < 1.0))
    throw InvalidTheta("MAR components need |phi| < 1 and |psi| < 1");
  const Index T = y.length();
  if (T < 3) throw InsufficientSample("MAR components need T >= 3");
  const Vector x = y.values().col(0);
  MarComponents c;
  c.phi = phi;
  c.psi = psi;
  c.v1 = x.tail(T - 1) - phi * x.head(T - 1);
  c.v2 = x.head(T - 1) - psi * x.tail(T - 1);
  return c;
}

/**
 * Model template from text: "MAR(r,s)", "noncausalAR1", "DAR1" or
 * "VAR(p,m)" (also "VAR(p)" with m = `dim`).  Case-insensitive.
 */
inline ModelSpec parse_model(const std::string& text, int dim = 1) {
  std::string t;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch)))
      t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  auto args = [&](const std::string& prefix) {
    std::vector<int> out;
    if (t.rfind(prefix + "(", 0) != 0 || t.back() != ')') return out;
    const std::string inner = t.substr(prefix.size() + 1, t.size() - prefix.size() - 2);
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
        throw UsageError("bad model order in '" + text + "'");
      out.push_back(std::stoi(item));
    }
    return out;
  };
  if (auto a = args("MAR"); a.size() == 2) return ModelSpec::mar_template(a[0], a[1]);
  if (t == "NONCAUSALAR1") return ModelSpec::noncausal_ar1_template();
  if (t == "DAR1" || t == "DAR(1)") return ModelSpec::dar1_template();
  if (auto a = args("VAR"); a.size() == 2) return ModelSpec::var_template(a[0], a[1]);
  else if (a.size() == 1) return ModelSpec::var_template(a[0], dim);
  throw UsageError("unknown model '" + text + "'");
}

// ---------------------------------------------------------------------------
// parametric estimators

struct FitResult {
  std::string estimator;
  ModelSpec spec = ModelSpec::mar_template(0, 1);
  Vector theta;
  double nu = 0.0;     // AML only
  double scale = 0.0;  // AML only
  double loglik = 0.0; // AML only
  double objective = 0.0;
  Index n = 0;  // residual count
  bool converged = false;
  std::vector<LocalResult> trace;
};

struct AmlOptions {
  double grid_step = 0.01;
  std::size_t n_starts = 3;
  double nu_start = 5.0;
  SimplexOptions simplex{};
};

namespace detail {

inline double student_t_loglik(const Vector& u, double nu, double sigma) {
  const double n = static_cast<double>(u.size());
  const double c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                   0.5 * std::log(nu * std::numbers::pi) - std::log(sigma);
  const double k = 1.0 / (nu * sigma * sigma);
  double s = 0.0;
  for (Index i = 0; i < u.size(); ++i) s += std::log1p(k * u[i] * u[i]);
  return n * c - 0.5 * (nu + 1.0) * s;
}

}  // namespace detail

/**
 * Approximate ML for MAR(r,s) under a t(nu) density with free nu > 2 and
 * scale.  Grid over (phi_1, psi_1) in (0,1), then Nelder-Mead from the best
 * grid points; ties between grid points go to the lower grid index.
 */
inline FitResult aml_fit(const ModelSpec& tmpl, const TimeSeries& y, const AmlOptions& opt = {}) {
  if (!tmpl.is_mar()) throw UsageError("AML is implemented for MAR specs");
  if (y.dim() != 1) throw ShapeMismatch("AML expects one column");
  const Index r = tmpl.r(), s = tmpl.s();
  if (y.length() <= r + s + 10) throw InsufficientSample("AML needs T > r + s + 10");
  const Matrix& Y = y.values();
  {
    const Vector v = Y.col(0);
    if ((v.array() - v.mean()).abs().maxCoeff() == 0.0)
      throw DegenerateSeries("AML on a constant series");
  }
  const Index q = r + s;
  // grid over the leading causal and noncausal coefficients
  std::vector<Vector> grid;
  std::vector<double> axis;
  for (int i = 1;; ++i) {
    const double v = i * opt.grid_step;
    if (v >= 1.0 - 1e-12) break;
    axis.push_back(v);
  }
  if (axis.empty()) throw UsageError("AML grid step too large");
  const bool gp = r > 0, gs = s > 0;
  for (double a : gp ? axis : std::vector<double>{0.0})
    for (double b : gs ? axis : std::vector<double>{0.0}) {
      Vector th = Vector::Zero(q);
      if (gp) th[0] = a;
      if (gs) th[r] = b;
      grid.push_back(th);
    }
  auto grid_value = [&](const Vector& th) {
    const Matrix u = residuals_raw(tmpl, th, Y);
    const double sd = std::sqrt(u.col(0).squaredNorm() / static_cast<double>(u.rows()));
    if (!(sd > 0.0)) throw DegenerateSeries("zero residual scale");
    const double nu = opt.nu_start;
    return -detail::student_t_loglik(u.col(0), nu, sd * std::sqrt((nu - 2.0) / nu));
  };
  const auto best = best_candidates(grid_value, grid, std::max<std::size_t>(1, opt.n_starts));
  if (best.empty()) throw AllStartsFailed("AML criterion undefined on the whole grid");

  // eta = (dynamic params, log(nu - 2), log sigma)
  auto unpack = [&](const Vector& eta, Vector& th, double& nu, double& sigma) {
    th = from_unconstrained(tmpl, eta.head(q));
    nu = 2.0 + std::exp(std::clamp(eta[q], -10.0, 12.0));
    sigma = std::exp(std::clamp(eta[q + 1], -50.0, 50.0));
  };
  Objective negll = [&](const Vector& eta) {
    Vector th;
    double nu, sigma;
    unpack(eta, th, nu, sigma);
    const Matrix u = residuals_raw(tmpl, th, Y);
    return -detail::student_t_loglik(u.col(0), nu, sigma);
  };
  std::vector<Vector> starts;
  for (std::size_t i : best) {
    const Vector& th = grid[i];
    const Matrix u = residuals_raw(tmpl, th, Y);
    const double sd = std::sqrt(u.col(0).squaredNorm() / static_cast<double>(u.rows()));
    Vector eta(q + 2);
    eta.head(q) = to_unconstrained(tmpl, th);
    eta[q] = std::log(opt.nu_start - 2.0);
    eta[q + 1] = std::log(sd * std::sqrt((opt.nu_start - 2.0) / opt.nu_start));
    starts.push_back(eta);
  }
  const MultiStartResult ms = multistart(negll, starts, opt.simplex);
  FitResult fr;
  fr.estimator = "aml";
  double nu, sigma;
  Vector th;
  unpack(ms.x, th, nu, sigma);
  fr.spec = tmpl.with_theta(th);
  fr.theta = th;
  fr.nu = nu;
  fr.scale = sigma;
  fr.loglik = -ms.f;
  fr.objective = ms.f;
  fr.n = y.length() - r - s;
  fr.converged = ms.runs[ms.best_start].converged;
  fr.trace = ms.runs;
  return fr;
}

/** Least-squares coefficient of y_t on y_{t+1}, no intercept. */
inline double ols_noncausal_ar1(const TimeSeries& y) {
  if (y.dim() != 1) throw ShapeMismatch("OLS noncausal AR(1) expects one column");
  const Index T = y.length();
  if (T < 3) throw InsufficientSample("OLS noncausal AR(1) needs T >= 3");
  const Vector x = y.values().col(0);
  const double den = x.tail(T - 1).squaredNorm();
  if (!(den > 0.0)) throw DegenerateSeries("zero lead variation");
  return x.head(T - 1).dot(x.tail(T - 1)) / den;
}

}  // namespace gcovtest

#endif  // GCOVTEST_MODELS_HPP
