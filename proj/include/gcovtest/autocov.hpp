#ifndef GCOVTEST_AUTOCOV_HPP
#define GCOVTEST_AUTOCOV_HPP

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

#include "gcovtest/errors.hpp"
#include "gcovtest/series.hpp"

namespace gcovtest {

/**
 * Sample autocovariances Gamma(0..H) of a K-variate series, centered by the
 * full-sample mean and divided by T.
 */
struct AutocovStack {
  std::vector<Matrix> gamma;
  Index T = 0;
  Index K = 0;
  Index H = 0;
};

enum class Gamma0Mode { full, diagonal };

struct AutocovOptions {
  bool ridge = false;
  Gamma0Mode gamma0 = Gamma0Mode::full;
};

inline AutocovStack sample_autocov_matrix(const Matrix& x, Index H,
                                          bool center = true) {
  const Index T = x.rows();
  const Index K = x.cols();
  if (H < 1) throw UsageError("maximum lag H must be at least 1");
  if (T <= H + 1)
    throw InsufficientSample("need T > H + 1 for sample autocovariances");
  Matrix xc = x;
  if (center) xc.rowwise() -= x.colwise().mean();
  AutocovStack s;
  s.T = T;
  s.K = K;
  s.H = H;
  s.gamma.reserve(static_cast<std::size_t>(H + 1));
  const double inv = 1.0 / static_cast<double>(T);
  for (Index h = 0; h <= H; ++h) {
    // rows h..T-1 are x_t, rows 0..T-h-1 are x_{t-h}
    Matrix g = inv * xc.bottomRows(T - h).transpose() * xc.topRows(T - h);
    if (h == 0) g = 0.5 * (g + g.transpose()).eval();
    s.gamma.push_back(std::move(g));
  }
  for (Index k = 0; k < K; ++k)
    if (!(s.gamma[0](k, k) > 0.0)) throw DegenerateColumn(static_cast<std::size_t>(k));
  return s;
}

inline AutocovStack sample_autocov(const TimeSeries& x, Index H) {
  return sample_autocov_matrix(x.values(), H);
}

/**
 * Gamma(0)^{-1/2}, computed once per stack, so that
 * Tr[G(h) G0^{-1} G(h)' G0^{-1}] = || W G(h) W ||_F^2.
 */
class Whitener {
 public:
  Whitener(const Matrix& gamma0, const AutocovOptions& opt = {}) {
    const Index K = gamma0.rows();
    if (opt.gamma0 == Gamma0Mode::diagonal) {
      w_ = Matrix::Zero(K, K);
      for (Index k = 0; k < K; ++k) {
        const double d = gamma0(k, k);
        if (!(d > 0.0)) throw SingularGamma0("nonpositive diagonal of Gamma(0)");
        w_(k, k) = 1.0 / std::sqrt(d);
      }
      return;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(gamma0);
    if (es.info() != Eigen::Success) throw SingularGamma0("eigendecomposition failed");
    Vector ev = es.eigenvalues();
    const double floor = 1e-10 * gamma0.trace() / static_cast<double>(K);
    if (opt.ridge) {
      ev = ev.array().max(0.0) + floor;
    } else if (!(ev.minCoeff() > floor)) {
      throw SingularGamma0("smallest eigenvalue of Gamma(0) below floor");
    }
    w_ = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
  }

  const Matrix& matrix() const noexcept { return w_; }

  double trace_r2(const Matrix& gamma_h) const {
    return (w_ * gamma_h * w_).squaredNorm();
  }

 private:
  Matrix w_;
};

/** Tr[R^2(h)] = sum of squared canonical correlations at lag h. */
inline double r_squared_trace(const AutocovStack& stack, Index h,
                              const AutocovOptions& opt = {}) {
  if (h < 1 || h > stack.H) throw UsageError("lag outside 1..H");
  return Whitener(stack.gamma[0], opt).trace_r2(stack.gamma[static_cast<std::size_t>(h)]);
}

inline std::vector<double> r_squared_traces(const AutocovStack& stack,
                                            const AutocovOptions& opt = {}) {
  const Whitener w(stack.gamma[0], opt);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(stack.H));
  for (Index h = 1; h <= stack.H; ++h)
    out.push_back(w.trace_r2(stack.gamma[static_cast<std::size_t>(h)]));
  return out;
}

struct PortmanteauValue {
  double statistic = 0.0;
  std::vector<double> per_lag;
  Index H = 0;
  Index K = 0;
  Index T = 0;
};

/** T * sum_{h=1..H} Tr[R^2(h)]. */
inline PortmanteauValue portmanteau_matrix(const Matrix& x, Index H,
                                           const AutocovOptions& opt = {}) {
  const AutocovStack s = sample_autocov_matrix(x, H);
  PortmanteauValue p;
  p.per_lag = r_squared_traces(s, opt);
  p.H = H;
  p.K = s.K;
  p.T = s.T;
  double sum = 0.0;
  for (double v : p.per_lag) sum += v;
  p.statistic = static_cast<double>(s.T) * sum;
  return p;
}

inline PortmanteauValue portmanteau(const TimeSeries& x, Index H,
                                    const AutocovOptions& opt = {}) {
  return portmanteau_matrix(x.values(), H, opt);
}

}  // namespace gcovtest

#endif  // GCOVTEST_AUTOCOV_HPP
