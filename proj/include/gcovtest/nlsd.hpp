#ifndef GCOVTEST_NLSD_HPP
#define GCOVTEST_NLSD_HPP

#include "gcovtest/autocov.hpp"
#include "gcovtest/distributions.hpp"
#include "gcovtest/report.hpp"
#include "gcovtest/series.hpp"

namespace gcovtest {

/**
 * Test of no (non)linear serial dependence: T sum_h Tr[R^2(h)] of the
 * transformed series against chi2(K^2 H).
 */
inline TestReport nlsd_test(const TimeSeries& series, const TransformSet& ts,
                            Index H, double alpha = 0.05,
                            const AutocovOptions& opt = {}) {
  check_alpha(alpha);
  const Matrix x = transform_matrix(series.values(), ts);
  const PortmanteauValue pv = portmanteau_matrix(x, H, opt);
  const double K = static_cast<double>(ts.size());
  ConfigEcho echo{ts.labels(), H, series.length(), ts.size(), Json::object()};
  echo.extra["per_lag"] = pv.per_lag;
  return chi2_report(pv.statistic, K * K * static_cast<double>(H), alpha, "nlsd",
                     std::move(echo));
}

/** Statistic only, for Monte Carlo loops. */
inline double nlsd_statistic(const Matrix& y, const TransformSet& ts, Index H) {
  return portmanteau_matrix(transform_matrix(y, ts), H).statistic;
}

}  // namespace gcovtest

#endif  // GCOVTEST_NLSD_HPP
