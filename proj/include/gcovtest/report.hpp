#ifndef GCOVTEST_REPORT_HPP
#define GCOVTEST_REPORT_HPP

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "gcovtest/distributions.hpp"
#include "gcovtest/series.hpp"

namespace gcovtest {

using Json = nlohmann::ordered_json;

/** Normal reference law N(mean, sd^2) of a standardized statistic. */
struct NormalStandardization {
  double mean;
  double sd;
};

struct ConfigEcho {
  std::vector<std::string> transforms;
  Index H = 0;
  Index T = 0;
  Index K = 0;
  Json extra = Json::object();
};

/**
 * Outcome of one test.  Exactly one of `df` and `normal` is set.
 * reject holds iff statistic > critical_value.
 */
struct TestReport {
  double statistic = 0.0;
  std::optional<double> df;
  std::optional<NormalStandardization> normal;
  double critical_value = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;
  std::string method;
  ConfigEcho config;
};

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0,1)");
}

inline TestReport chi2_report(double statistic, double df, double alpha,
                              std::string method, ConfigEcho config) {
  check_alpha(alpha);
  TestReport r;
  r.statistic = statistic;
  r.df = df;
  r.critical_value = chi2_quantile(df, 1.0 - alpha);
  r.p_value = chi2_sf(statistic, df);
  r.alpha = alpha;
  r.reject = statistic > r.critical_value;
  r.method = std::move(method);
  r.config = std::move(config);
  return r;
}

inline TestReport normal_report(double statistic, NormalStandardization ns,
                                double alpha, std::string method,
                                ConfigEcho config) {
  check_alpha(alpha);
  TestReport r;
  r.statistic = statistic;
  r.normal = ns;
  r.critical_value = ns.mean + ns.sd * normal_quantile(1.0 - alpha);
  r.p_value = 1.0 - normal_cdf((statistic - ns.mean) / ns.sd);
  r.alpha = alpha;
  r.reject = statistic > r.critical_value;
  r.method = std::move(method);
  r.config = std::move(config);
  return r;
}

inline Json to_json(const ConfigEcho& c) {
  Json j;
  j["transforms"] = c.transforms;
  j["H"] = c.H;
  j["T"] = c.T;
  j["K"] = c.K;
  if (!c.extra.empty()) j["extra"] = c.extra;
  return j;
}

inline Json to_json(const TestReport& r) {
  Json j;
  j["method"] = r.method;
  j["statistic"] = r.statistic;
  if (r.df) j["df"] = *r.df;
  if (r.normal) j["normal"] = {{"mean", r.normal->mean}, {"sd", r.normal->sd}};
  j["critical_value"] = r.critical_value;
  j["p_value"] = r.p_value;
  j["alpha"] = r.alpha;
  j["reject"] = r.reject;
  j["config"] = to_json(r.config);
  return j;
}

inline Json to_json(const Vector& v) {
  Json j = Json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

}  // namespace gcovtest

#endif  // GCOVTEST_REPORT_HPP
