#include <gtest/gtest.h>

#include <algorithm>

#include "gcovtest/bootstrap.hpp"

using namespace gcovtest;

TEST(Rebuild, InversionIdentity) {
  const ModelSpec spec = ModelSpec::mar({0.8}, {0.7});
  const Index T = 200, burn = default_burn(spec);
  const auto draws = sample(ErrorDistribution::student_t(5.0), static_cast<std::size_t>(T + 2 * burn), 3);
  const Matrix e = Eigen::Map<const Vector>(draws.data(), T + 2 * burn);
  const Matrix y = rebuild_series(spec, e, T, burn);
  const Matrix u = residuals_raw(spec, spec.theta(), y);
  EXPECT_LT((u - e.middleRows(burn + 1, T - 2)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_THROW(rebuild_series(spec, e, T + 1, burn), ShapeMismatch);
}

TEST(Resample, PermutationKeepsThePool) {
  Matrix pool(50, 1);
  for (Index i = 0; i < 50; ++i) pool(i, 0) = static_cast<double>(i);
  Rng rng(4);
  const Matrix e = detail::resample_errors(pool, 52, 20, 1, false, rng);
  ASSERT_EQ(e.rows(), 92);
  std::vector<double> mid(e.data() + 21, e.data() + 71);
  std::sort(mid.begin(), mid.end());
  for (Index i = 0; i < 50; ++i) EXPECT_DOUBLE_EQ(mid[static_cast<std::size_t>(i)], static_cast<double>(i));
}

TEST(Quantile, NearestRank) {
  BootstrapResult r;
  for (int i = 1; i <= 100; ++i) r.statistics.push_back(101.0 - i);
  EXPECT_DOUBLE_EQ(r.q95(), 95.0);
  EXPECT_DOUBLE_EQ(r.quantile(0.5), 50.0);
  EXPECT_DOUBLE_EQ(r.quantile(1.0), 100.0);
  r.statistics = {3.0, 1.0, 2.0};
  EXPECT_DOUBLE_EQ(r.quantile(0.95), 3.0);
  EXPECT_DOUBLE_EQ(r.quantile(0.3), 1.0);
}

TEST(BootstrapTest, DeterministicAndConsistent) {
  const Simulation sim = simulate(ModelSpec::mar({}, {0.5}), ErrorDistribution::laplace(), 200, 8);
  BootstrapConfig cfg;
  cfg.S = 40;
  cfg.seed = 99;
  const ModelSpec tmpl = ModelSpec::mar_template(0, 1);
  const TransformSet ts = TransformSet::linear_quadratic();
  const BootstrapTest a = bootstrap_test(tmpl, sim.series, ts, 2, 0.05, cfg);
  cfg.workers = 3;
  const BootstrapTest b = bootstrap_test(tmpl, sim.series, ts, 2, 0.05, cfg);
  EXPECT_EQ(a.bootstrap.statistics, b.bootstrap.statistics);
  EXPECT_EQ(a.report.reject, a.report.statistic > a.report.critical_value);
  EXPECT_DOUBLE_EQ(a.report.critical_value, a.bootstrap.q95());
  EXPECT_EQ(a.bootstrap.refit_estimates.rows(), static_cast<Index>(a.bootstrap.statistics.size()));
  EXPECT_NEAR(a.report.statistic, spec_statistic(tmpl, a.theta_hat, sim.series.values(), ts, 2), 1e-12);
  EXPECT_THROW(bootstrap_test(tmpl, sim.series, ts, 2, 0.0, cfg), UsageError);
  // alpha = 1 is degenerate and always rejects
  EXPECT_TRUE(bootstrap_test(tmpl, sim.series, ts, 2, 1.0, cfg).report.reject);
}

TEST(BootstrapTest, AmlPermutationScheme) {
  const Simulation sim = simulate(ModelSpec::mar({}, {0.6}), ErrorDistribution::student_t(5.0), 150, 10);
  BootstrapConfig cfg;
  cfg.S = 10;
  cfg.with_replacement = false;
  cfg.estimator.kind = EstimatorKind::aml;
  const BootstrapTest t = bootstrap_test(ModelSpec::mar_template(0, 1), sim.series,
                                         TransformSet::linear_quadratic(), 1, 0.05, cfg);
  EXPECT_EQ(t.bootstrap.statistics.size() + static_cast<std::size_t>(t.bootstrap.dropped), 10u);
  EXPECT_EQ(t.report.method, "gcov-bootstrap-aml");
}

TEST(Rates, StandardError) {
  const RejectionRate r = make_rate(50, 1000, 2);
  EXPECT_DOUBLE_EQ(r.rate, 0.05);
  EXPECT_NEAR(r.se, std::sqrt(0.05 * 0.95 / 1000.0), 1e-15);
  EXPECT_EQ(r.failures, 2);
}
