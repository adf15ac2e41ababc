#include <gtest/gtest.h>

#include "gcovtest/models.hpp"
#include "gcovtest/montecarlo.hpp"
#include "gcovtest/nlsd.hpp"

using namespace gcovtest;

TEST(Nlsd, ReportFields) {
  const auto x = sample(ErrorDistribution::laplace(), 300, 1);
  const TimeSeries y = TimeSeries::univariate(x);
  const TestReport r = nlsd_test(y, TransformSet::linear_quadratic(), 3, 0.05);
  ASSERT_TRUE(r.df.has_value());
  EXPECT_DOUBLE_EQ(*r.df, 12.0);
  EXPECT_NEAR(r.critical_value, chi2_quantile(12.0, 0.95), 1e-12);
  EXPECT_EQ(r.reject, r.statistic > r.critical_value);
  EXPECT_NEAR(r.p_value, chi2_sf(r.statistic, 12.0), 1e-14);
  EXPECT_EQ(r.config.K, 2);
  EXPECT_EQ(r.config.T, 300);
  EXPECT_NEAR(r.statistic, nlsd_statistic(y.values(), TransformSet::linear_quadratic(), 3), 1e-12);
  EXPECT_THROW(nlsd_test(y, TransformSet::linear_quadratic(), 3, 1.0), UsageError);
  EXPECT_THROW(nlsd_test(y, TransformSet::linear_quadratic(), 3, 0.0), UsageError);
}

TEST(Nlsd, SizeNearNominalUnderIid) {
  const auto stats = nlsd_statistics(ErrorDistribution::uniform(), 300, 0.0,
                                     TransformSet::linear_quadratic(), 1, 800, 123, 1);
  const RejectionRate r = rate_above(stats, chi2_quantile(4.0, 0.95));
  EXPECT_NEAR(r.rate, 0.05, 0.025);
}

TEST(Nlsd, DetectsNoncausalDependence) {
  const auto stats = nlsd_statistics(ErrorDistribution::laplace(), 200, 0.7,
                                     TransformSet::linear_quadratic(), 1, 100, 7, 1);
  EXPECT_GE(rate_above(stats, chi2_quantile(4.0, 0.95)).rate, 0.99);
}
