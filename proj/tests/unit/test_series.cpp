#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gcovtest/series.hpp"

using namespace gcovtest;

TEST(TimeSeries, RejectsNonFiniteAndEmpty) {
  Matrix m(3, 1);
  m << 1.0, std::nan(""), 2.0;
  EXPECT_THROW(TimeSeries{m}, DomainViolation);
  EXPECT_THROW(TimeSeries{Matrix(0, 1)}, ShapeMismatch);
  EXPECT_THROW(TimeSeries(Matrix::Ones(3, 2), {"a"}), ShapeMismatch);
}

TEST(Transform, Values) {
  EXPECT_DOUBLE_EQ(Transform::identity()(-1.5), -1.5);
  EXPECT_DOUBLE_EQ(Transform::power(2)(-3.0), 9.0);
  EXPECT_DOUBLE_EQ(Transform::power(3)(-2.0), -8.0);
  EXPECT_DOUBLE_EQ(Transform::signed_power(0.5)(-4.0), -2.0);
  EXPECT_DOUBLE_EQ(Transform::abs_power(0.5)(-4.0), 2.0);
  EXPECT_DOUBLE_EQ(Transform::log_abs()(-std::exp(2.0)), 2.0);
  EXPECT_NEAR(Transform::log_square()(3.0), std::log(9.0), 1e-15);
  EXPECT_NEAR(Transform::exp_weighted_power(2, 0.5)(-2.0), 4.0 * std::exp(1.0), 1e-14);
  EXPECT_NEAR(Transform::exp_weighted_power(1, 0.5)(1.0), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(Transform::exp_weighted_power(1, 0.5)(2.0), 2.0 * std::exp(-1.0), 1e-15);
}

TEST(Transform, DomainViolationReportsRow) {
  Matrix x(4, 1);
  x << 1.0, -2.0, 0.0, 3.0;
  const TransformSet ts({Transform::identity(), Transform::log_abs()});
  try {
    transform_matrix(x, ts);
    FAIL() << "expected DomainViolation";
  } catch (const DomainViolation& e) {
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(TransformSet, UniqueLabelsAndColumns) {
  EXPECT_THROW(TransformSet({Transform::identity(), Transform::identity()}), UsageError);
  const TransformSet ts = parse_transform_set("identity,identity@1,power:2@1");
  EXPECT_EQ(ts.size(), 3);
  EXPECT_EQ(ts.max_column(), 1);
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  const Matrix a = transform_matrix(x, ts);
  EXPECT_DOUBLE_EQ(a(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(a(1, 1), 4.0);
  EXPECT_DOUBLE_EQ(a(1, 2), 16.0);
  EXPECT_THROW(transform_matrix(Matrix::Ones(2, 1), ts), ShapeMismatch);
}

TEST(TransformParse, RoundTripAndErrors) {
  const TransformSet ts = parse_transform_set("identity, power:2, abs-power:0.5, log-abs");
  EXPECT_EQ(ts.size(), 4);
  EXPECT_THROW(parse_transform("power"), UsageError);
  EXPECT_THROW(parse_transform("power:2:3"), UsageError);
  EXPECT_THROW(parse_transform("cube"), UsageError);
  EXPECT_THROW(parse_transform("identity@x"), UsageError);
  EXPECT_THROW(parse_transform("exp-weighted-power:1.5:0.1"), UsageError);
}

TEST(Csv, RoundTripWithHeader) {
  std::istringstream in("a,b\n1,2\n3.5,-4e-3\n");
  const TimeSeries y = read_csv(in);
  ASSERT_EQ(y.length(), 2);
  ASSERT_EQ(y.dim(), 2);
  EXPECT_EQ(y.labels()[1], "b");
  std::ostringstream out;
  write_csv(out, y);
  std::istringstream back(out.str());
  const TimeSeries z = read_csv(back);
  EXPECT_TRUE(z.values().isApprox(y.values(), 1e-15));
}

TEST(Csv, HeaderlessAndMalformed) {
  std::istringstream in("1\n2\n3\n");
  EXPECT_EQ(read_csv(in).length(), 3);
  std::istringstream bad("1,2\n3\n");
  EXPECT_THROW(read_csv(bad), Error);
  std::istringstream nan("1\nabc\n");
  EXPECT_THROW(read_csv(nan), Error);
}

TEST(Detrend, RemovesExactPolynomialAndLeavesOrthogonalResidual) {
  const Index T = 200;
  Vector x(T), noise(T);
  for (Index t = 0; t < T; ++t) {
    noise[t] = std::sin(0.37 * static_cast<double>(t * t));
    x[t] = 5.0 + 0.25 * static_cast<double>(t) + noise[t];
  }
  const Vector r = detrend_polynomial(TimeSeries::univariate(x), 1).values().col(0);
  // residual is orthogonal to 1 and t
  double s0 = 0.0, s1 = 0.0;
  for (Index t = 0; t < T; ++t) {
    s0 += r[t];
    s1 += r[t] * static_cast<double>(t);
  }
  EXPECT_NEAR(s0, 0.0, 1e-9);
  EXPECT_NEAR(s1, 0.0, 1e-6);
  // normal-equations oracle for the OLS fit on (1, t)
  double st = 0, stt = 0, sy = 0, sty = 0;
  for (Index t = 0; t < T; ++t) {
    const double tt = static_cast<double>(t);
    st += tt;
    stt += tt * tt;
    sy += x[t];
    sty += tt * x[t];
  }
  const double n = static_cast<double>(T);
  const double b = (n * sty - st * sy) / (n * stt - st * st);
  const double a = (sy - b * st) / n;
  for (Index t = 0; t < T; ++t) EXPECT_NEAR(r[t], x[t] - a - b * static_cast<double>(t), 1e-9);
  EXPECT_THROW(detrend_polynomial(TimeSeries::univariate(x.head(2)), 2), Error);
}
