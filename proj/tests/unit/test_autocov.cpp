#include <gtest/gtest.h>

#include <Eigen/LU>
#include <cmath>

#include "gcovtest/autocov.hpp"
#include "gcovtest/distributions.hpp"
#include "gcovtest/models.hpp"

using namespace gcovtest;

namespace {

Matrix random_matrix(Index T, Index K, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(T, K);
  for (Index t = 0; t < T; ++t)
    for (Index k = 0; k < K; ++k) x(t, k) = ErrorDistribution::laplace().draw(rng);
  // mild cross-sectional and serial dependence
  for (Index t = 1; t < T; ++t) x.row(t) += 0.4 * x.row(t - 1);
  if (K > 1) x.col(1) += 0.5 * x.col(0);
  return x;
}

// Tr[Gamma(h) Gamma(0)^{-1} Gamma(h)' Gamma(0)^{-1}] through explicit inverses.
double trace_oracle(const Matrix& g0, const Matrix& gh) {
  const Matrix inv = g0.fullPivLu().inverse();
  return (gh * inv * gh.transpose() * inv).trace();
}

}  // namespace

TEST(Autocov, DefinitionAndShapes) {
  const Matrix x = random_matrix(50, 2, 1);
  const AutocovStack st = sample_autocov_matrix(x, 3);
  ASSERT_EQ(st.gamma.size(), 4u);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Matrix xc = x.rowwise() - mean;
  for (Index h = 0; h <= 3; ++h) {
    Matrix g = Matrix::Zero(2, 2);
    for (Index t = h; t < 50; ++t) g += xc.row(t).transpose() * xc.row(t - h);
    g /= 50.0;
    EXPECT_TRUE(st.gamma[static_cast<std::size_t>(h)].isApprox(g, 1e-12));
  }
  EXPECT_THROW(sample_autocov_matrix(x, 50), Error);
  EXPECT_THROW(sample_autocov_matrix(x, -1), Error);
}

TEST(Autocov, BlockToeplitzIsPositiveSemidefinite) {
  const Index K = 3, H = 6;
  const Matrix x = random_matrix(40, K, 2);
  const AutocovStack st = sample_autocov_matrix(x, H);
  Matrix big((H + 1) * K, (H + 1) * K);
  for (Index i = 0; i <= H; ++i)
    for (Index j = 0; j <= H; ++j) {
      const Matrix& g = st.gamma[static_cast<std::size_t>(std::abs(i - j))];
      big.block(i * K, j * K, K, K) = i >= j ? g : Matrix(g.transpose());
    }
  Eigen::SelfAdjointEigenSolver<Matrix> es(big);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
}

TEST(Autocov, TraceMatchesInverseRouteAndUnivariateAcf) {
  const Matrix x = random_matrix(300, 3, 3);
  const AutocovStack st = sample_autocov_matrix(x, 4);
  for (Index h = 1; h <= 4; ++h)
    EXPECT_NEAR(r_squared_trace(st, h), trace_oracle(st.gamma[0], st.gamma[static_cast<std::size_t>(h)]),
                1e-10);
  const Matrix u = x.col(0);
  const AutocovStack s1 = sample_autocov_matrix(u, 2);
  const double rho = s1.gamma[2](0, 0) / s1.gamma[0](0, 0);
  EXPECT_NEAR(r_squared_trace(s1, 2), rho * rho, 1e-14);
}

TEST(Autocov, CanonicalCorrelationInvariance) {
  const Matrix x = random_matrix(200, 3, 4);
  Matrix A(3, 3);
  A << 2.0, 0.3, -1.0, 0.0, 1.5, 0.2, 0.7, -0.4, 0.9;
  const Matrix y = (x * A.transpose()).rowwise() + Eigen::RowVectorXd::Constant(3, 5.0);
  const auto rx = r_squared_traces(sample_autocov_matrix(x, 3));
  const auto ry = r_squared_traces(sample_autocov_matrix(y, 3));
  for (std::size_t h = 0; h < rx.size(); ++h) EXPECT_NEAR(rx[h], ry[h], 1e-8);
}

TEST(Autocov, PortmanteauIsTTimesSum) {
  const Matrix x = random_matrix(120, 2, 5);
  const PortmanteauValue pv = portmanteau_matrix(x, 3);
  double s = 0.0;
  for (double v : pv.per_lag) s += v;
  EXPECT_NEAR(pv.statistic, 120.0 * s, 1e-10);
}

TEST(Autocov, DegenerateInputs) {
  Matrix x = random_matrix(60, 2, 6);
  Matrix c = x;
  c.col(1).setConstant(3.0);
  EXPECT_THROW(sample_autocov_matrix(c, 1), DegenerateColumn);
  Matrix dup(60, 2);
  dup << x.col(0), x.col(0) * 2.0;
  const AutocovStack st = sample_autocov_matrix(dup, 1);
  EXPECT_THROW(r_squared_trace(st, 1), SingularGamma0);
  AutocovOptions ridge;
  ridge.ridge = true;
  EXPECT_TRUE(std::isfinite(r_squared_trace(st, 1, ridge)));
}

TEST(Autocov, DiagonalModeEqualsFullForOrthogonalColumns) {
  const Matrix x = random_matrix(100, 1, 7);
  AutocovOptions diag;
  diag.gamma0 = Gamma0Mode::diagonal;
  const AutocovStack st = sample_autocov_matrix(x, 2);
  EXPECT_NEAR(r_squared_trace(st, 1), r_squared_trace(st, 1, diag), 1e-14);
}
