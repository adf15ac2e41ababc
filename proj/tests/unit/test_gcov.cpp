#include <gtest/gtest.h>

#include <unsupported/Eigen/KroneckerProduct>
#include <cmath>

#include "gcovtest/gcov.hpp"
#include "gcovtest/montecarlo.hpp"

using namespace gcovtest;

namespace {

TimeSeries mar_series(double phi, double psi, Index T, std::uint64_t seed,
                      const ErrorDistribution& d = ErrorDistribution::laplace()) {
  const ModelSpec spec = phi == 0.0 ? ModelSpec::mar({}, {psi}) : ModelSpec::mar({phi}, {psi});
  return simulate(spec, d, T, seed).series;
}

}  // namespace

TEST(GcovObjective, EqualsPortmanteauOfResiduals) {
  const TimeSeries y = mar_series(0.0, 0.5, 300, 1);
  const ModelSpec tmpl = ModelSpec::mar_template(0, 1);
  Vector th(1);
  th << 0.3;
  const TransformSet ts = TransformSet::linear_quadratic();
  const Matrix u = residuals_raw(tmpl, th, y.values());
  const PortmanteauValue pv = portmanteau_matrix(transform_matrix(u, ts), 2);
  EXPECT_NEAR(gcov_objective(th, tmpl, y, ts, 2) * static_cast<double>(u.rows()), pv.statistic, 1e-9);
}

TEST(GcovFit, RecoversNoncausalCoefficient) {
  const TimeSeries y = mar_series(0.0, 0.7, 2000, 2);
  const GcovFit fit = gcov_fit(ModelSpec::mar_template(0, 1), y, TransformSet::linear_quadratic(), 3);
  EXPECT_NEAR(fit.theta_hat[0], 0.7, 0.05);
  EXPECT_EQ(fit.T, 1999);
  // the reported minimum is no larger than the objective anywhere on a fine grid
  for (double psi = -0.95; psi < 0.96; psi += 0.05) {
    Vector th(1);
    th << psi;
    EXPECT_LE(fit.objective_min,
              gcov_objective(th, ModelSpec::mar_template(0, 1), y, TransformSet::linear_quadratic(), 3) + 1e-12);
  }
}

TEST(GcovFit, RecoversMar11) {
  const TimeSeries y = mar_series(0.4, 0.8, 3000, 3, ErrorDistribution::student_t(4.0));
  const GcovFit fit = gcov_fit(ModelSpec::mar_template(1, 1), y, TransformSet::linear_quadratic(), 3);
  EXPECT_NEAR(fit.theta_hat[0], 0.4, 0.08);
  EXPECT_NEAR(fit.theta_hat[1], 0.8, 0.08);
}

TEST(SpecTest, DegreesOfFreedomAndPlugin) {
  const TimeSeries y = mar_series(0.41, 0.87, 500, 4, ErrorDistribution::student_t(3.9));
  const GcovFit fit = gcov_fit(ModelSpec::mar_template(1, 1), y, TransformSet::linear_quadratic(), 9);
  const TestReport r = gcov_spec_test(fit);
  EXPECT_DOUBLE_EQ(*r.df, 34.0);
  EXPECT_NEAR(r.critical_value, 48.60, 0.005);
  EXPECT_NEAR(r.statistic, static_cast<double>(fit.T) * fit.objective_min, 1e-10);
  const TestReport p = plugin_spec_test(ModelSpec::mar_template(1, 1).with_theta(fit.theta_hat), y,
                                        TransformSet::linear_quadratic(), 9, 0.05, "plugin");
  EXPECT_NEAR(p.statistic, r.statistic, 1e-9);
  EXPECT_THROW(gcov_fit(ModelSpec::mar_template(1, 1), y, TransformSet{Transform::identity()}, 1),
               DfNonPositive);
}

TEST(Projector, IdentitiesHold) {
  Matrix g0(2, 2);
  g0 << 2.0, 0.3, 0.3, 1.0;
  Matrix J(4, 1);
  J << 0.5, -0.2, 0.1, 0.9;
  const Matrix P = pi_projector(g0, J);
  const Matrix G = Eigen::kroneckerProduct(g0, g0).eval();
  EXPECT_LT((P * G * P - P).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((P * J).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((pi_projector(g0, Matrix(4, 0)) * G - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  Matrix Jbad(4, 2);
  Jbad << J, 2.0 * J;
  EXPECT_THROW(pi_projector(g0, Jbad), RankDeficientJacobian);
}

TEST(Noncentrality, ProjectsOutEstimableDirections) {
  LocalAlternative la;
  la.gamma0 = Matrix::Identity(1, 1);
  la.mu = Vector::Zero(1);
  la.nu = Vector::Constant(1, 1.0);
  la.dGamma_dtheta = {Matrix::Constant(1, 1, 2.0)};
  la.dGamma_dgamma = {Matrix::Constant(1, 1, 3.0)};
  // K = 1 with one parameter: Gamma(1) drift is fully absorbed by theta
  EXPECT_NEAR(noncentrality(la), 0.0, 1e-12);
  la.dGamma_dtheta = {Matrix(1, 0)};
  la.mu = Vector(0);
  EXPECT_NEAR(noncentrality(la), 9.0, 1e-12);
}

TEST(Jacobian, AnalyticDerivativeAtIidNull) {
  // Null MAR(0,1) at psi = 0 (i.i.d.), alternative adds a causal phi.
  // d Gamma(1) / d phi and d Gamma(1) / d psi both equal sigma^2 at 0.
  const DgpBuilder dgp = [](const Vector& th, const Vector& ga) {
    return ModelSpec::mar({ga[0]}, {th[0]});
  };
  JacobianConfig cfg;
  cfg.T_large = 100000;
  const auto d = ErrorDistribution::laplace();
  const LocalAlternative la = jacobian_dGamma(dgp, ModelSpec::mar_template(0, 1), Vector::Zero(1),
                                              Vector::Zero(1), TransformSet{Transform::identity()}, 1, d, cfg);
  ASSERT_EQ(la.dGamma_dgamma.size(), 1u);
  EXPECT_NEAR(la.dGamma_dgamma[0](0, 0), d.variance(), 0.03);
  EXPECT_NEAR(la.dGamma_dtheta[0](0, 0), d.variance(), 0.03);
  EXPECT_GT(la.dGamma_dgamma[0](0, 0), 0.0);
}

TEST(Cugmm, JustIdentifiedMatchesGcov) {
  const TimeSeries y = mar_series(0.0, 0.5, 1000, 5);
  const ModelSpec tmpl = ModelSpec::mar_template(0, 1);
  const TransformSet ts{Transform::identity()};
  const GcovFit g = gcov_fit(tmpl, y, ts, 1);
  const CugmmResult c = cugmm_extended_fit(tmpl, y, ts, 1);
  EXPECT_LT(g.objective_min, 1e-6);
  EXPECT_LT(c.objective, 1e-6);
  EXPECT_NEAR(c.theta_hat[0], g.theta_hat[0], 1e-3);
}

TEST(Estimators, DispatchAndParse) {
  EXPECT_EQ(parse_estimator("aml"), EstimatorKind::aml);
  EXPECT_THROW(parse_estimator("mle"), UsageError);
  const TimeSeries y = mar_series(0.0, 0.5, 400, 6);
  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::ols;
  EXPECT_NEAR(estimate_theta(ModelSpec::mar_template(0, 1), y, TransformSet::linear_quadratic(), 1, cfg)[0],
              ols_noncausal_ar1(y), 1e-15);
  EXPECT_THROW(estimate_theta(ModelSpec::mar_template(1, 1), y, TransformSet::linear_quadratic(), 1, cfg),
               UsageError);
}

TEST(GcovMonteCarlo, SizeRoughlyNominal) {
  const auto stats = gcov_statistics(ModelSpec::mar({}, {0.5}), ModelSpec::mar_template(0, 1),
                                     ErrorDistribution::laplace(), 300, TransformSet::linear_quadratic(), 2,
                                     300, 77, {}, 1);
  EXPECT_NEAR(rate_above(stats, chi2_quantile(7.0, 0.95)).rate, 0.05, 0.04);
}
