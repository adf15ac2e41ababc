#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "gcovtest/models.hpp"

using namespace gcovtest;

namespace {

double golden_max(const std::function<double(double)>& f, double lo, double hi, int iters) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Scaled t(nu) log-likelihood written out from the density.
double t_loglik(const Vector& u, double nu, double sigma) {
  double s = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    const double z = u[i] / sigma;
    s += std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - 0.5 * std::log(nu * M_PI) - std::log(sigma) -
         (nu + 1) / 2 * std::log(1 + z * z / nu);
  }
  return s;
}

}  // namespace

TEST(Roots, ReciprocalModuliAndParsing) {
  Vector c(1);
  c << 0.41;
  const auto roots = polynomial_roots(c);
  ASSERT_EQ(roots.size(), 1u);
  EXPECT_NEAR(roots[0].real(), 1.0 / 0.41, 1e-12);
  Vector c2(2);
  c2 << 0.5, 0.3;  // 1 - 0.5 z - 0.3 z^2
  for (const auto& z : polynomial_roots(c2))
    EXPECT_NEAR(std::abs(1.0 - 0.5 * z - 0.3 * z * z), 0.0, 1e-12);
  EXPECT_TRUE(roots_outside_unit_circle(c2));
  c2 << 0.5, 0.6;
  EXPECT_FALSE(roots_outside_unit_circle(c2));
  EXPECT_EQ(parse_model("MAR(1,1)").name(), "MAR(1,1)");
  EXPECT_EQ(parse_model("mar(0, 2)").dim_theta(), 2);
  EXPECT_EQ(parse_model("VAR(1)", 2).dim_theta(), 4);
  EXPECT_EQ(parse_model("DAR1").dim_theta(), 3);
  EXPECT_THROW(parse_model("ARMA(1,1)"), UsageError);
  EXPECT_THROW(parse_model("MAR(1,x)"), UsageError);
}

TEST(Spec, ValidationAndParametrization) {
  EXPECT_THROW(ModelSpec::mar({1.2}, {0.3}), InvalidTheta);
  EXPECT_THROW(ModelSpec::mar({0.2}, {-1.0}), InvalidTheta);
  EXPECT_THROW(ModelSpec::dar1(-1.0, 0.2, 0.1), InvalidTheta);
  const ModelSpec tmpl = ModelSpec::mar_template(2, 1);
  Vector th(3);
  th << 0.5, 0.3, -0.6;
  const Vector eta = to_unconstrained(tmpl, th);
  EXPECT_TRUE(from_unconstrained(tmpl, eta).isApprox(th, 1e-12));
  // every unconstrained point maps into the stationarity region
  Vector far(3);
  far << 5.0, -7.0, 3.0;
  EXPECT_NO_THROW(tmpl.with_theta(from_unconstrained(tmpl, far)));
  EXPECT_EQ(default_starts(ModelSpec::mar_template(0, 1), Matrix::Ones(10, 1), 0.1).size(), 19u);
}

TEST(Simulate, ResidualsRecoverErrors) {
  for (const auto& spec : {ModelSpec::mar({0.8}, {0.7}), ModelSpec::mar({}, {0.9}),
                           ModelSpec::mar({0.5, 0.2}, {0.4, -0.3})}) {
    const Simulation sim = simulate(spec, ErrorDistribution::student_t(3.0), 400, 5);
    const Matrix u = residuals(spec, sim.series).values();
    const Index r = spec.r(), s = spec.s();
    const Matrix e = sim.errors.middleRows(r, 400 - r - s);
    EXPECT_LT((u - e).cwiseAbs().maxCoeff(), 1e-6) << spec.name();
  }
}

TEST(Simulate, DeterministicAndBurnChecked) {
  const ModelSpec spec = ModelSpec::mar({0.3}, {0.9});
  const Simulation a = simulate(spec, ErrorDistribution::laplace(), 100, 17);
  const Simulation b = simulate(spec, ErrorDistribution::laplace(), 100, 17);
  EXPECT_EQ(a.series.values(), b.series.values());
  EXPECT_GE(a.burn, static_cast<Index>(std::ceil(std::log(1e-10) / std::log(0.9))));
  EXPECT_THROW(simulate(spec, ErrorDistribution::laplace(), 100, 1, 5), BurnTooSmall);
}

TEST(Simulate, VarAndDarRoundTrip) {
  Vector th(4);
  th << 0.5, 0.1, -0.2, 0.3;
  const ModelSpec var = ModelSpec::var(1, 2, th);
  const Simulation sv = simulate(var, ErrorDistribution::gaussian(), 200, 3);
  EXPECT_LT((residuals(var, sv.series).values() - sv.errors.bottomRows(199)).cwiseAbs().maxCoeff(), 1e-10);
  const ModelSpec dar = ModelSpec::dar1(0.5, 0.3, 0.2);
  const Simulation sd = simulate(dar, ErrorDistribution::gaussian(), 200, 3);
  EXPECT_LT((residuals(dar, sd.series).values() - sd.errors.bottomRows(199)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Invert, ResidualInversionIsExact) {
  const ModelSpec spec = ModelSpec::mar({0.6}, {0.8});
  const Simulation sim = simulate(spec, ErrorDistribution::laplace(), 150, 9);
  const Matrix& y = sim.series.values();
  const Matrix u = residuals_raw(spec, spec.theta(), y);
  Matrix boundary = Matrix::Zero(150, 1);
  boundary(0, 0) = y(0, 0);
  boundary.bottomRows(2) = y.bottomRows(2);
  EXPECT_LT((invert_residuals(spec, boundary, u) - y).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Components, DualReconstruction) {
  const double phi = 0.41, psi = 0.87;
  const Simulation sim = simulate(ModelSpec::mar({phi}, {psi}), ErrorDistribution::student_t(4.0), 300, 2);
  const MarComponents c = mar_components(sim.series, phi, psi);
  const Vector y = sim.series.values().col(0);
  const Vector mid = y.segment(1, 298);
  EXPECT_LT((c.reconstruct_causal() - mid).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((c.reconstruct_noncausal() - mid).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_THROW(mar_components(sim.series, 1.0, 0.5), InvalidTheta);
}

TEST(Aml, MatchesGoldenSectionOracle) {
  const Simulation sim = simulate(ModelSpec::mar({}, {0.6}), ErrorDistribution::student_t(5.0), 500, 21);
  const FitResult fit = aml_fit(ModelSpec::mar_template(0, 1), sim.series);
  const Vector x = sim.series.values().col(0);
  auto resid = [&](double psi) { return Vector(x.head(499) - psi * x.tail(499)); };
  auto prof_sigma = [&](double psi, double nu) {
    const Vector u = resid(psi);
    const double s = golden_max([&](double ls) { return t_loglik(u, nu, std::exp(ls)); }, -3.0, 3.0, 60);
    return t_loglik(u, nu, std::exp(s));
  };
  auto prof_nu = [&](double psi) {
    const double lnu = golden_max([&](double l) { return prof_sigma(psi, 2.0 + std::exp(l)); }, -3.0, 5.0, 50);
    return prof_sigma(psi, 2.0 + std::exp(lnu));
  };
  const double psi_star = golden_max(prof_nu, 0.01, 0.99, 45);
  EXPECT_NEAR(fit.theta[0], psi_star, 1e-3);
  EXPECT_NEAR(fit.loglik, prof_nu(psi_star), 1e-3);
  EXPECT_NEAR(fit.theta[0], 0.6, 0.1);
  EXPECT_GT(fit.nu, 2.0);
}

TEST(Ols, NoncausalAr1) {
  const Simulation sim = simulate(ModelSpec::mar({}, {0.5}), ErrorDistribution::laplace(), 5000, 4);
  const Vector x = sim.series.values().col(0);
  const double expected = x.head(4999).dot(x.tail(4999)) / x.tail(4999).squaredNorm();
  EXPECT_DOUBLE_EQ(ols_noncausal_ar1(sim.series), expected);
  EXPECT_NEAR(expected, 0.5, 0.05);
}
