#include <gtest/gtest.h>

#include <cmath>

#include "mgpx/parametric.hpp"
#include "mgpx/stats.hpp"
#include "mgpx/tailmeasure.hpp"

using namespace mgpx;

namespace {

HuslerReissParams gaussian(double rho, double var = 1.0) {
  return HuslerReissParams(std::vector<double>{0.0, 0.0}, std::vector<std::vector<double>>{{var, rho}, {rho, var}});
}

double logistic_lambda(const std::vector<double>& u, double alpha) {
  double s = 0.0;
  for (double v : u) s += std::exp(-alpha * v);
  return std::pow(s, 1.0 / alpha);
}

}  // namespace

TEST(Chi, ExactForTheBoundaryCases) {
  RngStream rng(1);
  EXPECT_EQ(chi(complete_dependence(2), 10, rng).value, 1.0);
  EXPECT_EQ(chi(asymptotic_independence({0.4, 0.6}), 10, rng).value, 0.0);
  EXPECT_THROW(chi(complete_dependence(3), 10, rng), DimensionError);
}

TEST(Chi, LogisticAndHuslerReiss) {
  RngStream rng(2);
  const Estimate lg = chi(logistic_generator({2.0, 2}), 200'000, rng);
  EXPECT_NEAR(lg.value, 2.0 - std::sqrt(2.0), 4.0 * lg.std_error);
  EXPECT_TRUE(lg.warnings.empty());

  const auto p = gaussian(0.5);  // lambda = 1
  const Estimate hr = chi(hr_generator(p), 200'000, rng);
  EXPECT_NEAR(hr.value, 2.0 * stats::normal_sf(0.5), 4.0 * hr.std_error);
}

TEST(Chi, ConditionalExceedanceIsLevelInvariant) {
  const auto gen = logistic_generator({2.0, 2});
  const double target = 2.0 - std::sqrt(2.0);
  RngStream rng(3);
  for (double x : {0.0, 0.5, 2.0}) {
    const Estimate e = chi_empirical(gen, x, x, 400'000, rng);
    EXPECT_NEAR(e.value, target, 4.0 * e.std_error) << "level " << x;
  }
  EXPECT_DOUBLE_EQ(matched_level({0.5, 0.5}, 1.3), 1.3);
  EXPECT_NEAR(matched_level({1.0, 0.5}, 1.0), 1.0 + std::log(2.0), 1e-15);
}

TEST(ExtremalCoefficient, ClosedFormsAndRange) {
  RngStream rng(4);
  EXPECT_NEAR(extremal_coefficient(logistic_generator({3.0, 3}), 10, rng).value, std::pow(3.0, 1.0 / 3.0), 1e-14);
  EXPECT_NEAR(extremal_coefficient(hr_generator(gaussian(0.5)), 10, rng).value, 2.0 * stats::normal_cdf(0.5), 1e-14);
  EXPECT_EQ(extremal_coefficient(complete_dependence(4), 10, rng).value, 1.0);
  EXPECT_EQ(extremal_coefficient(asymptotic_independence({1.0 / 3, 1.0 / 3, 1.0 / 3}), 10, rng).value, 3.0);
  const Estimate uneven = extremal_coefficient(asymptotic_independence({0.25, 0.25, 0.5}), 10, rng);
  EXPECT_EQ(uneven.value, 3.0);
  EXPECT_FALSE(uneven.warnings.empty());

  const auto tg = tgauss_generator(gaussian(0.3));
  const Estimate ec = extremal_coefficient(tg, 200'000, rng);
  EXPECT_GE(ec.value, 1.0);
  EXPECT_LE(ec.value, 2.0);
  const Estimate c = chi(tg, 200'000, rng);
  EXPECT_NEAR(ec.value, 2.0 - c.value, 4.0 * std::hypot(ec.std_error, c.std_error));
}

TEST(LambdaMass, MarginalHalfSpacesHaveUnitMass) {
  RngStream rng(5);
  const auto gen = logistic_generator({1.5, 3});
  for (std::size_t j = 0; j < 3; ++j) {
    const Estimate e = lambda_mass(gen, Region::half_space(3, j, 0.0), 200'000, rng);
    EXPECT_NEAR(e.value, 1.0, 4.0 * e.std_error);
  }
  const auto tg = tgauss_generator(gaussian(0.4));
  const Estimate e = lambda_mass(tg, Region::half_space(2, 1, 0.0), 200'000, rng);
  EXPECT_NEAR(e.value, 1.0, 4.0 * e.std_error);
}

TEST(LambdaMass, ExceedanceRegionsMatchLogisticClosedForm) {
  RngStream rng(6);
  const auto gen = logistic_generator({2.0, 2});
  for (const auto& u : {std::vector<double>{0.3, -0.2}, std::vector<double>{1.0, 2.0}}) {
    const Estimate e = lambda_mass(gen, Region::not_below(u), 200'000, rng);
    EXPECT_NEAR(e.value, logistic_lambda(u, 2.0), 4.0 * e.std_error);
  }
}

TEST(LambdaMass, Homogeneity) {
  RngStream rng(7);
  const auto gen = logistic_generator({2.0, 2});
  const Region b = Region::box({0.5, -1.0}, {pos_inf, 1.0});
  const Estimate base = lambda_mass(gen, b, 200'000, rng);
  for (double t : {-1.0, 1.0, 2.0}) {
    const Estimate e = lambda_mass(gen, b.translated(t), 200'000, rng);
    const double want = std::exp(-t) * base.value;
    EXPECT_NEAR(e.value, want, 4.0 * std::hypot(e.std_error, std::exp(-t) * base.std_error)) << t;
  }
  EXPECT_THROW(lambda_mass(gen, Region::box({neg_inf, neg_inf}, {0.0, 0.0}), 10, rng), DomainError);
}

TEST(NuMass, ParetoScaleMarginalsAndScaling) {
  RngStream rng(8);
  const auto gen = hr_generator(gaussian(0.5));
  for (double y : {0.5, 1.0, 4.0}) {
    const Estimate e = nu_mass(gen, Region::half_space(2, 0, y), 200'000, rng);
    EXPECT_NEAR(e.value, 1.0 / y, 4.0 * e.std_error + 1e-12);
  }
  const Region b = Region::not_below({2.0, 3.0});
  const Estimate one = nu_mass(gen, b, 200'000, rng);
  const Estimate two = nu_mass(gen, b.scaled(2.0), 200'000, rng);
  EXPECT_NEAR(two.value, one.value / 2.0, 4.0 * std::hypot(two.std_error, one.std_error / 2.0));
}

TEST(TailFunctions, ClosedFormIdentities) {
  const auto lg = TailFunctions::logistic(2.0, 2);
  EXPECT_DOUBLE_EQ(lg.ell({1.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(lg.ell({0.0, 1.0}), 1.0);
  EXPECT_NEAR(lg.extremal_coefficient(), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(lg.ell({3.0, 4.0}), 5.0, 1e-14);
  const std::vector<double> half{0.5, 0.5};
  EXPECT_NEAR(pickands(lg, half), std::sqrt(2.0) / 2.0, 1e-15);
  const std::vector<double> y{2.0, pos_inf};
  EXPECT_DOUBLE_EQ(exponent_function(lg, y), 0.5);

  const auto cd = TailFunctions::complete_dependence(3);
  const auto ai = TailFunctions::asymptotic_independence(3);
  EXPECT_EQ(cd.ell({0.2, 0.9, 0.4}), 0.9);
  EXPECT_DOUBLE_EQ(ai.ell({0.2, 0.9, 0.4}), 1.5);
  EXPECT_EQ(cd.ell_std_error(std::vector<double>{1.0, 1.0, 1.0}), 0.0);

  const std::vector<double> bad{0.6, 0.6};
  EXPECT_THROW(pickands(lg, bad), DomainError);
  EXPECT_THROW((void)lg.ell({-1.0, 0.0}), DomainError);
}

TEST(TailFunctions, CdfViaStdfForCompleteDependence) {
  const auto cd = TailFunctions::complete_dependence(2);
  for (double c : {1.5, 3.0, 10.0}) {
    const std::vector<double> y{c, c};
    // e^{E} <= c  with E ~ Exp(1)
    EXPECT_NEAR(cdf_via_stdf(cd, y), 1.0 - 1.0 / c, 1e-15);
  }
  const std::vector<double> low{0.5, 0.5};
  EXPECT_EQ(cdf_via_stdf(cd, low), 0.0);
}

TEST(TailFunctions, DnormMatchesLogistic) {
  RngStream rng(9);
  const auto mc = TailFunctions::from_generator(logistic_generator({2.0, 2}), 200'000, rng);
  EXPECT_TRUE(mc.monte_carlo());
  EXPECT_NEAR(mc.ell({1.0, 0.0}), 1.0, 1e-10);
  for (const auto& y : {std::vector<double>{1.0, 1.0}, std::vector<double>{0.3, 2.0}}) {
    EXPECT_NEAR(mc.ell(y), logistic_stdf(y, 2.0), 4.0 * mc.ell_std_error(y)) << y[0];
  }
  // homogeneity holds exactly on the stored sample
  EXPECT_NEAR(mc.ell({0.6, 4.0}), 2.0 * mc.ell({0.3, 2.0}), 1e-12);
}

TEST(TailFunctions, FamilyDispatch) {
  RngStream rng(10);
  EXPECT_EQ(tail_functions(family::Logistic{{2.0, 2}}, rng).source(), "closed-form:logistic");
  EXPECT_EQ(tail_functions(family::HuslerReiss{gaussian(0.5)}, rng).source(), "closed-form:husler_reiss");
  const auto tg = tail_functions(family::TGaussian{gaussian(0.5)}, rng, 20'000);
  EXPECT_TRUE(tg.monte_carlo());
  EXPECT_NEAR(tail_functions(family::HuslerReiss{gaussian(0.5)}, rng).extremal_coefficient(),
              2.0 * stats::normal_cdf(0.5), 1e-15);
}

TEST(Angular, CompleteDependenceAndIndependence) {
  RngStream rng(11);
  const auto cd = angular_sample(complete_dependence(2), NormP::L1, 20'000, rng);
  for (double w : cd.points.data) EXPECT_NEAR(w, 0.5, 1e-15);
  EXPECT_NEAR(cd.total_mass.value, 2.0, 1e-12);

  const auto ai = angular_sample(asymptotic_independence({0.5, 0.5}), NormP::L1, 200'000, rng);
  for (std::size_t i = 0; i < ai.points.rows; ++i) {
    EXPECT_TRUE(ai.points(i, 0) == 1.0 || ai.points(i, 1) == 1.0);
  }
  EXPECT_NEAR(ai.total_mass.value, 2.0, 4.0 * ai.total_mass.std_error);
  EXPECT_NEAR(chi_from_angular(ai).value, 0.0, 1e-15);
}

TEST(Angular, MomentsAndChi) {
  RngStream rng(12);
  const auto gen = logistic_generator({2.0, 2});
  const auto s = angular_sample(gen, NormP::L1, 400'000, rng);
  for (std::size_t j = 0; j < 2; ++j) {
    const Estimate m = angular_moment(s, j);
    EXPECT_NEAR(m.value, 1.0, 4.0 * m.std_error);
  }
  EXPECT_NEAR(s.total_mass.value, 2.0, 4.0 * s.total_mass.std_error);
  const Estimate c = chi_from_angular(s);
  EXPECT_NEAR(c.value, 2.0 - std::sqrt(2.0), 4.0 * c.std_error);
  EXPECT_THROW(chi_from_angular(angular_sample(gen, NormP::L2, 10'000, rng)), DomainError);
}
