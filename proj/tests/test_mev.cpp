#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mgpx/mev.hpp"
#include "mgpx/parametric.hpp"

using namespace mgpx;

namespace {

std::vector<GevMargin> gumbel2() { return {GevMargin::gumbel(), GevMargin::gumbel()}; }

}  // namespace

TEST(MevCdf, BoundaryDependenceCases) {
  const std::vector<GevMargin> m{{0.0, 1.0, 0.0}, {1.0, 2.0, 0.2}};
  const MevModel cd(m, TailFunctions::complete_dependence(2));
  const MevModel ai(m, TailFunctions::asymptotic_independence(2));
  for (const auto& x : {std::vector<double>{0.3, 1.5}, std::vector<double>{-1.0, 4.0}, std::vector<double>{2.0, 0.0}}) {
    const double g1 = m[0].cdf(x[0]), g2 = m[1].cdf(x[1]);
    EXPECT_NEAR(mev_cdf(cd, x), std::min(g1, g2), 1e-15);
    EXPECT_NEAR(mev_cdf(ai, x), g1 * g2, 1e-15);
  }
  const std::vector<double> below{0.0, -20.0};  // below the lower endpoint of the second margin
  EXPECT_EQ(mev_cdf(ai, below), 0.0);
}

TEST(MevCdf, EqualMarginalLevelsGivePowerOfExtremalCoefficient) {
  const MevModel lg(gumbel2(), TailFunctions::logistic(2.0, 2));
  for (double p : {0.1, 0.5, 0.9}) {
    const double q = GevMargin::gumbel().quantile(p);
    const std::vector<double> x{q, q};
    EXPECT_NEAR(mev_cdf(lg, x), std::pow(p, std::sqrt(2.0)), 1e-14);
  }
}

TEST(MevCdf, UnitFrechetExamples) {
  const std::vector<double> y{2.0, 4.0};
  EXPECT_NEAR(mev_cdf_frechet(TailFunctions::complete_dependence(2), y), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(mev_cdf_frechet(TailFunctions::asymptotic_independence(2), y), std::exp(-0.75), 1e-15);
  EXPECT_NEAR(mev_cdf_frechet(TailFunctions::logistic(2.0, 2), y), std::exp(-std::hypot(0.5, 0.25)), 1e-15);
  const std::vector<double> one_open{2.0, pos_inf};
  EXPECT_NEAR(mev_cdf_frechet(TailFunctions::logistic(2.0, 2), one_open), std::exp(-0.5), 1e-15);
}

TEST(MaxStability, HoldsForAllTailFunctionsAndNormalizations) {
  const std::vector<TailFunctions> tails{TailFunctions::complete_dependence(2), TailFunctions::asymptotic_independence(2),
                                         TailFunctions::logistic(1.5, 2), TailFunctions::logistic(3.0, 2),
                                         TailFunctions::husler_reiss_bivariate(1.0)};
  const std::vector<std::vector<GevMargin>> margins{
      gumbel2(), {GevMargin::unit_frechet(), GevMargin::unit_frechet()}, {{1.0, 2.0, 0.3}, {-0.5, 0.7, -0.2}}};
  for (const auto& t : tails) {
    for (const auto& m : margins) {
      const MevModel model(m, t);
      const auto grid = quantile_grid(m, decile_levels());
      for (int k : {2, 12}) EXPECT_LT(max_stability_check(model, k, grid), 1e-12) << t.source() << " k=" << k;
    }
  }
}

TEST(MaxStability, RecenteringConstants) {
  const auto g = max_stability_constants({GevMargin::gumbel(), GevMargin::unit_frechet()}, 4.0);
  EXPECT_EQ(g.a[0], 1.0);
  EXPECT_NEAR(g.b[0], std::log(4.0), 1e-15);
  EXPECT_NEAR(g.a[1], 4.0, 1e-15);
  EXPECT_NEAR(g.b[1], 0.0, 1e-15);  // mu (1 - k) + sigma (k - 1) with mu = sigma = 1
  EXPECT_THROW(max_stability_constants({GevMargin::gumbel()}, 0.5), DomainError);
}

TEST(MaxStability, GaussianCopulaIsNotMaxStable) {
  const auto m = gumbel2();
  const auto grid = quantile_grid(m, decile_levels());
  const auto r = max_stability_constants(m, 2);
  const double dev = max_stability_deviation(
      [&](std::span<const double> x) { return gaussian_copula_cdf(x, m, 0.5); }, r, 2, grid);
  EXPECT_GT(dev, 0.01);
  // rho = 0 is the independence copula, which is max-stable
  const double dev0 = max_stability_deviation(
      [&](std::span<const double> x) { return gaussian_copula_cdf(x, m, 0.0); }, r, 2, grid);
  EXPECT_LT(dev0, 1e-12);
}

TEST(BivariateNormal, OrthantProbability) {
  for (double rho : {-0.9, -0.3, 0.0, 0.4, 0.95}) {
    EXPECT_NEAR(bivariate_normal_cdf(0.0, 0.0, rho), 0.25 + std::asin(rho) / (2.0 * std::numbers::pi), 1e-13);
  }
  EXPECT_NEAR(bivariate_normal_cdf(0.7, -0.2, 0.0), stats::normal_cdf(0.7) * stats::normal_cdf(-0.2), 1e-15);
  EXPECT_NEAR(bivariate_normal_cdf(pos_inf, 0.3, 0.5), stats::normal_cdf(0.3), 1e-15);
  EXPECT_THROW(bivariate_normal_cdf(0.0, 0.0, 1.0), DomainError);
}

TEST(BlockMaxima, CompleteDependenceAndIndependence) {
  RngStream rng(1);
  const auto diag = xeu_sampler([](RngStream&, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); });
  const auto cd = block_maxima_experiment(diag, TailFunctions::complete_dependence(2), 200, 4000, rng);
  EXPECT_LT(cd.sup_deviation, 0.04);
  EXPECT_EQ(cd.grid.size(), 81u);

  const DrawFn indep = [](RngStream& r, std::span<double> out) {
    for (double& v : out) v = r.exponential();
  };
  const auto ai = block_maxima_experiment(indep, TailFunctions::asymptotic_independence(2), 200, 4000, rng);
  EXPECT_LT(ai.sup_deviation, 0.04);

  // the wrong limit is detected
  const auto wrong = block_maxima_experiment(indep, TailFunctions::complete_dependence(2), 200, 4000, rng);
  EXPECT_GT(wrong.sup_deviation, 0.1);
}

TEST(BlockMaxima, HuslerReissLimitFromGaussianSampler) {
  Eigen::MatrixXd s(2, 2);
  s << 4.0, 3.5, 3.5, 4.0;  // Var(U1 - U2) = 1
  RngStream rng(2);
  const auto r = block_maxima_experiment(gaussian_xeu_sampler(s), TailFunctions::husler_reiss_bivariate(1.0), 500,
                                         4000, rng);
  EXPECT_LT(r.sup_deviation, 0.05);
}

TEST(ThreeViews, FixedCases) {
  XMatrix s(3, 2);
  s.data = {0.1, 0.2, -1.0, neg_inf, 0.5, 0.5};
  const std::vector<double> hi{0.5, 0.5}, lo{0.4, 0.5}, exact{0.5, 0.2};
  EXPECT_EQ(three_views_equivalence(s, hi), (std::array<bool, 3>{true, true, true}));
  EXPECT_EQ(three_views_equivalence(s, lo), (std::array<bool, 3>{false, false, false}));
  EXPECT_EQ(three_views_equivalence(s, exact), (std::array<bool, 3>{false, false, false}));
}

TEST(ThreeViews, FuzzedSamplesWithTiesAgree) {
  RngStream rng(3);
  for (int c = 0; c < 2000; ++c) {
    const std::size_t n = 1 + rng.index(6), d = 1 + rng.index(3);
    XMatrix s(n, d);
    for (double& v : s.data) v = rng.uniform() < 0.1 ? neg_inf : static_cast<double>(rng.index(4));
    std::vector<double> u(d);
    for (double& v : u) v = static_cast<double>(rng.index(4));
    const auto r = three_views_equivalence(s, u);
    ASSERT_TRUE(r[0] == r[1] && r[1] == r[2]) << "case " << c;
  }
}
