#include <gtest/gtest.h>

#include <cmath>

#include "mgpx/parametric.hpp"
#include "mgpx/pointproc.hpp"
#include "mgpx/stats.hpp"

using namespace mgpx;

namespace {

double log_binomial_pmf(std::size_t k, std::size_t n, double p) {
  const double kk = static_cast<double>(k), nn = static_cast<double>(n);
  return std::lgamma(nn + 1) - std::lgamma(kk + 1) - std::lgamma(nn - kk + 1) + kk * std::log(p) +
         (nn - kk) * std::log1p(-p);
}

}  // namespace

TEST(Counts, EmptyRegionNeverHit) {
  RngStream rng(1);
  const auto e = mgp_e_sampler(logistic_generator({2.0, 2}), std::sqrt(2.0));
  const auto c = simulate_counts(e, 2, Region::box({1.0, 1.0}, {0.0, 0.0}), 100, 50, rng);
  for (double v : c) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(simulate_counts(e, 2, Region::box({neg_inf, neg_inf}, {0.0, 0.0}), 10, 10, rng), DomainError);
}

TEST(Counts, UnivariateCountsAreBinomial) {
  // D = 1: E ~ Exp(1), P(E > log n) = 1/n
  const std::size_t n = 50, reps = 20'000;
  RngStream rng(2);
  const DrawFn e = [](RngStream& r, std::span<double> out) { out[0] = r.exponential(); };
  const auto c = simulate_counts(e, 1, Region::half_space(1, 0, 0.0), n, reps, rng);
  std::vector<double> obs(4, 0.0), prob(4, 0.0);
  for (double v : c) obs[std::min<std::size_t>(3, static_cast<std::size_t>(v))] += 1.0;
  double head = 0.0;
  for (std::size_t k = 0; k < 3; ++k) head += prob[k] = std::exp(log_binomial_pmf(k, n, 1.0 / n));
  prob[3] = 1.0 - head;
  EXPECT_GT(stats::chi2_gof(obs, prob).p_value, 1e-3);
  const auto m = stats::mean_se(c);
  EXPECT_NEAR(m.value, 1.0, 4.0 * m.std_error);
}

TEST(Counts, MeanCountIsExponentMeasure) {
  const auto gen = logistic_generator({2.0, 2});
  const auto e = mgp_e_sampler(gen, std::sqrt(2.0));
  RngStream rng(3);
  const std::vector<double> u{0.3, -0.2};
  const double lam = std::sqrt(std::exp(-0.6) + std::exp(0.4));  // l(e^{-u})
  const auto c = simulate_counts(e, 2, Region::not_below(u), 100, 10'000, rng);
  const auto m = stats::mean_se(c);
  EXPECT_NEAR(m.value, lam, 4.0 * m.std_error);
  EXPECT_GT(poisson_limit_check(c, lam).p_value, 1e-3);
  EXPECT_THROW(mgp_e_sampler(gen, 0.5), DomainError);
}

TEST(Counts, HuslerReissPoissonFit) {
  const auto p = HuslerReissParams(std::vector<double>{0.0, 0.0}, std::vector<std::vector<double>>{{1.0, 0.5}, {0.5, 1.0}});
  const auto gen = hr_generator(p);
  const auto e = mgp_e_sampler(gen, 2.0 * stats::normal_cdf(0.5));
  RngStream rng(4);
  const std::vector<double> u{0.5, 1.0};
  const double lam = hr_stdf_bivariate(std::exp(-0.5), std::exp(-1.0), 1.0);
  const auto c = simulate_counts(e, 2, Region::not_below(u), 200, 5000, rng);
  EXPECT_GT(poisson_limit_check(c, lam).p_value, 1e-3);
  EXPECT_LT(count_tv_distance(c, lam), 0.03);
}

TEST(PoissonCheck, RejectsWrongLaw) {
  const std::vector<double> zeros(1000, 0.0);
  EXPECT_LT(poisson_limit_check(zeros, 3.0).p_value, 1e-6);
  EXPECT_NEAR(count_tv_distance(zeros, 3.0), 1.0 - std::exp(-3.0), 1e-12);
  EXPECT_THROW(poisson_limit_check({0.5}, 1.0), DomainError);
  EXPECT_THROW(poisson_limit_check({1.0}, 0.0), DomainError);
}

TEST(Lottery, CountsFollowBinomial) {
  RngStream rng(5);
  const std::size_t n = 1000, reps = 200'000;
  const auto c = lottery_counts(n, 1.0 / n, reps, rng);
  std::vector<double> freq(4, 0.0);
  for (double v : c) {
    if (v < 4.0) freq[static_cast<std::size_t>(v)] += 1.0 / reps;
  }
  EXPECT_NEAR(freq[0], std::exp(-1.0), 0.005);
  for (std::size_t k = 0; k < 4; ++k) {
    const double pk = std::exp(log_binomial_pmf(k, n, 1.0 / n));
    EXPECT_NEAR(freq[k], pk, 4.0 * std::sqrt(pk * (1 - pk) / reps)) << k;
  }
  EXPECT_THROW(lottery_counts(10, 1.0, 10, rng), DomainError);
}

TEST(Disjoint, IndependentCountsAndOverlapDetection) {
  const auto gen = logistic_generator({2.0, 2});
  const auto e = mgp_e_sampler(gen, std::sqrt(2.0));
  const Region a = Region::box({0.0, neg_inf}, {pos_inf, 0.0});
  const Region b = Region::box({neg_inf, 0.5}, {0.0, pos_inf});
  EXPECT_FALSE(regions_overlap(a, b));
  RngStream rng(6);
  const auto rep = disjoint_independence_check(e, 2, a, b, 100, 5000, rng);
  EXPECT_TRUE(rep.covers_zero()) << rep.correlation;

  const Region h1 = Region::half_space(2, 0, 0.0), h2 = Region::half_space(2, 1, 0.0);
  EXPECT_TRUE(regions_overlap(h1, h2));
  EXPECT_THROW(disjoint_independence_check(e, 2, h1, h2, 10, 10, rng), DomainError);
  EXPECT_TRUE(regions_overlap(Region::not_below({0.0, 0.0}), Region::box({-1.0, 0.5}, {0.0, 1.0})));
}
