#include <gtest/gtest.h>

#include <cmath>

#include "mgpx/mgp.hpp"
#include "mgpx/parametric.hpp"
#include "mgpx/stats.hpp"

using namespace mgpx;

namespace {

double exp1_cdf(double t) { return t <= 0.0 ? 0.0 : -std::expm1(-t); }

std::vector<double> row_max(const XMatrix& z) {
  std::vector<double> m(z.rows);
  for (std::size_t i = 0; i < z.rows; ++i) m[i] = XVec::max_of(z.row(i));
  return m;
}

HuslerReissParams hr_params() {
  return HuslerReissParams(std::vector<double>{0.0, 0.0}, std::vector<std::vector<double>>{{1.0, 0.5}, {0.5, 1.0}});
}

}  // namespace

TEST(Simulate, CompleteDependenceRowsOnDiagonal) {
  RngStream rng(1);
  const XMatrix z = sample_standard(complete_dependence(2), rng, 10'000);
  for (std::size_t i = 0; i < z.rows; ++i) ASSERT_EQ(z(i, 0), z(i, 1));
  EXPECT_GT(stats::ks_test(z.column(0), exp1_cdf).p_value, 1e-3);
}

TEST(Simulate, RowMaximumIsStandardExponential) {
  RngStream rng(2);
  const std::size_t n = 100'000;
  const XMatrix z = sample_standard(logistic_generator({2.0, 3}), rng, n);
  auto m = row_max(z);
  EXPECT_LT(stats::ks_statistic(m, exp1_cdf), 1.5 * 1.36 / std::sqrt(static_cast<double>(n)));
}

TEST(Simulate, MarginsMapMinusInfinityToLowerEndpoint) {
  MgpModel model(MarginParams({2.0, 2.0}, {0.5, -0.5}), asymptotic_independence({0.5, 0.5}));
  RngStream rng(3);
  const XMatrix y = sample(model, rng, 2000);
  bool saw_endpoint = false;
  for (std::size_t i = 0; i < y.rows; ++i) {
    EXPECT_GE(y(i, 0), -4.0);
    saw_endpoint = saw_endpoint || y(i, 0) == -4.0;
    if (y(i, 1) > neg_inf) {
      EXPECT_GT(y(i, 1), 0.0);
      EXPECT_LT(y(i, 1), 4.0);
    }
    EXPECT_TRUE(y(i, 0) > 0.0 || y(i, 1) > 0.0);
  }
  EXPECT_TRUE(saw_endpoint);
}

TEST(Simulate, IdentityMarginsAreANoOp) {
  const auto gen = logistic_generator({1.5, 2});
  RngStream a(4), b(4);
  const XMatrix z = sample_standard(gen, a, 100);
  const XMatrix y = sample(MgpModel(gen), b, 100);
  EXPECT_EQ(z.data, y.data);
}

TEST(Cdf, CompleteDependenceClosedForm) {
  MgpModel model(complete_dependence(2));
  RngStream rng(5);
  for (double c : {0.3, 1.0, 2.5}) {
    const std::vector<double> y{c, c};
    EXPECT_NEAR(cdf(model, y, 1, rng).value, -std::expm1(-c), 1e-15);
  }
  const std::vector<double> origin{0.0, 0.0};
  EXPECT_EQ(cdf(MgpModel(logistic_generator({2.0, 2})), origin, 1000, rng).value, 0.0);
}

TEST(Cdf, FourAtomGeneratorMatchesEnumeration) {
  XMatrix rows(4, 2);
  rows.data = {0.0, 0.0, 0.0, -1.0, -0.5, 0.0, 0.0, neg_inf};
  MgpModel model(empirical(rows));
  const std::vector<double> x{1.2, 0.7};
  // P(E <= min_j (x_j - s_j)) averaged over the four atoms
  const double m[] = {0.7, 1.2, 0.7, 1.2};
  double oracle = 0.0;
  for (double v : m) oracle += 0.25 * (1.0 - std::exp(-v));
  RngStream rng(6);
  const Estimate e = cdf(model, x, 200'000, rng);
  EXPECT_NEAR(e.value, oracle, 4.0 * e.std_error + 1e-12);
}

TEST(Cdf, AsymptoticIndependenceExact) {
  MgpModel model(asymptotic_independence({0.3, 0.7}));
  RngStream rng(7);
  const std::vector<double> x{1.0, 2.0};
  const double oracle = 0.3 * (1.0 - std::exp(-1.0)) + 0.7 * (1.0 - std::exp(-2.0));
  const Estimate e = cdf(model, x, 1, rng);
  EXPECT_NEAR(e.value, oracle, 1e-15);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(Density, TRouteMatchesRiemannOracle) {
  // iid Gumbel T
  const DensityFn pdf_T = [](std::span<const double> t) {
    double p = 1.0;
    for (double v : t) p *= std::exp(-v - std::exp(-v));
    return p;
  };
  for (const auto& zz : {std::vector<double>{0.5, -0.3}, std::vector<double>{1.7, 2.2}, std::vector<double>{-2.0, 0.1}}) {
    const XVec z(zz);
    // trapezoid on [-40, 40] with step 1e-3
    double integral = 0.0;
    const double h = 1e-3;
    for (int k = 0; k <= 80'000; ++k) {
      const double t = -40.0 + h * k;
      const double w = (k == 0 || k == 80'000) ? 0.5 : 1.0;
      const std::vector<double> p{zz[0] + t, zz[1] + t};
      integral += w * pdf_T(p);
    }
    const double oracle = std::exp(-z.max()) * integral * h;
    EXPECT_NEAR(density_standard_from_T(pdf_T, z).value, oracle, 1e-6 * oracle);
  }
  EXPECT_EQ(density_standard_from_T(pdf_T, XVec({-0.1, -0.2})).value, 0.0);
}

TEST(Density, ClosedFormIntegratesToOneOnMidpointGrid) {
  // grid aligned with the kinks z1 = 0 and z2 = 0; cells inside L only
  const double h = 0.02, lo = -30.0, hi = 30.0;
  const int n = static_cast<int>((hi - lo) / h);
  double mass = 0.0;
  std::vector<double> z(2);
  for (int i = 0; i < n; ++i) {
    z[0] = lo + h * (i + 0.5);
    for (int j = 0; j < n; ++j) {
      z[1] = lo + h * (j + 0.5);
      mass += logistic_mgp_density(z, 2.0);
    }
  }
  EXPECT_NEAR(mass * h * h, 1.0, 1e-3);
}

TEST(Density, NoLebesgueDensityRaises) {
  auto point = from_U([](RngStream&, std::span<double> out) { out[0] = 0.0; out[1] = -1.0; }, 2,
                      tilt::Rejection{0.0});
  EXPECT_THROW(density_standard(point, XVec({1.0, 0.5})), NotAbsolutelyContinuous);
  EXPECT_THROW(density_standard(asymptotic_independence({0.5, 0.5}), XVec({1.0, 0.5})), NotAbsolutelyContinuous);
  EXPECT_THROW(density_standard(complete_dependence(2), XVec({1.0, 0.5})), NotAbsolutelyContinuous);
}

TEST(Density, URouteMatchesHuslerReissClosedForm) {
  const auto p = hr_params();
  const auto gen = hr_generator(p);
  const auto& info = gen.info();
  RngStream rng(8);
  for (int k = 0; k < 20; ++k) {
    const XVec z({-2.0 + 5.0 * rng.uniform(), -2.0 + 5.0 * rng.uniform()});
    const double closed = hr_mgp_density(z, p);
    const double quad = density_standard_from_U(*info.density_U, *info.norm_const, z).value;
    if (closed == 0.0) {
      EXPECT_EQ(quad, 0.0);
    } else {
      EXPECT_NEAR(quad / closed, 1.0, 1e-6) << z[0] << "," << z[1];
    }
  }
}

TEST(Density, GeneralMarginsIntegrateToOne) {
  MgpModel model(MarginParams({1.0, 2.0}, {0.1, -0.1}), logistic_generator({2.0, 2}));
  const DensityFn std_pdf = [](std::span<const double> z) { return logistic_mgp_density(z, 2.0); };
  const double mass = integrate_2d(
      [&](double y1, double y2) {
        const std::vector<double> y{y1, y2};
        return density(model, y, std_pdf);
      },
      -10.0, pos_inf, {0.0}, [](double y1) { return std::pair{y1 > 0.0 ? -30.0 : 0.0, 20.0}; },
      [](double) { return std::vector<double>{0.0}; }, Composite(48));
  EXPECT_NEAR(mass, 1.0, 1e-3);
}

TEST(Density, HistogramAgreesWithClosedForm) {
  const auto p = hr_params();
  const auto gen = hr_generator(p);
  const auto& pdf = *gen.info().density_Z;
  RngStream rng(9);
  const std::size_t n = 100'000;
  const XMatrix z = sample_standard(gen, rng, n);

  const double lo = -1.5, w = 0.5;
  const int k = 10;
  std::vector<double> obs, prob;
  std::vector<int> cell_of(k * k, -1);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      const double a0 = lo + w * a, b0 = lo + w * b;
      if (a0 + w <= 0.0 && b0 + w <= 0.0) continue;
      const double pr = integrate_2d(
          [&](double z1, double z2) {
            const std::vector<double> v{z1, z2};
            return pdf(v);
          },
          a0, a0 + w, {0.0}, [&](double) { return std::pair{b0, b0 + w}; },
          [](double z1) { return std::vector<double>{0.0, z1}; }, Composite(4));
      cell_of[a * k + b] = static_cast<int>(prob.size());
      prob.push_back(pr);
      obs.push_back(0.0);
    }
  }
  double inside = 0.0;
  for (double q : prob) inside += q;
  prob.push_back(1.0 - inside);
  obs.push_back(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int a = static_cast<int>(std::floor((z(i, 0) - lo) / w));
    const int b = static_cast<int>(std::floor((z(i, 1) - lo) / w));
    const bool in = a >= 0 && a < k && b >= 0 && b < k;
    obs[in ? cell_of[a * k + b] : obs.size() - 1] += 1.0;
  }
  EXPECT_GT(stats::chi2_gof(obs, prob).p_value, 1e-3);
}

TEST(MarginalTail, LogisticMarginsAreEqual) {
  const auto gen = logistic_generator({2.0, 2});
  RngStream rng(10);
  const Estimate t = marginal_tail(gen, 1, 0.5, rng);
  EXPECT_NEAR(t.value, std::exp(-0.5) / std::sqrt(2.0), 1e-15);

  const std::size_t n = 200'000;
  const XMatrix z = sample_standard(gen, rng, n);
  double hits = 0.0;
  for (std::size_t i = 0; i < n; ++i) hits += z(i, 1) > 0.5 ? 1.0 : 0.0;
  const double q = t.value;
  EXPECT_NEAR(hits / n, q, 4.0 * std::sqrt(q * (1 - q) / n));

  EXPECT_THROW(marginal_tail(gen, 2, 0.5, rng), DimensionError);
  EXPECT_THROW(marginal_tail(gen, 0, -1.0, rng), DomainError);
}

TEST(MarginalTail, MonteCarloWhenNoExactMeans) {
  const auto gen = from_T([](RngStream& rng, std::span<double> out) { out[0] = rng.normal(); out[1] = rng.normal(); }, 2);
  RngStream rng(11);
  const Estimate t = marginal_tail(gen, 0, 0.0, rng, 400'000);
  const double oracle = 0.5 + std::exp(1.0) * stats::normal_cdf(-std::sqrt(2.0));
  EXPECT_NEAR(t.value, oracle, 4.0 * t.std_error);
  EXPECT_GT(t.std_error, 0.0);
}
