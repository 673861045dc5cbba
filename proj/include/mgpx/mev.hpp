#pragma once

// Multivariate extreme value distributions G = exp(-l(-log G_1, ...)),
// max-stability checks, and the block-maxima convergence experiment.

#include <array>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mgpx/core.hpp"
#include "mgpx/parallel.hpp"
#include "mgpx/parametric.hpp"
#include "mgpx/stats.hpp"
#include "mgpx/tailmeasure.hpp"

namespace mgpx {

struct GevMargin {
  double mu = 0.0;
  double sigma = 1.0;
  double xi = 0.0;

  static GevMargin gumbel() { return {0.0, 1.0, 0.0}; }
  static GevMargin unit_frechet() { return {1.0, 1.0, 1.0}; }

  [[nodiscard]] double cdf(double x) const { return gev_cdf(x, mu, sigma, xi); }
  /// Quantile at level p in (0, 1).
  [[nodiscard]] double quantile(double p) const {
    const double t = -std::log(p);
    if (std::abs(xi) < xi_zero_tol) return mu - sigma * std::log(t);
    return mu + sigma * (std::pow(t, -xi) - 1.0) / xi;
  }
};

struct MevModel {
  std::vector<GevMargin> margins;
  TailFunctions tail;

  MevModel(std::vector<GevMargin> m, TailFunctions t) : margins(std::move(m)), tail(std::move(t)) {
    require_same_dim(margins.size(), tail.dim(), "MevModel");
    for (const auto& g : margins) {
      if (!(g.sigma > 0.0) || !std::isfinite(g.mu) || !std::isfinite(g.xi)) {
        throw DomainError("MevModel: invalid GEV margin");
      }
    }
  }
  [[nodiscard]] std::size_t dim() const { return margins.size(); }
};

/// G(x) = exp(-l(-log G_1(x_1), ..., -log G_D(x_D))); x_j = +inf drops the
/// j-th constraint.
inline double mev_cdf(const MevModel& model, std::span<const double> x) {
  require_same_dim(x.size(), model.dim(), "mev_cdf");
  std::vector<double> y(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (std::isnan(x[j])) throw DomainError("mev_cdf: NaN argument");
    const double g = model.margins[j].cdf(x[j]);
    if (g == 0.0) return 0.0;
    y[j] = -std::log(g);
  }
  return std::exp(-model.tail.ell(y));
}

/// G(y) = exp(-V(y)) with unit-Frechet margins.
inline double mev_cdf_frechet(const TailFunctions& tail, std::span<const double> y) {
  return std::exp(-exponent_function(tail, y));
}

/// Location-scale constants with G^k(a_k x + b_k) = G(x):
/// a = k^xi, b = mu (1 - k^xi) + sigma (k^xi - 1) / xi, and a = 1,
/// b = sigma log k at xi = 0.
struct Recentering {
  std::vector<double> a;
  std::vector<double> b;
};

inline Recentering max_stability_constants(const std::vector<GevMargin>& margins, double k) {
  if (!(k >= 1.0)) throw DomainError("max_stability_constants: k must be at least 1");
  Recentering r;
  for (const auto& g : margins) {
    if (std::abs(g.xi) < xi_zero_tol) {
      r.a.push_back(1.0);
      r.b.push_back(g.sigma * std::log(k));
    } else {
      const double kx = std::pow(k, g.xi);
      r.a.push_back(kx);
      r.b.push_back(g.mu * (1.0 - kx) + g.sigma * (kx - 1.0) / g.xi);
    }
  }
  return r;
}

/// max over the grid of |G(a x + b)^k - G(x)| for an arbitrary distribution function.
inline double max_stability_deviation(const std::function<double(std::span<const double>)>& G,
                                      const Recentering& r, int k, const std::vector<std::vector<double>>& grid) {
  if (k < 2) throw DomainError("max_stability_deviation: k must be at least 2");
  double dev = 0.0;
  for (const auto& x : grid) {
    require_same_dim(x.size(), r.a.size(), "max_stability_deviation");
    std::vector<double> xs(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) xs[j] = r.a[j] * x[j] + r.b[j];
    dev = std::max(dev, std::abs(std::pow(G(xs), k) - G(x)));
  }
  return dev;
}

inline double max_stability_check(const MevModel& model, int k, const std::vector<std::vector<double>>& grid) {
  return max_stability_deviation([&](std::span<const double> x) { return mev_cdf(model, x); },
                                 max_stability_constants(model.margins, k), k, grid);
}

/// Tensor grid of marginal quantiles at the given levels.
inline std::vector<std::vector<double>> quantile_grid(const std::vector<GevMargin>& margins,
                                                      const std::vector<double>& levels) {
  std::vector<std::vector<double>> grid{{}};
  for (const auto& g : margins) {
    std::vector<std::vector<double>> next;
    for (const auto& partial : grid) {
      for (double p : levels) {
        auto x = partial;
        x.push_back(g.quantile(p));
        next.push_back(std::move(x));
      }
    }
    grid = std::move(next);
  }
  return grid;
}

inline std::vector<double> decile_levels() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

/// Phi_2(a, b; rho) by Plackett's identity
///   Phi(a) Phi(b) + (1 / 2pi) int_0^rho exp(-(a^2 - 2rab + b^2) / (2(1 - r^2))) / sqrt(1 - r^2) dr.
inline double bivariate_normal_cdf(double a, double b, double rho) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("bivariate_normal_cdf: |rho| must be below 1");
  if (a == neg_inf || b == neg_inf) return 0.0;
  if (a == pos_inf) return stats::normal_cdf(b);
  if (b == pos_inf) return stats::normal_cdf(a);
  auto f = [a, b](double r) {
    const double s = 1.0 - r * r;
    return std::exp(-(a * a - 2.0 * r * a * b + b * b) / (2.0 * s)) / std::sqrt(s);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double integral = rho >= 0.0 ? GK::integrate(f, 0.0, rho, 10, 1e-13) : -GK::integrate(f, rho, 0.0, 10, 1e-13);
  return stats::normal_cdf(a) * stats::normal_cdf(b) + integral / (2.0 * std::numbers::pi);
}

/// Bivariate Gaussian copula with GEV margins (not max-stable for 0 < rho < 1).
inline double gaussian_copula_cdf(std::span<const double> x, const std::vector<GevMargin>& margins, double rho) {
  require_same_dim(x.size(), 2, "gaussian_copula_cdf");
  require_same_dim(margins.size(), 2, "gaussian_copula_cdf");
  double q[2];
  for (std::size_t j = 0; j < 2; ++j) {
    const double g = margins[j].cdf(x[j]);
    if (g == 0.0) return 0.0;
    q[j] = g == 1.0 ? pos_inf : stats::normal_quantile(g);
  }
  return bivariate_normal_cdf(q[0], q[1], rho);
}

// ---------------------------------------------------------------------------
// Block maxima

/// X = E_0 + U with E_0 unit exponential.
inline DrawFn xeu_sampler(DrawFn sampler_U) {
  return [u = std::move(sampler_U)](RngStream& rng, std::span<double> out) {
    u(rng, out);
    const double e = rng.exponential();
    for (double& v : out) v += e;
  };
}

/// X = E_0 + U with U ~ N(-diag(Sigma)/2, Sigma), so E[e^{U_j}] = 1.
inline DrawFn gaussian_xeu_sampler(const Eigen::MatrixXd& Sigma) {
  HuslerReissParams p(Eigen::VectorXd(-0.5 * Sigma.diagonal()), Sigma);
  const Eigen::LLT<Eigen::MatrixXd> llt(p.Sigma);
  const Eigen::MatrixXd L = llt.matrixL();
  return xeu_sampler([mean = p.mu, L](RngStream& rng, std::span<double> out) { gaussian_draw(rng, mean, L, out); });
}

struct BlockMaximaResult {
  std::size_t block_size = 0;
  std::size_t reps = 0;
  std::vector<std::vector<double>> grid;
  std::vector<double> empirical;
  std::vector<double> limit;
  double sup_deviation = 0.0;
};

/// Empirical CDF of M_n - log n over `reps` blocks of n draws, against
/// G(x) = exp(-l(e^{-x})) on the Gumbel decile grid.
inline BlockMaximaResult block_maxima_experiment(const DrawFn& sampler_E, const TailFunctions& tail, std::size_t n,
                                                 std::size_t reps, RngStream& rng) {
  if (n == 0 || reps == 0) throw DomainError("block_maxima_experiment: n and reps must be positive");
  const std::size_t d = tail.dim();
  BlockMaximaResult out;
  out.block_size = n;
  out.reps = reps;
  out.grid = quantile_grid(std::vector<GevMargin>(d, GevMargin::gumbel()), decile_levels());
  const std::size_t g = out.grid.size();
  const double shift = std::log(static_cast<double>(n));
  const auto counts = parallel::accumulate(
      rng, reps, g,
      [&](RngStream& local, double* acc) {
        std::vector<double> m(d, neg_inf), x(d);
        for (std::size_t i = 0; i < n; ++i) {
          sampler_E(local, x);
          for (std::size_t j = 0; j < d; ++j) m[j] = std::max(m[j], x[j]);
        }
        for (double& v : m) v -= shift;
        for (std::size_t k = 0; k < g; ++k) {
          bool below = true;
          for (std::size_t j = 0; j < d && below; ++j) below = m[j] <= out.grid[k][j];
          if (below) acc[k] += 1.0;
        }
      },
      64);
  out.empirical.resize(g);
  out.limit.resize(g);
  std::vector<double> y(d);
  for (std::size_t k = 0; k < g; ++k) {
    out.empirical[k] = counts[k] / static_cast<double>(reps);
    for (std::size_t j = 0; j < d; ++j) y[j] = std::exp(-out.grid[k][j]);
    out.limit[k] = std::exp(-tail.ell(y));
    out.sup_deviation = std::max(out.sup_deviation, std::abs(out.empirical[k] - out.limit[k]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Three views of "no exceedance"

/// (M_n <= u, no row exceeds u, #rows in NotBelow(u) == 0). The three
/// entries always agree; they are computed independently as a check.
inline std::array<bool, 3> three_views_equivalence(const XMatrix& sample, std::span<const double> u) {
  require_same_dim(sample.cols, u.size(), "three_views_equivalence");
  std::vector<double> m(sample.cols, neg_inf);
  for (std::size_t i = 0; i < sample.rows; ++i) {
    for (std::size_t j = 0; j < sample.cols; ++j) m[j] = std::max(m[j], sample(i, j));
  }
  bool maxima_below = true;
  for (std::size_t j = 0; j < u.size(); ++j) maxima_below = maxima_below && m[j] <= u[j];

  bool all_rows_below = true;
  for (std::size_t i = 0; i < sample.rows && all_rows_below; ++i) {
    auto row = sample.row(i);
    all_rows_below = std::equal(row.begin(), row.end(), u.begin(), [](double x, double v) { return x <= v; });
  }

  const Region fail = Region::not_below(std::vector<double>(u.begin(), u.end()));
  std::size_t count = 0;
  for (std::size_t i = 0; i < sample.rows; ++i) count += fail.contains(sample.row(i)) ? 1 : 0;

  return {maxima_below, all_rows_below, count == 0};
}

}  // namespace mgpx
