#pragma once

// Goodness-of-fit and two-sample machinery used by the invariant checks:
// KS, chi-square, a sliced energy-distance permutation test and a
// distance-correlation permutation test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "mgpx/core.hpp"

namespace mgpx::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df = 0.0;
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

/// Upper tail of the chi-square distribution.
inline double chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

/// Kolmogorov limiting survival function P(K > t).
inline double kolmogorov_sf(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

/// One-sample KS statistic sup |F_n - F| (sample is sorted in place).
inline double ks_statistic(std::vector<double>& sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline TestResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  const double d = ks_statistic(sample, cdf);
  const double rn = std::sqrt(static_cast<double>(sample.size()));
  return {d, kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d), 0.0};
}

/// Two-sample KS with the asymptotic p-value (conservative under ties).
inline TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d), 0.0};
}

/// Pearson chi-square goodness of fit; expected are probabilities summing to 1.
inline TestResult chi2_gof(const std::vector<double>& observed, const std::vector<double>& expected_p,
                           std::size_t fitted_params = 0) {
  require_same_dim(observed.size(), expected_p.size(), "chi2_gof");
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  double stat = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double e = n * expected_p[k];
    if (e <= 0.0) {
      if (observed[k] > 0.0) return {std::numeric_limits<double>::infinity(), 0.0, 0.0};
      continue;
    }
    stat += (observed[k] - e) * (observed[k] - e) / e;
  }
  const double df = static_cast<double>(observed.size()) - 1.0 - static_cast<double>(fitted_params);
  if (df < 1.0) throw DomainError("chi2_gof: fewer than two usable cells");
  return {stat, chi2_sf(stat, df), df};
}

/// Chi-square test of homogeneity for two samples of cell counts.
inline TestResult chi2_homogeneity(const std::vector<double>& a, const std::vector<double>& b) {
  require_same_dim(a.size(), b.size(), "chi2_homogeneity");
  const double na = std::accumulate(a.begin(), a.end(), 0.0);
  const double nb = std::accumulate(b.begin(), b.end(), 0.0);
  double stat = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double tot = a[k] + b[k];
    if (tot == 0.0) continue;
    ++used;
    const double ea = tot * na / (na + nb), eb = tot * nb / (na + nb);
    stat += (a[k] - ea) * (a[k] - ea) / ea + (b[k] - eb) * (b[k] - eb) / eb;
  }
  if (used < 2) throw DomainError("chi2_homogeneity: fewer than two occupied cells");
  const double df = static_cast<double>(used) - 1.0;
  return {stat, chi2_sf(stat, df), df};
}

inline Estimate mean_se(const std::vector<double>& x) {
  if (x.empty()) throw DomainError("mean_se: empty sample");
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double var = x.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {m, std::sqrt(var / n), {}};
}

/// Standard error of a (possibly nonlinear) estimator by batch means: the
/// estimator is applied to `batches` contiguous slices of [0, n).
inline double batch_means_se(std::size_t n, std::size_t batches,
                             const std::function<double(std::size_t, std::size_t)>& estimator) {
  if (batches < 2 || n < batches) return 0.0;
  std::vector<double> est(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    est[b] = estimator(b * n / batches, (b + 1) * n / batches);
  }
  return mean_se(est).std_error;
}

inline double sample_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  require_same_dim(x.size(), y.size(), "sample_correlation");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

/// Bounded monotone map used before distance-based tests so that -inf
/// components and heavy tails are harmless: x -> tanh(x / 2) in [-1, 1).
inline double compress(double x) { return std::tanh(0.5 * x); }

namespace detail {

inline std::vector<std::vector<double>> projection_directions(std::size_t dim, std::size_t count) {
  std::vector<std::vector<double>> dirs;
  if (dim == 1) return {{1.0}};
  if (dim == 2) {
    const double pi = std::acos(-1.0);
    for (std::size_t k = 0; k < count; ++k) {
      const double a = pi * static_cast<double>(k) / static_cast<double>(count);
      dirs.push_back({std::cos(a), std::sin(a)});
    }
    return dirs;
  }
  for (std::size_t j = 0; j < dim && dirs.size() < count; ++j) {
    std::vector<double> e(dim, 0.0);
    e[j] = 1.0;
    dirs.push_back(e);
  }
  RngStream rng(0x9e3779b97f4a7c15ULL, dim);
  while (dirs.size() < count) {
    std::vector<double> v(dim);
    double norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    for (double& x : v) x /= std::sqrt(norm);
    dirs.push_back(v);
  }
  return dirs;
}

}  // namespace detail

/// Two-sample test on the sliced energy distance: the one-dimensional energy
/// statistic averaged over fixed projection directions, computed on
/// compress()-ed coordinates, with a label-permutation p-value.
inline TestResult energy_two_sample(const XMatrix& a, const XMatrix& b, RngStream& rng,
                                    std::size_t permutations = 999, std::size_t directions = 8) {
  require_same_dim(a.cols, b.cols, "energy_two_sample");
  if (a.rows < 2 || b.rows < 2) throw DomainError("energy_two_sample: samples too small");
  const std::size_t d = a.cols;
  const std::size_t n1 = a.rows, n2 = b.rows, n = n1 + n2;
  const auto dirs = detail::projection_directions(d, directions);
  const std::size_t k_dirs = dirs.size();

  // sorted projections and the pooled index of each sorted position
  std::vector<std::vector<double>> values(k_dirs, std::vector<double>(n));
  std::vector<std::vector<std::uint32_t>> order(k_dirs, std::vector<std::uint32_t>(n));
  std::vector<double> total(k_dirs, 0.0);
  std::vector<double> proj(n);
  for (std::size_t k = 0; k < k_dirs; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      auto row = i < n1 ? a.row(i) : b.row(i - n1);
      double p = 0.0;
      for (std::size_t j = 0; j < d; ++j) p += dirs[k][j] * compress(row[j]);
      proj[i] = p;
    }
    std::iota(order[k].begin(), order[k].end(), 0u);
    std::sort(order[k].begin(), order[k].end(),
              [&](std::uint32_t x, std::uint32_t y) { return proj[x] < proj[y]; });
    double cnt = 0.0, sum = 0.0, t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = proj[order[k][i]];
      values[k][i] = v;
      t += cnt * v - sum;
      cnt += 1.0;
      sum += v;
    }
    total[k] = t;
  }

  const double f1 = static_cast<double>(n1), f2 = static_cast<double>(n2);
  auto statistic = [&](const std::vector<std::uint8_t>& in_a) {
    double e = 0.0;
    for (std::size_t k = 0; k < k_dirs; ++k) {
      double ca = 0.0, sa = 0.0, wa = 0.0, cb = 0.0, sb = 0.0, wb = 0.0;
      const auto& vk = values[k];
      const auto& ok = order[k];
      for (std::size_t i = 0; i < n; ++i) {
        const double v = vk[i];
        if (in_a[ok[i]]) {
          wa += ca * v - sa;
          ca += 1.0;
          sa += v;
        } else {
          wb += cb * v - sb;
          cb += 1.0;
          sb += v;
        }
      }
      const double cross = total[k] - wa - wb;
      e += 2.0 * cross / (f1 * f2) - 2.0 * wa / (f1 * f1) - 2.0 * wb / (f2 * f2);
    }
    return (f1 * f2 / static_cast<double>(n)) * e / static_cast<double>(k_dirs);
  };

  std::vector<std::uint8_t> labels(n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n1), 1);
  const double observed = statistic(labels);
  std::size_t at_least = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(labels[i], labels[rng.index(i + 1)]);
    if (statistic(labels) >= observed) ++at_least;
  }
  return {observed, static_cast<double>(at_least + 1) / static_cast<double>(permutations + 1), 0.0};
}

/// Distance-correlation permutation test of independence between a scalar
/// sample x and the rows of y (compress()-ed), on the first m pairs.
inline TestResult dcor_independence(const std::vector<double>& x, const XMatrix& y, RngStream& rng,
                                    std::size_t m = 800, std::size_t permutations = 999) {
  require_same_dim(x.size(), y.rows, "dcor_independence");
  m = std::min(m, x.size());
  if (m < 4) throw DomainError("dcor_independence: sample too small");
  auto centered = [m](const std::function<double(std::size_t, std::size_t)>& dist) {
    std::vector<double> a(m * m);
    std::vector<double> rowm(m, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double v = dist(i, j);
        a[i * m + j] = v;
        rowm[i] += v;
      }
      grand += rowm[i];
      rowm[i] /= static_cast<double>(m);
    }
    grand /= static_cast<double>(m * m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) a[i * m + j] += grand - rowm[i] - rowm[j];
    }
    return a;
  };
  std::vector<double> xc(m);
  for (std::size_t i = 0; i < m; ++i) xc[i] = compress(x[i]);
  const auto ax = centered([&](std::size_t i, std::size_t j) { return std::abs(xc[i] - xc[j]); });
  const auto by = centered([&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < y.cols; ++k) {
      const double dv = compress(y(i, k)) - compress(y(j, k));
      s += dv * dv;
    }
    return std::sqrt(s);
  });
  auto dcov = [&](const std::vector<std::uint32_t>& perm) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = ax.data() + static_cast<std::size_t>(perm[i]) * m;
      const double* brow = by.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) s += arow[perm[j]] * brow[j];
    }
    return s / static_cast<double>(m * m);
  };
  std::vector<std::uint32_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0u);
  const double observed = dcov(perm);
  std::size_t at_least = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    for (std::size_t i = m - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
    if (dcov(perm) >= observed) ++at_least;
  }
  double vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < m * m; ++i) {
    vx += ax[i] * ax[i];
    vy += by[i] * by[i];
  }
  const double denom = std::sqrt(vx * vy) / static_cast<double>(m * m);
  const double dcor = denom > 0.0 ? std::sqrt(std::max(0.0, observed) / denom) : 0.0;
  return {dcor, static_cast<double>(at_least + 1) / static_cast<double>(permutations + 1), 0.0};
}

/// log of the Poisson probability mass.
inline double poisson_log_pmf(std::size_t k, double lambda) {
  if (lambda == 0.0) return k == 0 ? 0.0 : neg_inf;
  return static_cast<double>(k) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0);
}

}  // namespace mgpx::stats
