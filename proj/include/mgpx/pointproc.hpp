#pragma once

// Counts of sample points in translated failure regions B + log n and their
// Poisson limit.

#include <cmath>
#include <string>
#include <vector>

#include "mgpx/core.hpp"
#include "mgpx/generators.hpp"
#include "mgpx/parallel.hpp"
#include "mgpx/stats.hpp"

namespace mgpx {

/// E = Z + log Lambda(L) for Z standard MGP with generator `gen`. Then
/// P(E in B + t) = e^{-t} Lambda(B) exactly whenever B + t - log Lambda(L)
/// lies in L.
inline DrawFn mgp_e_sampler(const SGenerator& gen, double lambda_L) {
  if (!(lambda_L >= 1.0 - 1e-12)) throw DomainError("mgp_e_sampler: Lambda(L) must be at least 1");
  const double c = std::log(lambda_L);
  return [gen, c](RngStream& rng, std::span<double> out) {
    gen.draw(rng, out);
    const double e = rng.exponential() + c;
    for (double& v : out) v += e;
  };
}

/// For each replication, the number of n draws of E that fall in B_r + log n,
/// for every region B_r; result[r][rep].
inline std::vector<std::vector<double>> simulate_counts(const DrawFn& sampler_E, std::size_t dim,
                                                        const std::vector<Region>& regions, std::size_t n,
                                                        std::size_t reps, RngStream& rng) {
  if (n == 0 || reps == 0) throw DomainError("simulate_counts: n and reps must be positive");
  const double shift = std::log(static_cast<double>(n));
  std::vector<Region> moved;
  for (const auto& b : regions) {
    require_same_dim(b.dim(), dim, "simulate_counts");
    if (!b.bounded_away()) throw DomainError("simulate_counts: region is not bounded away from -inf");
    moved.push_back(b.translated(shift));
  }
  std::vector<std::vector<double>> counts(regions.size(), std::vector<double>(reps, 0.0));
  parallel::for_ranges(
      rng, reps,
      [&](RngStream& local, std::size_t b, std::size_t e) {
        std::vector<double> x(dim);
        for (std::size_t rep = b; rep < e; ++rep) {
          for (std::size_t i = 0; i < n; ++i) {
            sampler_E(local, x);
            for (std::size_t r = 0; r < moved.size(); ++r) {
              if (moved[r].contains(x)) counts[r][rep] += 1.0;
            }
          }
        }
      },
      16);
  return counts;
}

inline std::vector<double> simulate_counts(const DrawFn& sampler_E, std::size_t dim, const Region& B, std::size_t n,
                                           std::size_t reps, RngStream& rng) {
  return simulate_counts(sampler_E, dim, std::vector<Region>{B}, n, reps, rng)[0];
}

/// Pearson chi-square of count frequencies against Poisson(lambda) on the
/// cells {0, 1, 2, 3, >= 4}; cells with expected count below 5 are merged
/// into their neighbour toward the centre.
inline stats::TestResult poisson_limit_check(const std::vector<double>& counts, double lambda) {
  if (counts.empty()) throw DomainError("poisson_limit_check: no counts");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("poisson_limit_check: lambda must be positive");
  std::vector<double> obs(5, 0.0), prob(5, 0.0);
  for (double c : counts) {
    if (c < 0.0 || c != std::floor(c)) throw DomainError("poisson_limit_check: counts must be nonnegative integers");
    obs[std::min<std::size_t>(4, static_cast<std::size_t>(c))] += 1.0;
  }
  double head = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    prob[k] = std::exp(stats::poisson_log_pmf(k, lambda));
    head += prob[k];
  }
  prob[4] = std::max(0.0, 1.0 - head);
  const double n = static_cast<double>(counts.size());
  while (obs.size() > 2 && prob.back() * n < 5.0) {
    obs[obs.size() - 2] += obs.back();
    prob[prob.size() - 2] += prob.back();
    obs.pop_back();
    prob.pop_back();
  }
  while (obs.size() > 2 && prob.front() * n < 5.0) {
    obs[1] += obs[0];
    prob[1] += prob[0];
    obs.erase(obs.begin());
    prob.erase(prob.begin());
  }
  return stats::chi2_gof(obs, prob);
}

/// Total variation distance between the empirical count law and Poisson(lambda).
inline double count_tv_distance(const std::vector<double>& counts, double lambda) {
  if (counts.empty()) throw DomainError("count_tv_distance: no counts");
  std::size_t kmax = 0;
  for (double c : counts) kmax = std::max(kmax, static_cast<std::size_t>(c));
  std::vector<double> freq(kmax + 1, 0.0);
  for (double c : counts) freq[static_cast<std::size_t>(c)] += 1.0 / static_cast<double>(counts.size());
  double tv = 0.0, covered = 0.0;
  for (std::size_t k = 0; k <= kmax; ++k) {
    const double p = std::exp(stats::poisson_log_pmf(k, lambda));
    covered += p;
    tv += std::abs(freq[k] - p);
  }
  tv += std::max(0.0, 1.0 - covered);
  return 0.5 * tv;
}

/// Number of wins among n independent Bernoulli(p) trials, per replication,
/// drawn by geometric skipping between successes.
inline std::vector<double> lottery_counts(std::size_t n, double p, std::size_t reps, RngStream& rng) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("lottery_counts: p must lie in (0, 1)");
  const double log_q = std::log1p(-p);
  std::vector<double> out(reps, 0.0);
  parallel::for_ranges(rng, reps, [&](RngStream& local, std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      double pos = 0.0;  // trials used so far
      double wins = 0.0;
      for (;;) {
        pos += std::floor(std::log(local.uniform()) / log_q) + 1.0;
        if (pos > static_cast<double>(n)) break;
        wins += 1.0;
      }
      out[r] = wins;
    }
  });
  return out;
}

struct CorrelationReport {
  double correlation = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  [[nodiscard]] bool covers_zero() const { return ci_low <= 0.0 && 0.0 <= ci_high; }
};

/// True when some probe point lies in both regions.
inline bool regions_overlap(const Region& a, const Region& b) {
  require_same_dim(a.dim(), b.dim(), "regions_overlap");
  std::vector<double> vals{neg_inf};
  for (int k = -40; k <= 40; ++k) vals.push_back(0.25 * k);
  auto add_bounds = [&](const Region& r, auto&& self) -> void {
    std::visit(
        [&](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Region::NotBelow>) {
            for (double v : k.u) {
              if (std::isfinite(v)) vals.insert(vals.end(), {v, std::nextafter(v, pos_inf)});
            }
          } else if constexpr (std::is_same_v<T, Region::Box>) {
            for (double v : k.lo) if (std::isfinite(v)) vals.push_back(v);
            for (double v : k.hi) if (std::isfinite(v)) vals.push_back(v);
          } else {
            for (const auto& p : k.parts) self(p, self);
          }
        },
        r.kind());
  };
  add_bounds(a, add_bounds);
  add_bounds(b, add_bounds);
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  const std::size_t d = a.dim();
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  for (;;) {
    for (std::size_t j = 0; j < d; ++j) x[j] = vals[idx[j]];
    if ((x != std::vector<double>(d, neg_inf)) && a.contains(x) && b.contains(x)) return true;
    std::size_t j = 0;
    while (j < d && ++idx[j] == vals.size()) idx[j++] = 0;
    if (j == d) return false;
  }
}

/// Correlation of paired counts N_n(B1), N_n(B2) with a 99.9% Fisher-z interval.
inline CorrelationReport disjoint_independence_check(const DrawFn& sampler_E, std::size_t dim, const Region& B1,
                                                     const Region& B2, std::size_t n, std::size_t reps,
                                                     RngStream& rng, bool check_disjoint = true) {
  if (check_disjoint && regions_overlap(B1, B2)) {
    throw DomainError("disjoint_independence_check: regions overlap on the probe grid");
  }
  if (reps < 4) throw DomainError("disjoint_independence_check: at least 4 replications required");
  const auto c = simulate_counts(sampler_E, dim, {B1, B2}, n, reps, rng);
  CorrelationReport rep;
  rep.correlation = stats::sample_correlation(c[0], c[1]);
  if (std::isnan(rep.correlation)) throw DomainError("disjoint_independence_check: constant counts");
  const double z = std::atanh(std::clamp(rep.correlation, -0.999999, 0.999999));
  const double half = 3.2905 / std::sqrt(static_cast<double>(reps) - 3.0);
  rep.ci_low = std::tanh(z - half);
  rep.ci_high = std::tanh(z + half);
  return rep;
}

}  // namespace mgpx
