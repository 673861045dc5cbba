#pragma once

// Dependence generators: random vectors S with max S = 0 that fix the
// dependence structure of a standard MGP vector Z = E + S.

#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mgpx/core.hpp"
#include "mgpx/parallel.hpp"

namespace mgpx {

/// Writes one D-vector draw into `out`.
using DrawFn = std::function<void(RngStream&, std::span<double>)>;
/// A Lebesgue density on R^D.
using DensityFn = std::function<double(std::span<const double>)>;

enum class GeneratorTag { FromT, FromU, CompleteDep, AsyIndep, EmpiricalResample };

inline const char* to_string(GeneratorTag t) {
  switch (t) {
    case GeneratorTag::FromT: return "from_T";
    case GeneratorTag::FromU: return "from_U";
    case GeneratorTag::CompleteDep: return "complete_dependence";
    case GeneratorTag::AsyIndep: return "asymptotic_independence";
    case GeneratorTag::EmpiricalResample: return "empirical";
  }
  return "?";
}

namespace tilt {

/// Exact: accept u with probability exp(max u - q_max). Requires max U <= q_max.
struct Rejection {
  double q_max = 0.0;
};

/// Approximate: a pool of U draws resampled with weights exp(max u).
struct ImportanceResample {
  std::size_t pool = 1'000'000;
  std::uint64_t seed = 0x6d677078;
};

/// Exact for any U whose exp(U_j)-tilted laws can be sampled: pick j with
/// probability proportional to E[e^{U_j}], draw U from the e^{U_j}-tilted
/// law, accept with probability e^{max U} / sum_k e^{U_k} (at least 1/D).
struct Mixture {
  std::vector<double> margin_means;  // E[e^{U_j}]
  std::function<void(std::size_t j, RngStream&, std::span<double>)> tilted_draw;
};

}  // namespace tilt

using TiltConfig = std::variant<tilt::Rejection, tilt::ImportanceResample, tilt::Mixture>;

/// Optional side data carried by a generator.
struct GeneratorInfo {
  std::string label;
  std::optional<DensityFn> density_T;
  std::optional<DensityFn> density_U;
  std::optional<DensityFn> density_Z;                // closed-form standard MGP density
  std::optional<Estimate> norm_const;                // E[e^{max U}] for density_U
  std::optional<std::vector<double>> margin_means;  // exact E[e^{S_j}]
  bool mass_at_neg_inf = false;                      // known to put mass on S_j = -inf
  std::shared_ptr<const XMatrix> support_rows;       // stored rows of an empirical generator
  double acceptance_rate = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> diagnostics;
};

/// Sampler for S (max S = 0) plus whatever density data the construction
/// route provides. Immutable and cheap to copy; safe to share across threads
/// as long as each thread draws from its own RngStream.
class SGenerator {
 public:
  SGenerator(GeneratorTag tag, std::size_t dim, DrawFn draw_s, GeneratorInfo info = {})
      : s_(std::make_shared<const State>(State{tag, dim, std::move(draw_s), std::move(info)})) {
    if (dim == 0) throw DimensionError("SGenerator: dimension must be at least 1");
  }

  [[nodiscard]] std::size_t dim() const { return s_->dim; }
  [[nodiscard]] GeneratorTag tag() const { return s_->tag; }
  [[nodiscard]] const GeneratorInfo& info() const { return s_->info; }

  /// One draw of S; every draw is checked for max S == 0.
  void draw(RngStream& rng, std::span<double> out) const {
    require_same_dim(out.size(), s_->dim, "SGenerator::draw");
    s_->draw(rng, out);
    double m = neg_inf;
    for (double v : out) {
      if (std::isnan(v) || v == pos_inf) throw GenerationError("SGenerator: invalid component");
      m = std::max(m, v);
    }
    if (m != 0.0) throw GenerationError("SGenerator: draw violates max S = 0");
  }

  XVec draw(RngStream& rng) const {
    std::vector<double> v(s_->dim);
    draw(rng, v);
    return XVec(std::move(v));
  }

  /// Copy with replaced side data (sampler shared).
  [[nodiscard]] SGenerator with_info(GeneratorInfo info) const {
    return SGenerator(s_->tag, s_->dim, s_->draw, std::move(info));
  }

 private:
  struct State {
    GeneratorTag tag;
    std::size_t dim;
    DrawFn draw;
    GeneratorInfo info;
  };
  std::shared_ptr<const State> s_;
};

namespace detail {

inline double shift_by_max(std::span<double> v) {
  double q = neg_inf;
  for (double x : v) q = std::max(q, x);
  if (q == neg_inf) throw GenerationError("generator: draw with every component at -inf");
  for (double& x : v) x -= q;  // -inf stays -inf
  return q;
}

}  // namespace detail

/// S = T - max T.
inline SGenerator from_T(DrawFn sampler_T, std::size_t dim, std::optional<DensityFn> pdf_T = {},
                         std::string label = "from_T") {
  GeneratorInfo info;
  info.label = std::move(label);
  info.density_T = std::move(pdf_T);
  auto draw = [t = std::move(sampler_T)](RngStream& rng, std::span<double> out) {
    t(rng, out);
    detail::shift_by_max(out);
  };
  return SGenerator(GeneratorTag::FromT, dim, std::move(draw), std::move(info));
}

/// S distributed as U - max U under the measure tilted by e^{max U}.
inline SGenerator from_U(DrawFn sampler_U, std::size_t dim, TiltConfig cfg,
                         std::optional<DensityFn> pdf_U = {}, std::optional<Estimate> norm = {},
                         std::string label = "from_U") {
  GeneratorInfo info;
  info.label = std::move(label);
  info.density_U = std::move(pdf_U);
  info.norm_const = std::move(norm);

  if (auto* rej = std::get_if<tilt::Rejection>(&cfg)) {
    const double q_max = rej->q_max;
    if (!std::isfinite(q_max)) throw DomainError("from_U: rejection bound q_max must be finite");
    auto draw = [u = std::move(sampler_U), q_max](RngStream& rng, std::span<double> out) {
      for (;;) {
        u(rng, out);
        const double q = detail::shift_by_max(out);
        if (q > q_max) {
          throw GenerationError("from_U: observed max U = " + std::to_string(q) +
                                " exceeds the rejection bound " + std::to_string(q_max));
        }
        if (rng.uniform() < std::exp(q - q_max)) return;
      }
    };
    return SGenerator(GeneratorTag::FromU, dim, std::move(draw), std::move(info));
  }

  if (auto* mix = std::get_if<tilt::Mixture>(&cfg)) {
    if (mix->margin_means.size() != dim) throw DimensionError("from_U: mixture weights dimension");
    std::vector<double> cum(dim);
    double total = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      if (!(mix->margin_means[j] > 0.0) || !std::isfinite(mix->margin_means[j])) {
        throw DomainError("from_U: E[e^{U_j}] must be finite and positive");
      }
      total += mix->margin_means[j];
      cum[j] = total;
    }
    for (double& c : cum) c /= total;
    auto draw = [tilted = mix->tilted_draw, cum](RngStream& rng, std::span<double> out) {
      for (;;) {
        const double v = rng.uniform();
        std::size_t j = 0;
        while (j + 1 < cum.size() && v > cum[j]) ++j;
        tilted(j, rng, out);
        detail::shift_by_max(out);
        double denom = 0.0;  // sum_k e^{u_k - max u} >= 1
        for (double x : out) denom += std::exp(x);
        if (rng.uniform() * denom <= 1.0) return;
      }
    };
    return SGenerator(GeneratorTag::FromU, dim, std::move(draw), std::move(info));
  }

  const auto& imp = std::get<tilt::ImportanceResample>(cfg);
  if (imp.pool < 1000) throw DomainError("from_U: importance pool must hold at least 1000 draws");
  RngStream rng(imp.seed, 0);
  auto pool = std::make_shared<std::vector<double>>(imp.pool * dim);
  std::vector<double> q(imp.pool);
  std::vector<double> finite_freq(dim, 0.0);
  for (std::size_t i = 0; i < imp.pool; ++i) {
    std::span<double> row(pool->data() + i * dim, dim);
    sampler_U(rng, row);
    for (std::size_t j = 0; j < dim; ++j) finite_freq[j] += row[j] > neg_inf ? 1.0 : 0.0;
    q[i] = detail::shift_by_max(row);
  }
  for (std::size_t j = 0; j < dim; ++j) {
    if (finite_freq[j] == 0.0) throw GenerationError("from_U: U_j = -inf on every pool draw");
  }
  const double qmax = *std::max_element(q.begin(), q.end());
  auto cum = std::make_shared<std::vector<double>>(imp.pool);
  double sw = 0.0, sw2 = 0.0;
  for (std::size_t i = 0; i < imp.pool; ++i) {
    const double w = std::exp(q[i] - qmax);
    sw += w;
    sw2 += w * w;
    (*cum)[i] = sw;
  }
  for (double& c : *cum) c /= sw;
  const double ess = sw * sw / sw2;
  if (ess < static_cast<double>(imp.pool) / 100.0) {
    info.diagnostics.push_back("importance pool degenerate: effective sample size " +
                               std::to_string(ess) + " below pool/100");
  }
  if (!info.norm_const) {
    // E[e^Q] from the same pool
    double m = 0.0, m2 = 0.0;
    for (double qi : q) {
      const double e = std::exp(qi);
      m += e;
      m2 += e * e;
    }
    const double n = static_cast<double>(imp.pool);
    m /= n;
    info.norm_const = Estimate{m, std::sqrt(std::max(0.0, m2 / n - m * m) / n), {}};
  }
  auto draw = [pool, cum, dim](RngStream& rng, std::span<double> out) {
    const double v = rng.uniform();
    auto it = std::lower_bound(cum->begin(), cum->end(), v);
    const std::size_t i =
        std::min<std::size_t>(static_cast<std::size_t>(it - cum->begin()), cum->size() - 1);
    std::copy_n(pool->data() + i * dim, dim, out.begin());
  };
  return SGenerator(GeneratorTag::FromU, dim, std::move(draw), std::move(info));
}

/// S = 0: Z lies on the diagonal.
inline SGenerator complete_dependence(std::size_t dim) {
  GeneratorInfo info;
  info.label = "complete_dependence";
  info.margin_means = std::vector<double>(dim, 1.0);
  return SGenerator(
      GeneratorTag::CompleteDep, dim,
      [](RngStream&, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); },
      std::move(info));
}

/// Exactly one coordinate of S is 0, chosen with probabilities p; the rest are -inf.
inline SGenerator asymptotic_independence(std::vector<double> p) {
  if (p.empty()) throw DimensionError("asymptotic_independence: empty probability vector");
  double total = 0.0;
  for (double pj : p) {
    if (!(pj > 0.0)) throw DomainError("asymptotic_independence: every p_j must be positive");
    total += pj;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("asymptotic_independence: p must sum to 1");
  std::vector<double> cum(p.size());
  std::partial_sum(p.begin(), p.end(), cum.begin());
  GeneratorInfo info;
  info.label = "asymptotic_independence";
  info.margin_means = p;
  info.mass_at_neg_inf = true;
  return SGenerator(
      GeneratorTag::AsyIndep, p.size(),
      [cum](RngStream& rng, std::span<double> out) {
        const double v = rng.uniform() * cum.back();
        std::size_t j = 0;
        while (j + 1 < cum.size() && v > cum[j]) ++j;
        std::fill(out.begin(), out.end(), neg_inf);
        out[j] = 0.0;
      },
      std::move(info));
}

/// Uniform resampling (with replacement) of stored S rows.
inline SGenerator empirical(XMatrix rows, std::string label = "empirical") {
  if (rows.rows == 0 || rows.cols == 0) throw DimensionError("empirical: no rows");
  bool any_neg_inf = false;
  for (std::size_t i = 0; i < rows.rows; ++i) {
    double m = neg_inf;
    for (double v : rows.row(i)) {
      if (std::isnan(v) || v == pos_inf) throw DomainError("empirical: invalid component");
      m = std::max(m, v);
      any_neg_inf = any_neg_inf || v == neg_inf;
    }
    if (m != 0.0) throw DomainError("empirical: row " + std::to_string(i) + " has max != 0");
  }
  GeneratorInfo info;
  info.label = std::move(label);
  info.mass_at_neg_inf = any_neg_inf;
  const std::size_t d = rows.cols;
  auto data = std::make_shared<const XMatrix>(std::move(rows));
  info.support_rows = data;
  return SGenerator(
      GeneratorTag::EmpiricalResample, d,
      [data](RngStream& rng, std::span<double> out) {
        auto r = data->row(rng.index(data->rows));
        std::copy(r.begin(), r.end(), out.begin());
      },
      std::move(info));
}

/// n independent draws of S, one per row.
inline XMatrix sample_S(const SGenerator& gen, RngStream& rng, std::size_t n) {
  if (n == 0) throw DomainError("sample_S: n must be positive");
  XMatrix out(n, gen.dim());
  parallel::for_ranges(rng, n, [&](RngStream& local, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) gen.draw(local, out.row(i));
  });
  return out;
}

/// Frequency of S_j > -inf per coordinate over n draws. This is a heuristic
/// check of P(S_j > -inf) > 0: a zero frequency throws GenerationError.
inline std::vector<double> check_support(const SGenerator& gen, RngStream& rng,
                                         std::size_t n = 10000) {
  const XMatrix s = sample_S(gen, rng, n);
  std::vector<double> freq(gen.dim(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < gen.dim(); ++j) freq[j] += s(i, j) > neg_inf ? 1.0 : 0.0;
  }
  for (std::size_t j = 0; j < gen.dim(); ++j) {
    freq[j] /= static_cast<double>(n);
    if (freq[j] == 0.0) {
      throw GenerationError("check_support: S_" + std::to_string(j + 1) +
                            " was -inf on every draw");
    }
  }
  return freq;
}

/// Monte Carlo estimate of E[e^{max U}].
inline Estimate estimate_norm_const(const DrawFn& sampler_U, std::size_t dim, RngStream& rng,
                                    std::size_t n) {
  std::vector<double> u(dim);
  double m = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sampler_U(rng, u);
    const double e = std::exp(XVec::max_of(u));
    m += e;
    m2 += e * e;
  }
  const double nn = static_cast<double>(n);
  m /= nn;
  return {m, std::sqrt(std::max(0.0, m2 / nn - m * m) / nn), {}};
}

}  // namespace mgpx
