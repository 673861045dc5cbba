#pragma once

// Exponent measures on the exponential and Pareto scales, the stable tail
// dependence function and its relatives, the angular measure, and the
// scalar coefficients chi and Lambda(L).

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "mgpx/core.hpp"
#include "mgpx/generators.hpp"
#include "mgpx/mgp.hpp"
#include "mgpx/parallel.hpp"
#include "mgpx/parametric.hpp"
#include "mgpx/stats.hpp"

namespace mgpx {

/// A stable tail dependence function l with its provenance. Monte Carlo
/// versions evaluate l(y) = mean_i max_j y_j W_ij on a stored sample W with
/// unit column means, so homogeneity and l(e_j) = 1 hold exactly.
class TailFunctions {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  TailFunctions(std::size_t dim, Fn ell, std::string source, bool monte_carlo = false)
      : dim_(dim), ell_(std::move(ell)), source_(std::move(source)), monte_carlo_(monte_carlo) {
    if (dim == 0) throw DimensionError("TailFunctions: dimension must be at least 1");
    extremal_ = ell_(std::vector<double>(dim, 1.0));
  }

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] const std::string& source() const { return source_; }
  [[nodiscard]] bool monte_carlo() const { return monte_carlo_; }
  /// Cached l(1, ..., 1).
  [[nodiscard]] double extremal_coefficient() const { return extremal_; }

  /// l(y) for y in [0, inf)^D.
  [[nodiscard]] double ell(std::span<const double> y) const {
    require_same_dim(y.size(), dim_, "TailFunctions::ell");
    for (double v : y) {
      if (!(v >= 0.0) || v == pos_inf) throw DomainError("TailFunctions::ell: coordinates must be finite and >= 0");
    }
    return ell_(y);
  }
  [[nodiscard]] double ell(std::initializer_list<double> y) const { return ell(std::vector<double>(y)); }
  /// Monte Carlo standard error of ell(y); zero for closed forms.
  [[nodiscard]] double ell_std_error(std::span<const double> y) const {
    require_same_dim(y.size(), dim_, "TailFunctions::ell_std_error");
    return se_ ? se_(y) : 0.0;
  }

  static TailFunctions complete_dependence(std::size_t d) {
    return {d, [](std::span<const double> y) { return *std::max_element(y.begin(), y.end()); },
            "closed-form:complete_dependence"};
  }
  static TailFunctions asymptotic_independence(std::size_t d) {
    return {d, [](std::span<const double> y) { return std::accumulate(y.begin(), y.end(), 0.0); },
            "closed-form:asymptotic_independence"};
  }
  static TailFunctions logistic(double alpha, std::size_t d) {
    return {d, [alpha](std::span<const double> y) { return logistic_stdf(y, alpha); }, "closed-form:logistic"};
  }
  static TailFunctions husler_reiss_bivariate(double lambda) {
    return {2, [lambda](std::span<const double> y) { return hr_stdf_bivariate(y[0], y[1], lambda); },
            "closed-form:husler_reiss"};
  }

  /// D-norm Monte Carlo from n draws of a positive random vector W = e^U
  /// (rows of `w`, entries >= 0), rescaled to unit column means.
  static TailFunctions dnorm(XMatrix w, std::string source = "monte-carlo:dnorm") {
    if (w.rows == 0) throw DomainError("TailFunctions::dnorm: empty sample");
    const std::size_t d = w.cols;
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
      for (std::size_t j = 0; j < d; ++j) mean[j] += w(i, j);
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (!(mean[j] > 0.0)) throw DomainError("TailFunctions::dnorm: a column has zero mean");
      mean[j] /= static_cast<double>(w.rows);
    }
    auto data = std::make_shared<const XMatrix>(std::move(w));
    // mean of max_j y_j W_ij / m_j over rows [b, e), with column means m
    auto ell_on = [data](std::span<const double> y, const std::vector<double>& m, std::size_t b, std::size_t e) {
      double s = 0.0;
      for (std::size_t i = b; i < e; ++i) {
        double mx = 0.0;
        auto row = data->row(i);
        for (std::size_t j = 0; j < row.size(); ++j) mx = std::max(mx, y[j] * row[j] / m[j]);
        s += mx;
      }
      return s / static_cast<double>(e - b);
    };
    TailFunctions tf(d, [ell_on, mean, n = data->rows](std::span<const double> y) { return ell_on(y, mean, 0, n); },
                     std::move(source), true);
    // batch means, each batch normalized by its own column means
    tf.se_ = [ell_on, data](std::span<const double> y) {
      if (data->rows < 100) return 0.0;
      return stats::batch_means_se(data->rows, 50, [&](std::size_t b, std::size_t e) {
        std::vector<double> m(data->cols, 0.0);
        for (std::size_t i = b; i < e; ++i) {
          for (std::size_t j = 0; j < data->cols; ++j) m[j] += (*data)(i, j);
        }
        for (double& v : m) v /= static_cast<double>(e - b);
        return ell_on(y, m, b, e);
      });
    };
    return tf;
  }

  /// D-norm built from a generator: W_j = e^{S_j}.
  static TailFunctions from_generator(const SGenerator& gen, std::size_t n, RngStream& rng) {
    XMatrix s = sample_S(gen, rng, n);
    for (double& v : s.data) v = std::exp(v);
    return dnorm(std::move(s), "monte-carlo:dnorm(" + gen.info().label + ")");
  }

 private:
  std::size_t dim_;
  Fn ell_;
  Fn se_;
  std::string source_;
  bool monte_carlo_;
  double extremal_ = 0.0;
};

/// Closed form when the family has one, D-norm Monte Carlo otherwise.
inline TailFunctions tail_functions(const FamilySpec& f, RngStream& rng, std::size_t n_mc = 100'000) {
  if (auto* s = std::get_if<family::CompleteDep>(&f)) return TailFunctions::complete_dependence(s->dim);
  if (auto* s = std::get_if<family::AsyIndep>(&f)) return TailFunctions::asymptotic_independence(s->p.size());
  if (auto* s = std::get_if<family::Logistic>(&f)) return TailFunctions::logistic(s->params.alpha, s->params.dim);
  if (auto* s = std::get_if<family::HuslerReiss>(&f); s && s->params.dim() == 2) {
    return TailFunctions::husler_reiss_bivariate(hr_lambda(s->params));
  }
  return TailFunctions::from_generator(family_generator(f), n_mc, rng);
}

/// V(y) = l(1/y); coordinates may be +inf (1/inf = 0).
inline double exponent_function(const TailFunctions& tf, std::span<const double> y) {
  require_same_dim(y.size(), tf.dim(), "exponent_function");
  std::vector<double> inv(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (std::isnan(y[j]) || !(y[j] > 0.0)) throw DomainError("exponent_function: coordinates must be positive");
    inv[j] = y[j] == pos_inf ? 0.0 : 1.0 / y[j];
  }
  return tf.ell(inv);
}

/// Pickands function: l restricted to the unit simplex.
inline double pickands(const TailFunctions& tf, std::span<const double> w) {
  require_same_dim(w.size(), tf.dim(), "pickands");
  double s = 0.0;
  for (double v : w) {
    if (std::isnan(v) || v < -1e-10) throw DomainError("pickands: weights must be nonnegative");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-10) throw DomainError("pickands: weights must sum to 1");
  std::vector<double> c(w.begin(), w.end());
  for (double& v : c) v = std::max(v, 0.0);
  return tf.ell(c);
}

/// Distribution function of e^Z at y > 0: (V(y ^ 1) - V(y)) / V(1).
inline double cdf_via_stdf(const TailFunctions& tf, std::span<const double> y) {
  require_same_dim(y.size(), tf.dim(), "cdf_via_stdf");
  std::vector<double> ym(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (!(y[j] > 0.0) || !std::isfinite(y[j])) throw DomainError("cdf_via_stdf: y must be positive and finite");
    ym[j] = std::min(y[j], 1.0);
  }
  const double v1 = tf.extremal_coefficient();
  return std::max(0.0, (exponent_function(tf, ym) - exponent_function(tf, y)) / v1);
}

/// Monte Carlo l(y) = E[max_j y_j e^{U_j}] after rescaling each U_j so that
/// E[e^{U_j}] = 1 (by the sample mean of the same draws).
inline Estimate stdf_dnorm(const DrawFn& sampler_U, std::size_t dim, std::span<const double> y, std::size_t n,
                           RngStream& rng) {
  require_same_dim(y.size(), dim, "stdf_dnorm");
  if (n < 2) throw DomainError("stdf_dnorm: n must be at least 2");
  XMatrix w(n, dim);
  parallel::for_ranges(rng, n, [&](RngStream& local, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto row = w.row(i);
      sampler_U(local, row);
      for (double& v : row) v = std::exp(v);
    }
  });
  auto estimate = [&](std::size_t b, std::size_t e) {
    std::vector<double> m(dim, 0.0);
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t j = 0; j < dim; ++j) m[j] += w(i, j);
    }
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      double mx = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        if (y[j] > 0.0) mx = std::max(mx, y[j] * w(i, j) / m[j]);
      }
      s += mx;
    }
    return s;  // m holds sums, so this is already a mean
  };
  return {estimate(0, n), stats::batch_means_se(n, 50, estimate), {}};
}

// ---------------------------------------------------------------------------
// Coefficients

namespace detail {

/// n draws of e^{S}, plus the per-coordinate means (exact when recorded).
struct ExpSample {
  XMatrix w;
  std::vector<double> means;
  bool exact_means = false;
};

inline ExpSample exp_sample(const SGenerator& gen, std::size_t n, RngStream& rng) {
  ExpSample out;
  out.w = sample_S(gen, rng, n);
  for (double& v : out.w.data) v = std::exp(v);
  const std::size_t d = gen.dim();
  if (const auto& mm = gen.info().margin_means) {
    out.means = *mm;
    out.exact_means = true;
  } else {
    out.means.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) out.means[j] += out.w(i, j);
    }
    for (double& m : out.means) m /= static_cast<double>(n);
  }
  return out;
}

inline std::vector<double> column_means(const XMatrix& w, std::size_t b, std::size_t e) {
  std::vector<double> m(w.cols, 0.0);
  for (std::size_t i = b; i < e; ++i) {
    for (std::size_t j = 0; j < w.cols; ++j) m[j] += w(i, j);
  }
  for (double& v : m) v /= static_cast<double>(e - b);
  return m;
}

/// Warning text when Monte Carlo margin means differ by more than 3 standard errors.
inline std::vector<std::string> margin_warning(const XMatrix& w, const std::vector<double>& means, bool exact) {
  std::vector<std::string> warn;
  const std::size_t d = w.cols;
  double lo = means[0], hi = means[0];
  for (double m : means) {
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  double se = 0.0;
  if (!exact) {
    for (std::size_t j = 0; j < d; ++j) {
      double ss = 0.0;
      for (std::size_t i = 0; i < w.rows; ++i) ss += (w(i, j) - means[j]) * (w(i, j) - means[j]);
      se = std::max(se, std::sqrt(ss / static_cast<double>(w.rows - 1) / static_cast<double>(w.rows)));
    }
  }
  if (hi - lo > 3.0 * std::sqrt(2.0) * se + 1e-12) {
    warn.push_back("generator margins are not equalized: E[e^{S_j}] ranges over [" + std::to_string(lo) + ", " +
                   std::to_string(hi) + "]; per-coordinate normalization used");
  }
  return warn;
}

}  // namespace detail

/// chi = E[min(e^{S_1}/E e^{S_1}, e^{S_2}/E e^{S_2})] for D = 2.
inline Estimate chi(const SGenerator& gen, std::size_t n, RngStream& rng) {
  if (gen.dim() != 2) throw DimensionError("chi: bivariate generator required");
  if (gen.tag() == GeneratorTag::CompleteDep) return {1.0, 0.0, {}};
  if (gen.tag() == GeneratorTag::AsyIndep) return {0.0, 0.0, {}};
  const auto es = detail::exp_sample(gen, n, rng);
  auto estimate = [&](std::size_t b, std::size_t e) {
    const auto m = es.exact_means ? es.means : detail::column_means(es.w, b, e);
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += std::min(es.w(i, 0) / m[0], es.w(i, 1) / m[1]);
    return s / static_cast<double>(e - b);
  };
  Estimate out{estimate(0, n), stats::batch_means_se(n, 50, estimate), {}};
  out.warnings = detail::margin_warning(es.w, es.means, es.exact_means);
  return out;
}

/// Level x1 with P(Z_1 > x1) = P(Z_2 > x2), from the margin means.
inline double matched_level(const std::vector<double>& margin_means, double x2) {
  return x2 + std::log(margin_means.at(0) / margin_means.at(1));
}

/// Empirical P(Z_1 > x1 | Z_2 > x2) with its binomial standard error.
inline Estimate chi_empirical(const SGenerator& gen, double x1, double x2, std::size_t n, RngStream& rng) {
  if (gen.dim() != 2) throw DimensionError("chi_empirical: bivariate generator required");
  if (!(x1 >= 0.0) || !(x2 >= 0.0)) throw DomainError("chi_empirical: levels must be nonnegative");
  const auto c = parallel::accumulate(rng, n, 2, [&](RngStream& local, double* acc) {
    double s[2];
    gen.draw(local, s);
    const double e = local.exponential();
    if (e + s[1] > x2) {
      acc[0] += 1.0;
      if (e + s[0] > x1) acc[1] += 1.0;
    }
  });
  if (c[0] == 0.0) throw GenerationError("chi_empirical: no exceedance of the conditioning level");
  const double p = c[1] / c[0];
  return {p, std::sqrt(p * (1.0 - p) / c[0]), {}};
}

/// Lambda(L) = 1/E[e^{S_j}], averaged over j.
inline Estimate extremal_coefficient(const SGenerator& gen, std::size_t n, RngStream& rng) {
  const std::size_t d = gen.dim();
  if (const auto& mm = gen.info().margin_means) {
    double s = 0.0;
    for (double m : *mm) s += 1.0 / m;
    Estimate out{s / static_cast<double>(d), 0.0, {}};
    const auto [lo, hi] = std::minmax_element(mm->begin(), mm->end());
    if (*hi - *lo > 1e-12 * *hi) out.warnings.push_back("margin means E[e^{S_j}] differ across coordinates");
    if (out.value > static_cast<double>(d) || out.value < 1.0) {
      out.warnings.push_back("extremal coefficient outside [1, D]; clamped");
      out.value = std::clamp(out.value, 1.0, static_cast<double>(d));
    }
    return out;
  }
  const auto es = detail::exp_sample(gen, n, rng);
  auto estimate = [&](std::size_t b, std::size_t e) {
    const auto m = detail::column_means(es.w, b, e);
    double s = 0.0;
    for (double v : m) s += 1.0 / v;
    return s / static_cast<double>(d);
  };
  Estimate out{estimate(0, n), stats::batch_means_se(n, 50, estimate), {}};
  out.warnings = detail::margin_warning(es.w, es.means, false);
  const double dd = static_cast<double>(d);
  if (out.value < 1.0 - 3.0 * out.std_error || out.value > dd + 3.0 * out.std_error) {
    out.warnings.push_back("extremal coefficient outside [1, D] beyond Monte Carlo error; clamped");
  }
  out.value = std::clamp(out.value, 1.0, dd);
  return out;
}

/// Lambda(B) = e^t Lambda(L) P(Z in B + t), t = -(lower bound of max over B).
inline Estimate lambda_mass(const SGenerator& gen, const Region& B, std::size_t n, RngStream& rng) {
  require_same_dim(B.dim(), gen.dim(), "lambda_mass");
  const double b = B.max_lower_bound();
  if (b == neg_inf) throw DomainError("lambda_mass: region is not bounded away from -inf");
  if (b == pos_inf) return {0.0, 0.0, {}};
  const double t = -b;
  const Region shifted = B.translated(t);
  const std::size_t d = gen.dim();
  const bool exact = gen.info().margin_means.has_value();
  // per draw: indicator of B + t, then e^{S_j} for the margin means
  XMatrix rec(n, d + 1);
  parallel::for_ranges(rng, n, [&](RngStream& local, std::size_t lo, std::size_t hi) {
    std::vector<double> s(d);
    for (std::size_t i = lo; i < hi; ++i) {
      gen.draw(local, s);
      const double e = local.exponential();
      for (double& v : s) v += e;
      rec(i, 0) = shifted.contains(s) ? 1.0 : 0.0;
      for (std::size_t j = 0; j < d; ++j) rec(i, j + 1) = std::exp(s[j] - e);
    }
  });
  const double scale = std::exp(t);
  auto estimate = [&](std::size_t lo, std::size_t hi) {
    double hits = 0.0;
    std::vector<double> m(d, 0.0);
    for (std::size_t i = lo; i < hi; ++i) {
      hits += rec(i, 0);
      for (std::size_t j = 0; j < d; ++j) m[j] += rec(i, j + 1);
    }
    const double nn = static_cast<double>(hi - lo);
    double lam_l = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      lam_l += exact ? 1.0 / (*gen.info().margin_means)[j] : nn / m[j];
    }
    lam_l /= static_cast<double>(d);
    return scale * lam_l * hits / nn;
  };
  Estimate out{estimate(0, n), stats::batch_means_se(n, 50, estimate), {}};
  if (!exact) {
    XMatrix w(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) w(i, j) = rec(i, j + 1);
    }
    out.warnings = detail::margin_warning(w, detail::column_means(w, 0, n), false);
  }
  return out;
}

/// nu(B) for a Pareto-scale region B: the Lambda mass of its log image.
inline Estimate nu_mass(const SGenerator& gen, const Region& B_pareto, std::size_t n, RngStream& rng) {
  return lambda_mass(gen, B_pareto.log_image(), n, rng);
}

// ---------------------------------------------------------------------------
// Angular measure

enum class NormP { L1, L2, LInf };

inline double norm_of(std::span<const double> x, NormP p) {
  double s = 0.0;
  switch (p) {
    case NormP::L1:
      for (double v : x) s += std::abs(v);
      return s;
    case NormP::L2:
      for (double v : x) s += v * v;
      return std::sqrt(s);
    case NormP::LInf:
      for (double v : x) s = std::max(s, std::abs(v));
      return s;
  }
  return s;
}

struct AngularSample {
  XMatrix points;          // accepted angles, unit norm
  Estimate total_mass;     // H(sphere)
  NormP norm_p = NormP::L1;
  std::size_t draws = 0;   // underlying Z draws
  double mass_factor = 0;  // D Lambda(L)
};

/// Angles of P = e^Z over rows with ||P||_p >= D, with
/// H(sphere) = D Lambda(L) P(||e^Z||_p >= D).
inline AngularSample angular_sample(const SGenerator& gen, NormP p, std::size_t n, RngStream& rng) {
  const std::size_t d = gen.dim();
  const double dd = static_cast<double>(d);
  RngStream coef_rng = rng.fork();
  const Estimate lam = extremal_coefficient(gen, std::max<std::size_t>(n, 100'000), coef_rng);
  XMatrix z = sample_standard(gen, rng, n);
  AngularSample out;
  out.norm_p = p;
  out.draws = n;
  out.mass_factor = dd * lam.value;
  std::vector<double> pts;
  std::vector<double> e(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = z.row(i);
    for (std::size_t j = 0; j < d; ++j) e[j] = std::exp(row[j]);
    const double r = norm_of(e, p);
    if (r >= dd) {
      for (double v : e) pts.push_back(v / r);
    }
  }
  const std::size_t acc = pts.size() / d;
  const double freq = static_cast<double>(acc) / static_cast<double>(n);
  if (freq < 1e-3) {
    throw GenerationError("angular_sample: acceptance " + std::to_string(freq) + " below 0.1%");
  }
  out.points.rows = acc;
  out.points.cols = d;
  out.points.data = std::move(pts);
  const double se = std::sqrt(freq * (1.0 - freq) / static_cast<double>(n));
  out.total_mass = {out.mass_factor * freq,
                    std::hypot(out.mass_factor * se, dd * lam.std_error * freq), lam.warnings};
  return out;
}

namespace detail {

/// integral of f(w) dH from the accepted angles.
inline Estimate angular_integral(const AngularSample& s, const std::function<double(std::span<const double>)>& f) {
  const double n = static_cast<double>(s.draws);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < s.points.rows; ++i) {
    const double v = f(s.points.row(i));
    sum += v;
    sum2 += v * v;
  }
  const double m = sum / n;
  const double var = std::max(0.0, sum2 / n - m * m);
  return {s.mass_factor * m, s.mass_factor * std::sqrt(var / n), {}};
}

}  // namespace detail

/// integral of w_j dH.
inline Estimate angular_moment(const AngularSample& s, std::size_t j) {
  if (j >= s.points.cols) throw DimensionError("angular_moment: coordinate out of range");
  return detail::angular_integral(s, [j](std::span<const double> w) { return w[j]; });
}

/// chi = integral of min(w, 1 - w) dH(w) for p = 1, D = 2.
inline Estimate chi_from_angular(const AngularSample& s) {
  if (s.norm_p != NormP::L1) throw DomainError("chi_from_angular: requires the L1 sphere");
  if (s.points.cols != 2) throw DimensionError("chi_from_angular: bivariate sample required");
  return detail::angular_integral(s, [](std::span<const double> w) { return std::min(w[0], w[1]); });
}

}  // namespace mgpx
