#pragma once

// The MGP(sigma, xi, S) distribution: simulation, distribution function,
// densities by the t-integral formulas, and marginal tail probabilities.

#include <cmath>
#include <string>
#include <vector>

#include "mgpx/core.hpp"
#include "mgpx/generators.hpp"
#include "mgpx/parallel.hpp"
#include "mgpx/quadrature.hpp"

namespace mgpx {

/// Y ~ MGP(sigma, xi, S): Y = gp_margin(E + S; sigma, xi) componentwise.
struct MgpModel {
  MarginParams margins;
  SGenerator generator;

  MgpModel(MarginParams m, SGenerator g) : margins(std::move(m)), generator(std::move(g)) {
    margins.validate();
    require_same_dim(margins.dim(), generator.dim(), "MgpModel");
  }
  /// Standard margins (1, 0).
  explicit MgpModel(const SGenerator& g) : MgpModel(MarginParams::standard(g.dim()), g) {}

  [[nodiscard]] std::size_t dim() const { return margins.dim(); }
};

/// n rows of Z = E + S.
inline XMatrix sample_standard(const SGenerator& gen, RngStream& rng, std::size_t n) {
  if (n == 0) throw DomainError("sample_standard: n must be positive");
  XMatrix out(n, gen.dim());
  parallel::for_ranges(rng, n, [&](RngStream& local, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto row = out.row(i);
      gen.draw(local, row);
      const double ex = local.exponential();
      for (double& v : row) v += ex;
    }
  });
  return out;
}

/// Applies gp_margin to every entry of a standard sample, column by column.
inline void apply_margins(XMatrix& z, const MarginParams& m) {
  require_same_dim(z.cols, m.dim(), "apply_margins");
  for (std::size_t i = 0; i < z.rows; ++i) {
    for (std::size_t j = 0; j < z.cols; ++j) z(i, j) = gp_margin(z(i, j), m.sigma[j], m.xi[j]);
  }
}

inline XMatrix sample(const MgpModel& model, RngStream& rng, std::size_t n) {
  XMatrix z = sample_standard(model.generator, rng, n);
  if (!model.margins.is_standard()) apply_margins(z, model.margins);
  return z;
}

/// E[e^{S_j}] per coordinate: exact when the generator records it,
/// Monte Carlo over n draws otherwise.
inline std::vector<Estimate> margin_means(const SGenerator& gen, RngStream& rng, std::size_t n = 200'000) {
  const std::size_t d = gen.dim();
  std::vector<Estimate> out(d);
  if (const auto& mm = gen.info().margin_means) {
    for (std::size_t j = 0; j < d; ++j) out[j] = {(*mm)[j], 0.0, {}};
    return out;
  }
  const auto s = parallel::accumulate(rng, n, 2 * d, [&](RngStream& local, double* acc) {
    std::vector<double> row(d);
    gen.draw(local, row);
    for (std::size_t j = 0; j < d; ++j) {
      const double e = std::exp(row[j]);
      acc[2 * j] += e;
      acc[2 * j + 1] += e * e;
    }
  });
  const double nn = static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) {
    const double m = s[2 * j] / nn;
    const double var = std::max(0.0, s[2 * j + 1] / nn - m * m);
    out[j] = {m, std::sqrt(var / nn), {}};
  }
  return out;
}

/// P(Z_j > x) = e^{-x} E[e^{S_j}] for x >= 0.
inline Estimate marginal_tail(const SGenerator& gen, std::size_t j, double x, RngStream& rng,
                              std::size_t n = 200'000) {
  if (j >= gen.dim()) throw DimensionError("marginal_tail: coordinate out of range");
  if (!(x >= 0.0)) throw DomainError("marginal_tail: x must be nonnegative");
  const Estimate m = margin_means(gen, rng, n)[j];
  const double f = std::exp(-x);
  return {f * m.value, f * m.std_error, {}};
}

/// P(S + z <= x) is the indicator of z <= min_j (x_j - s_j), the minimum
/// taken over coordinates with s_j > -inf. Integrating against Exp(1) gives
/// 1 - e^{-m} clamped at 0.
inline double cdf_given_s(std::span<const double> s, std::span<const double> x) {
  double m = pos_inf;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] == neg_inf) continue;
    if (x[j] == neg_inf) return 0.0;
    m = std::min(m, x[j] - s[j]);
  }
  return m > 0.0 ? -std::expm1(-m) : 0.0;
}

/// Monte Carlo P(Z <= x) with the exponential integral done per draw.
inline Estimate cdf_standard_mc(const SGenerator& gen, const XVec& x, std::size_t n, RngStream& rng) {
  require_same_dim(x.size(), gen.dim(), "cdf_standard_mc");
  if (n == 0) throw DomainError("cdf_standard_mc: n must be positive");
  const std::size_t d = gen.dim();
  return parallel::mean(rng, n, [&](RngStream& local) {
    std::vector<double> s(d);
    gen.draw(local, s);
    return cdf_given_s(s, x.span());
  });
}

/// Standard-scale image of y in [-inf, inf]^D: points below a lower
/// endpoint map to -inf, points at or above an upper endpoint to +inf.
inline std::vector<double> standardize_point(const MarginParams& m, std::span<const double> y) {
  require_same_dim(y.size(), m.dim(), "standardize_point");
  std::vector<double> z(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double s = m.sigma[j], xi = m.xi[j];
    if (std::isnan(y[j])) throw DomainError("standardize_point: NaN coordinate");
    if (y[j] == pos_inf) {
      z[j] = pos_inf;
    } else if (y[j] == neg_inf) {
      z[j] = neg_inf;
    } else if (std::abs(xi) < xi_zero_tol) {
      z[j] = y[j] / s;
    } else {
      const double arg = xi * y[j] / s;
      if (arg <= -1.0) z[j] = xi > 0.0 ? neg_inf : pos_inf;
      else z[j] = std::log1p(arg) / xi;
    }
  }
  return z;
}

/// P(Y <= y). Exact for complete dependence and asymptotic independence,
/// Monte Carlo over n draws of S otherwise.
inline Estimate cdf(const MgpModel& model, std::span<const double> y, std::size_t n, RngStream& rng) {
  const std::vector<double> z = standardize_point(model.margins, y);
  const SGenerator& gen = model.generator;
  const std::size_t d = gen.dim();
  if (gen.tag() == GeneratorTag::CompleteDep) {
    return {cdf_given_s(std::vector<double>(d, 0.0), z), 0.0, {}};
  }
  if (gen.tag() == GeneratorTag::AsyIndep) {
    const auto& p = *gen.info().margin_means;
    double total = 0.0;
    std::vector<double> s(d);
    for (std::size_t j = 0; j < d; ++j) {
      std::fill(s.begin(), s.end(), neg_inf);
      s[j] = 0.0;
      total += p[j] * cdf_given_s(s, z);
    }
    return {total, 0.0, {}};
  }
  if (n == 0) throw DomainError("cdf: n must be positive");
  return parallel::mean(rng, n, [&](RngStream& local) {
    std::vector<double> s(d);
    gen.draw(local, s);
    return cdf_given_s(s, z);
  });
}

namespace detail {

inline void require_finite_point(std::span<const double> z, const char* where) {
  for (double v : z) {
    if (!std::isfinite(v)) throw DomainError(std::string(where) + ": point must be finite");
  }
}

}  // namespace detail

/// e^{-max z} * integral of pdf_T(z + t) dt.
inline Estimate density_standard_from_T(const DensityFn& pdf_T, const XVec& z, const QuadConfig& cfg = {}) {
  detail::require_finite_point(z.span(), "density_standard_from_T");
  const double mz = z.max();
  if (mz <= 0.0) return {0.0, 0.0, {}};
  std::vector<double> buf(z.size());
  const Estimate integral = integrate_real_line(
      [&](double t) {
        for (std::size_t j = 0; j < buf.size(); ++j) buf[j] = z[j] + t;
        return pdf_T(buf);
      },
      cfg);
  const double f = std::exp(-mz);
  return {f * integral.value, f * integral.std_error, {}};
}

/// (1 / E[e^{max U}]) * integral of pdf_U(z + t) e^t dt. The uncertainty of
/// a Monte Carlo normalizing constant is propagated.
inline Estimate density_standard_from_U(const DensityFn& pdf_U, const Estimate& norm_const, const XVec& z,
                                        const QuadConfig& cfg = {}) {
  detail::require_finite_point(z.span(), "density_standard_from_U");
  if (!(norm_const.value > 0.0) || !std::isfinite(norm_const.value)) {
    throw DomainError("density_standard_from_U: normalizing constant must be finite and positive");
  }
  if (z.max() <= 0.0) return {0.0, 0.0, {}};
  std::vector<double> buf(z.size());
  const Estimate integral = integrate_real_line(
      [&](double t) {
        for (std::size_t j = 0; j < buf.size(); ++j) buf[j] = z[j] + t;
        const double p = pdf_U(buf);
        return p == 0.0 ? 0.0 : p * std::exp(t);
      },
      cfg);
  const double v = integral.value / norm_const.value;
  const double rel_nc = norm_const.std_error / norm_const.value;
  return {v, integral.std_error / norm_const.value + v * rel_nc, {}};
}

/// Standard MGP density of a generator, choosing the closed form when one
/// is attached, then the T route, then the U route.
inline Estimate density_standard(const SGenerator& gen, const XVec& z, const QuadConfig& cfg = {}) {
  require_same_dim(z.size(), gen.dim(), "density_standard");
  const auto& info = gen.info();
  if (info.mass_at_neg_inf) {
    throw NotAbsolutelyContinuous(
        "density_standard: S puts mass on -inf; densities for this case are not covered");
  }
  if (info.density_Z) {
    detail::require_finite_point(z.span(), "density_standard");
    return {(*info.density_Z)(z.span()), 0.0, {}};
  }
  if (info.density_T) return density_standard_from_T(*info.density_T, z, cfg);
  if (info.density_U && info.norm_const) return density_standard_from_U(*info.density_U, *info.norm_const, z, cfg);
  throw NotAbsolutelyContinuous("density_standard: generator '" + info.label +
                                "' carries no Lebesgue density");
}

/// Density of Y = gp_margin(Z) given the standard density of Z.
inline double density(const MgpModel& model, std::span<const double> y, const DensityFn& standard_density) {
  require_same_dim(y.size(), model.dim(), "density");
  if (!exceeds(y, std::vector<double>(y.size(), 0.0))) return 0.0;
  std::vector<double> z(y.size());
  double jac = 1.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double s = model.margins.sigma[j], xi = model.margins.xi[j];
    if (!std::isfinite(y[j])) return 0.0;
    const double t = std::abs(xi) < xi_zero_tol ? s : s + xi * y[j];
    if (t <= 0.0) return 0.0;
    z[j] = gp_margin_inverse(y[j], s, xi);
    jac /= t;
  }
  return standard_density(z) * jac;
}

inline Estimate density(const MgpModel& model, const XVec& y, const QuadConfig& cfg = {}) {
  const SGenerator& gen = model.generator;
  double err_scale = 0.0;
  const double v = density(model, y.span(), [&](std::span<const double> z) {
    const Estimate e = density_standard(gen, XVec(z), cfg);
    err_scale = e.value > 0.0 ? e.std_error / e.value : 0.0;
    return e.value;
  });
  return {v, v * err_scale, {}};
}

}  // namespace mgpx
