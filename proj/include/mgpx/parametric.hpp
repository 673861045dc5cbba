#pragma once

// Closed-form families: logistic, Hüsler-Reiss (Gaussian U) and
// T-Gaussian (Gaussian T), as generators, densities and tail functions.

#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mgpx/core.hpp"
#include "mgpx/generators.hpp"
#include "mgpx/stats.hpp"

namespace mgpx {

// ---------------------------------------------------------------------------
// Logistic

struct LogisticParams {
  double alpha = 2.0;
  std::size_t dim = 2;

  void validate() const {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) throw DomainError("LogisticParams: alpha must exceed 1");
    if (dim == 0) throw DimensionError("LogisticParams: dimension must be at least 1");
  }
};

/// l(y) = (sum_j y_j^alpha)^{1/alpha}; alpha = 1 gives the sum.
inline double logistic_stdf(std::span<const double> y, double alpha) {
  if (!(alpha >= 1.0)) throw DomainError("logistic_stdf: alpha must be at least 1");
  double m = 0.0;
  for (double v : y) {
    if (!(v >= 0.0) || v == pos_inf) throw DomainError("logistic_stdf: coordinates must be finite and nonnegative");
    m = std::max(m, v);
  }
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (double v : y) s += std::pow(v / m, alpha);
  return m * std::pow(s, 1.0 / alpha);
}

/// The displayed logistic formula
///   alpha^{D-1} Gamma(D - 1/alpha) / Gamma(1 - 1/alpha)
///   * exp(-alpha sum z) / (sum exp(-alpha z_j))^{D - 1/alpha}
/// on max z > 0. It is the exponent-measure density and has mass D^{1/alpha}
/// on L.
inline double logistic_exponent_density(std::span<const double> z, double alpha) {
  const std::size_t d = z.size();
  if (!(alpha > 1.0)) throw DomainError("logistic density: alpha must exceed 1");
  double mz = neg_inf;
  for (double v : z) mz = std::max(mz, v);
  if (!(mz > 0.0) || !std::isfinite(mz)) return 0.0;
  const double dd = static_cast<double>(d);
  // work relative to the max to keep exponentials bounded
  double sum_z = 0.0, sum_e = 0.0;
  for (double v : z) {
    if (!std::isfinite(v)) return 0.0;
    sum_z += v - mz;
    sum_e += std::exp(-alpha * (v - mz));
  }
  const double log_c = (dd - 1.0) * std::log(alpha) + std::lgamma(dd - 1.0 / alpha) - std::lgamma(1.0 - 1.0 / alpha);
  // exponent of the full formula: -alpha sum z - (D - 1/alpha) log sum e^{-alpha z}
  const double log_v = log_c - alpha * sum_z - (dd - 1.0 / alpha) * std::log(sum_e) - mz;
  return std::exp(log_v);
}

/// Standard MGP density of the logistic family (normalized over L).
inline double logistic_mgp_density(std::span<const double> z, double alpha) {
  const double dd = static_cast<double>(z.size());
  return logistic_exponent_density(z, alpha) / std::pow(dd, 1.0 / alpha);
}

/// Density of U with independent coordinates U_j = -log(E_j) / alpha.
inline double logistic_u_density(std::span<const double> u, double alpha) {
  double lp = 0.0;
  for (double v : u) {
    if (!std::isfinite(v)) return 0.0;
    lp += std::log(alpha) - alpha * v - std::exp(-alpha * v);
  }
  return std::exp(lp);
}

/// E[e^{max U}] = D^{1/alpha} Gamma(1 - 1/alpha).
inline double logistic_norm_constant(const LogisticParams& p) {
  return std::pow(static_cast<double>(p.dim), 1.0 / p.alpha) * std::tgamma(1.0 - 1.0 / p.alpha);
}

/// Exact tilted sampler for the logistic U (mixture over the tilting index).
inline SGenerator logistic_generator(const LogisticParams& p) {
  p.validate();
  const double alpha = p.alpha;
  const double shape = 1.0 - 1.0 / alpha;
  tilt::Mixture mix;
  mix.margin_means.assign(p.dim, std::tgamma(shape));
  mix.tilted_draw = [alpha, shape](std::size_t j, RngStream& rng, std::span<double> out) {
    for (std::size_t k = 0; k < out.size(); ++k) {
      const double w = k == j ? rng.gamma(shape) : rng.exponential();
      out[k] = -std::log(w) / alpha;
    }
  };
  auto sampler_U = [alpha](RngStream& rng, std::span<double> out) {
    for (double& v : out) v = -std::log(rng.exponential()) / alpha;
  };
  SGenerator g = from_U(sampler_U, p.dim, mix, DensityFn([alpha](std::span<const double> u) {
                          return logistic_u_density(u, alpha);
                        }),
                        Estimate{logistic_norm_constant(p), 0.0, {}}, "logistic");
  GeneratorInfo info = g.info();
  info.margin_means = std::vector<double>(p.dim, std::pow(static_cast<double>(p.dim), -1.0 / alpha));
  info.density_Z = [alpha](std::span<const double> z) { return logistic_mgp_density(z, alpha); };
  return g.with_info(std::move(info));
}

// ---------------------------------------------------------------------------
// Gaussian families

struct HuslerReissParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Sigma;

  HuslerReissParams() = default;
  HuslerReissParams(Eigen::VectorXd m, Eigen::MatrixXd s) : mu(std::move(m)), Sigma(std::move(s)) { validate(); }
  HuslerReissParams(const std::vector<double>& m, const std::vector<std::vector<double>>& s) {
    mu = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
    Sigma.resize(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
      require_same_dim(s[i].size(), s.size(), "HuslerReissParams: Sigma row");
      for (std::size_t j = 0; j < s.size(); ++j) {
        Sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s[i][j];
      }
    }
    validate();
  }

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(mu.size()); }

  void validate() const {
    if (mu.size() == 0) throw DimensionError("Gaussian params: empty mean");
    if (Sigma.rows() != mu.size() || Sigma.cols() != mu.size()) {
      throw DimensionError("Gaussian params: Sigma must be D x D");
    }
    if (!mu.allFinite() || !Sigma.allFinite()) throw DomainError("Gaussian params: non-finite entry");
    const double scale = Sigma.cwiseAbs().maxCoeff();
    if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale)) {
      throw DomainError("Gaussian params: Sigma must be symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
    if (llt.info() != Eigen::Success) throw DomainError("Gaussian params: Sigma must be positive definite");
  }
};

/// Pieces of the Hüsler-Reiss precision: A = S^-1 - S^-1 1 1' S^-1 / (1' S^-1 1).
struct HrPrecision {
  Eigen::MatrixXd A;
  Eigen::VectorXd sinv1;  // Sigma^{-1} 1
  double q = 0.0;         // 1' Sigma^{-1} 1
  double log_det = 0.0;   // log |Sigma|
};

inline HrPrecision hr_precision(const Eigen::MatrixXd& Sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) throw DomainError("hr_precision: Sigma is singular or not positive definite");
  const auto n = Sigma.rows();
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  HrPrecision p;
  p.sinv1 = inv * Eigen::VectorXd::Ones(n);
  p.q = p.sinv1.sum();
  p.A = inv - p.sinv1 * p.sinv1.transpose() / p.q;
  p.A = 0.5 * (p.A + p.A.transpose());
  const Eigen::MatrixXd L = llt.matrixL();
  p.log_det = 2.0 * L.diagonal().array().log().sum();
  return p;
}

inline double gaussian_log_pdf(std::span<const double> x, const HuslerReissParams& p,
                               const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const auto d = static_cast<Eigen::Index>(x.size());
  Eigen::VectorXd r(d);
  for (Eigen::Index j = 0; j < d; ++j) r(j) = x[static_cast<std::size_t>(j)] - p.mu(j);
  const Eigen::VectorXd w = llt.matrixL().solve(r);
  const Eigen::MatrixXd L = llt.matrixL();
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  return -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) - 0.5 * log_det - 0.5 * w.squaredNorm();
}

/// x = mu + L n with n standard normal.
inline void gaussian_draw(RngStream& rng, const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol_L,
                          std::span<double> out) {
  const auto d = mean.size();
  Eigen::VectorXd n(d);
  for (Eigen::Index j = 0; j < d; ++j) n(j) = rng.normal();
  const Eigen::VectorXd x = mean + chol_L.triangularView<Eigen::Lower>() * n;
  for (Eigen::Index j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] = x(j);
}

/// E[e^{U_j}] = exp(mu_j + Sigma_jj / 2).
inline std::vector<double> gaussian_exp_means(const HuslerReissParams& p) {
  std::vector<double> m(p.dim());
  for (std::size_t j = 0; j < p.dim(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    m[j] = std::exp(p.mu(jj) + 0.5 * p.Sigma(jj, jj));
  }
  return m;
}

/// E[e^{max U}] for U ~ N(mu, Sigma). Exact for D <= 2; for D > 2 the
/// identity E[e^{max U}] = sum_j E[e^{U_j}] P_j(U_j is the maximum), with
/// P_j the e^{U_j}-tilted law N(mu + Sigma e_j, Sigma), is estimated by
/// Monte Carlo on n draws from a fixed stream.
inline Estimate hr_norm_constant(const HuslerReissParams& p, std::size_t n = 10'000'000,
                                 std::uint64_t seed = 0x48527265697373ULL) {
  const std::size_t d = p.dim();
  const auto m = gaussian_exp_means(p);
  if (d == 1) return {m[0], 0.0, {}};
  if (d == 2) {
    const double lam2 = p.Sigma(0, 0) + p.Sigma(1, 1) - 2.0 * p.Sigma(0, 1);
    const double lam = std::sqrt(lam2);
    const double a = (p.mu(0) - p.mu(1) + p.Sigma(0, 0) - p.Sigma(0, 1)) / lam;
    const double b = (p.mu(1) - p.mu(0) + p.Sigma(1, 1) - p.Sigma(0, 1)) / lam;
    return {m[0] * stats::normal_cdf(a) + m[1] * stats::normal_cdf(b), 0.0, {}};
  }
  Eigen::LLT<Eigen::MatrixXd> llt(p.Sigma);
  const Eigen::MatrixXd L = llt.matrixL();
  double total = 0.0, var = 0.0;
  const std::size_t per = std::max<std::size_t>(1, n / d);
  for (std::size_t j = 0; j < d; ++j) {
    RngStream rng(seed, j);
    const Eigen::VectorXd mean = p.mu + p.Sigma.col(static_cast<Eigen::Index>(j));
    const auto hits = parallel::accumulate(rng, per, 1, [&](RngStream& local, double* acc) {
      std::vector<double> u(d);
      gaussian_draw(local, mean, L, u);
      std::size_t arg = 0;
      for (std::size_t k = 1; k < d; ++k) {
        if (u[k] > u[arg]) arg = k;
      }
      acc[0] += arg == j ? 1.0 : 0.0;
    });
    const double f = hits[0] / static_cast<double>(per);
    total += m[j] * f;
    var += m[j] * m[j] * f * (1.0 - f) / static_cast<double>(per);
  }
  return {total, std::sqrt(var), {}};
}

/// Displayed Hüsler-Reiss MGP density
///   c exp[-1/2 {(z-mu)'A(z-mu) + (2 (z-mu)' S^-1 1 - 1) / (1' S^-1 1)}],
///   c = (2 pi)^{(1-D)/2} |S|^{-1/2} / (E[e^{max U}] (1' S^-1 1)^{1/2}).
inline double hr_mgp_density(std::span<const double> z, const HuslerReissParams& p, const HrPrecision& pr,
                             double norm_const) {
  require_same_dim(z.size(), p.dim(), "hr_mgp_density");
  double mz = neg_inf;
  for (double v : z) {
    if (!std::isfinite(v)) return 0.0;
    mz = std::max(mz, v);
  }
  if (!(mz > 0.0)) return 0.0;
  const auto d = static_cast<Eigen::Index>(z.size());
  Eigen::VectorXd r(d);
  for (Eigen::Index j = 0; j < d; ++j) r(j) = z[static_cast<std::size_t>(j)] - p.mu(j);
  const double quad = r.dot(pr.A * r) + (2.0 * r.dot(pr.sinv1) - 1.0) / pr.q;
  const double log_c = 0.5 * (1.0 - static_cast<double>(d)) * std::log(2.0 * std::numbers::pi) - 0.5 * pr.log_det -
                       std::log(norm_const) - 0.5 * std::log(pr.q);
  return std::exp(log_c - 0.5 * quad);
}

inline double hr_mgp_density(const XVec& z, const HuslerReissParams& p) {
  return hr_mgp_density(z.span(), p, hr_precision(p.Sigma), hr_norm_constant(p).value);
}

/// T-Gaussian MGP density
///   (2 pi)^{(1-D)/2} |S|^{-1/2} (1' S^-1 1)^{-1/2} exp{-1/2 (z-mu)'A(z-mu) - max z}.
inline double tgauss_mgp_density(std::span<const double> z, const HuslerReissParams& p, const HrPrecision& pr) {
  require_same_dim(z.size(), p.dim(), "tgauss_mgp_density");
  double mz = neg_inf;
  for (double v : z) {
    if (!std::isfinite(v)) return 0.0;
    mz = std::max(mz, v);
  }
  if (!(mz > 0.0)) return 0.0;
  const auto d = static_cast<Eigen::Index>(z.size());
  Eigen::VectorXd r(d);
  for (Eigen::Index j = 0; j < d; ++j) r(j) = z[static_cast<std::size_t>(j)] - p.mu(j);
  const double log_c = 0.5 * (1.0 - static_cast<double>(d)) * std::log(2.0 * std::numbers::pi) - 0.5 * pr.log_det -
                       0.5 * std::log(pr.q);
  return std::exp(log_c - 0.5 * r.dot(pr.A * r) - mz);
}

inline double tgauss_mgp_density(const XVec& z, const HuslerReissParams& p) {
  return tgauss_mgp_density(z.span(), p, hr_precision(p.Sigma));
}

/// Bivariate Hüsler-Reiss stdf with lambda^2 = Var(U_1 - U_2):
///   l(y) = y1 Phi(lambda/2 + log(y1/y2)/lambda) + y2 Phi(lambda/2 + log(y2/y1)/lambda).
inline double hr_stdf_bivariate(double y1, double y2, double lambda) {
  if (!(y1 >= 0.0) || !(y2 >= 0.0) || !std::isfinite(y1) || !std::isfinite(y2)) {
    throw DomainError("hr_stdf_bivariate: coordinates must be finite and nonnegative");
  }
  if (y1 == 0.0 || y2 == 0.0) return y1 + y2;
  if (lambda == 0.0) return std::max(y1, y2);
  const double r = std::log(y1 / y2) / lambda;
  return y1 * stats::normal_cdf(0.5 * lambda + r) + y2 * stats::normal_cdf(0.5 * lambda - r);
}

inline double hr_lambda(const HuslerReissParams& p, std::size_t i = 0, std::size_t j = 1) {
  const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
  return std::sqrt(std::max(0.0, p.Sigma(a, a) + p.Sigma(b, b) - 2.0 * p.Sigma(a, b)));
}

/// from_U with Gaussian U, sampled exactly by the mixture-of-tilts scheme.
inline SGenerator hr_generator(const HuslerReissParams& p, std::size_t norm_mc = 10'000'000) {
  p.validate();
  const Eigen::LLT<Eigen::MatrixXd> llt(p.Sigma);
  const Eigen::MatrixXd L = llt.matrixL();
  tilt::Mixture mix;
  mix.margin_means = gaussian_exp_means(p);
  mix.tilted_draw = [p, L](std::size_t j, RngStream& rng, std::span<double> out) {
    gaussian_draw(rng, p.mu + p.Sigma.col(static_cast<Eigen::Index>(j)), L, out);
  };
  const Estimate nc = hr_norm_constant(p, norm_mc);
  auto sampler_U = [p, L](RngStream& rng, std::span<double> out) { gaussian_draw(rng, p.mu, L, out); };
  auto pdf_U = [p, llt](std::span<const double> u) { return std::exp(gaussian_log_pdf(u, p, llt)); };
  SGenerator g = from_U(sampler_U, p.dim(), mix, DensityFn(pdf_U), nc, "husler_reiss");
  GeneratorInfo info = g.info();
  if (nc.std_error == 0.0) {
    std::vector<double> mm = mix.margin_means;
    for (double& v : mm) v /= nc.value;
    info.margin_means = mm;
  }
  const HrPrecision pr = hr_precision(p.Sigma);
  info.density_Z = [p, pr, c = nc.value](std::span<const double> z) { return hr_mgp_density(z, p, pr, c); };
  return g.with_info(std::move(info));
}

/// from_T with Gaussian T.
inline SGenerator tgauss_generator(const HuslerReissParams& p) {
  p.validate();
  const Eigen::LLT<Eigen::MatrixXd> llt(p.Sigma);
  const Eigen::MatrixXd L = llt.matrixL();
  auto sampler_T = [p, L](RngStream& rng, std::span<double> out) { gaussian_draw(rng, p.mu, L, out); };
  auto pdf_T = [p, llt](std::span<const double> t) { return std::exp(gaussian_log_pdf(t, p, llt)); };
  SGenerator g = from_T(sampler_T, p.dim(), DensityFn(pdf_T), "t_gaussian");
  GeneratorInfo info = g.info();
  const HrPrecision pr = hr_precision(p.Sigma);
  info.density_Z = [p, pr](std::span<const double> z) { return tgauss_mgp_density(z, p, pr); };
  return g.with_info(std::move(info));
}

// ---------------------------------------------------------------------------
// Family specifications

namespace family {
struct CompleteDep {
  std::size_t dim = 2;
};
struct AsyIndep {
  std::vector<double> p;
};
struct Logistic {
  LogisticParams params;
};
struct HuslerReiss {
  HuslerReissParams params;
};
struct TGaussian {
  HuslerReissParams params;
};
struct Empirical {
  std::string path;
  XMatrix rows;
};
}  // namespace family

using FamilySpec = std::variant<family::CompleteDep, family::AsyIndep, family::Logistic, family::HuslerReiss,
                                family::TGaussian, family::Empirical>;

inline std::size_t family_dim(const FamilySpec& f) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, family::CompleteDep>) return s.dim;
        else if constexpr (std::is_same_v<T, family::AsyIndep>) return s.p.size();
        else if constexpr (std::is_same_v<T, family::Logistic>) return s.params.dim;
        else if constexpr (std::is_same_v<T, family::Empirical>) return s.rows.cols;
        else return s.params.dim();
      },
      f);
}

inline SGenerator family_generator(const FamilySpec& f) {
  return std::visit(
      [](const auto& s) -> SGenerator {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, family::CompleteDep>) return complete_dependence(s.dim);
        else if constexpr (std::is_same_v<T, family::AsyIndep>) return asymptotic_independence(s.p);
        else if constexpr (std::is_same_v<T, family::Logistic>) return logistic_generator(s.params);
        else if constexpr (std::is_same_v<T, family::HuslerReiss>) return hr_generator(s.params);
        else if constexpr (std::is_same_v<T, family::TGaussian>) return tgauss_generator(s.params);
        else return empirical(s.rows, s.path.empty() ? "empirical" : s.path);
      },
      f);
}

}  // namespace mgpx
