#pragma once

// Closure of the MGP family under higher thresholds, sub-vectors and
// nonnegative linear maps. Each operation returns a model whose generator
// is a stored sample of the new S, obtained by exact rejection from the
// parent model.

#include <cmath>
#include <string>
#include <vector>

#include "mgpx/core.hpp"
#include "mgpx/generators.hpp"
#include "mgpx/mgp.hpp"

namespace mgpx {

/// Minimum acceptance rate of the rejection step.
inline constexpr double min_acceptance = 1e-3;

namespace detail {

/// Draws rows of `model` until `target` rows are accepted by
/// map(row, out) (which writes the derived row and returns true on
/// acceptance). Throws GenerationError when the acceptance rate is below
/// min_acceptance.
template <class Map>
XMatrix rejection_rows(const MgpModel& model, std::size_t out_dim, std::size_t target, RngStream& rng,
                       Map&& map, double& rate, const std::string& what) {
  if (target == 0) throw DomainError(what + ": budget must be positive");
  XMatrix out(target, out_dim);
  std::size_t accepted = 0, drawn = 0;
  std::vector<double> buf(out_dim);
  double est_rate = 1.0;
  while (accepted < target) {
    const double want = static_cast<double>(target - accepted) / std::max(est_rate, min_acceptance);
    const auto n = static_cast<std::size_t>(std::clamp(1.1 * want + 1000.0, 1e4, 4e6));
    RngStream round = rng.fork();
    const XMatrix y = sample(model, round, n);
    drawn += n;
    for (std::size_t i = 0; i < n && accepted < target; ++i) {
      if (map(y.row(i), std::span<double>(buf))) {
        std::copy(buf.begin(), buf.end(), out.row(accepted).begin());
        ++accepted;
      }
    }
    est_rate = static_cast<double>(accepted) / static_cast<double>(drawn);
    const bool settled = drawn >= 100'000 || accepted >= target;
    if (settled && est_rate < min_acceptance) {
      throw GenerationError(what + ": acceptance rate " + std::to_string(est_rate) +
                            " is below 0.1%; threshold too extreme for this budget");
    }
  }
  rate = static_cast<double>(accepted) / static_cast<double>(drawn);
  return out;
}

inline SGenerator wrap_rows(XMatrix rows, const std::string& label, double rate) {
  SGenerator g = empirical(std::move(rows), label);
  GeneratorInfo info = g.info();
  info.acceptance_rate = rate;
  return g.with_info(std::move(info));
}

}  // namespace detail

/// Generator of S_u: rows Z = E + S with Z not<= u, mapped to
/// (Z - u) - max(Z - u). `budget` is the number of accepted rows stored.
inline SGenerator threshold_stabilize(const SGenerator& gen, const std::vector<double>& u, std::size_t budget,
                                      RngStream& rng) {
  require_same_dim(u.size(), gen.dim(), "threshold_stabilize");
  for (double v : u) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("threshold_stabilize: u must be finite and >= 0");
  }
  double rate = 0.0;
  XMatrix rows = detail::rejection_rows(
      MgpModel(gen), gen.dim(), budget, rng,
      [&](std::span<const double> z, std::span<double> out) {
        if (!exceeds(z, u)) return false;
        double m = neg_inf;
        for (std::size_t j = 0; j < z.size(); ++j) {
          out[j] = z[j] - u[j];
          m = std::max(m, out[j]);
        }
        for (double& v : out) v -= m;
        return true;
      },
      rate, "threshold_stabilize");
  return detail::wrap_rows(std::move(rows), "threshold_stabilized(" + gen.info().label + ")", rate);
}

/// (Y - v | Y not<= v) ~ MGP(sigma + xi v, xi, S_u) with
/// u_j = log(1 + xi_j v_j / sigma_j) / xi_j.
inline MgpModel condition_on_threshold(const MgpModel& model, const std::vector<double>& v, std::size_t budget,
                                       RngStream& rng) {
  require_same_dim(v.size(), model.dim(), "condition_on_threshold");
  const auto& m = model.margins;
  std::vector<double> u(v.size()), sigma(v.size());
  bool all_zero = true;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!(v[j] >= 0.0) || !std::isfinite(v[j])) throw DomainError("condition_on_threshold: v must be finite and >= 0");
    sigma[j] = m.sigma[j] + m.xi[j] * v[j];
    if (!(sigma[j] > 0.0)) throw DomainError("condition_on_threshold: sigma_j + xi_j v_j must be positive");
    u[j] = gp_margin_inverse(v[j], m.sigma[j], m.xi[j]);
    all_zero = all_zero && v[j] == 0.0;
  }
  if (all_zero) return model;
  return {MarginParams(sigma, m.xi), threshold_stabilize(model.generator, u, budget, rng)};
}

/// MGP(sigma_J, xi_J, S^(J)) from rows with Z_J not<= 0, recentred by max Z_J.
inline MgpModel subvector(const MgpModel& model, const std::vector<std::size_t>& J, std::size_t budget,
                          RngStream& rng) {
  if (J.empty()) throw DimensionError("subvector: index set must be non-empty");
  std::vector<bool> seen(model.dim(), false);
  for (std::size_t j : J) {
    if (j >= model.dim()) throw DimensionError("subvector: index out of range");
    if (seen[j]) throw DomainError("subvector: repeated index");
    seen[j] = true;
  }
  bool identity = J.size() == model.dim();
  for (std::size_t k = 0; identity && k < J.size(); ++k) identity = J[k] == k;
  if (identity) return model;

  std::vector<double> sigma, xi;
  for (std::size_t j : J) {
    sigma.push_back(model.margins.sigma[j]);
    xi.push_back(model.margins.xi[j]);
  }
  double rate = 0.0;
  XMatrix rows = detail::rejection_rows(
      MgpModel(model.generator), J.size(), budget, rng,
      [&](std::span<const double> z, std::span<double> out) {
        double m = neg_inf;
        for (std::size_t k = 0; k < J.size(); ++k) {
          out[k] = z[J[k]];
          m = std::max(m, out[k]);
        }
        if (!(m > 0.0)) return false;
        for (double& x : out) x -= m;
        return true;
      },
      rate, "subvector");
  return {MarginParams(sigma, xi), detail::wrap_rows(std::move(rows), "subvector(" + model.generator.info().label + ")", rate)};
}

/// a * y with the convention 0 * (-inf) = 0.
inline double ext_dot(std::span<const double> a, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] == 0.0) continue;
    s += a[j] * y[j];
  }
  return s;
}

/// MGP(A sigma, xi 1, S_{sigma,xi,A}) for a common shape xi and a
/// nonnegative m x D matrix A (row-major), by rejection on A Y not<= 0.
inline MgpModel linear_transform(const MgpModel& model, const XMatrix& A, std::size_t budget, RngStream& rng) {
  require_same_dim(A.cols, model.dim(), "linear_transform");
  if (A.rows == 0) throw DimensionError("linear_transform: A has no rows");
  const double xi = model.margins.xi[0];
  for (double x : model.margins.xi) {
    if (x != xi) throw DomainError("linear_transform: all shape parameters must be equal");
  }
  for (double a : A.data) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("linear_transform: A must be finite and nonnegative");
  }
  const std::size_t m = A.rows;
  std::vector<double> sigma(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    sigma[i] = ext_dot(A.row(i), model.margins.sigma);
    if (!(sigma[i] > 0.0)) {
      throw GenerationError("linear_transform: row " + std::to_string(i + 1) + " of A never yields a positive value");
    }
  }
  std::vector<double> positive(m, 0.0);
  double rate = 0.0;
  XMatrix rows = detail::rejection_rows(
      model, m, budget, rng,
      [&](std::span<const double> y, std::span<double> out) {
        bool any = false;
        for (std::size_t i = 0; i < m; ++i) {
          out[i] = ext_dot(A.row(i), y);
          if (out[i] > 0.0) {
            positive[i] += 1.0;
            any = true;
          }
        }
        if (!any) return false;
        double mx = neg_inf;
        for (std::size_t i = 0; i < m; ++i) {
          // rounding can push a sum of endpoint values just past the endpoint
          const double arg = std::abs(xi) < xi_zero_tol ? 0.0 : xi * out[i] / sigma[i];
          if (xi > 0.0 && arg <= -1.0) out[i] = neg_inf;
          else if (xi < 0.0 && arg <= -1.0) out[i] = std::nextafter(-sigma[i] / xi, 0.0);
          if (out[i] > neg_inf) out[i] = gp_margin_inverse(out[i], sigma[i], xi);
          mx = std::max(mx, out[i]);
        }
        for (double& v : out) v -= mx;
        return true;
      },
      rate, "linear_transform");
  for (std::size_t i = 0; i < m; ++i) {
    if (positive[i] == 0.0) {
      throw GenerationError("linear_transform: row " + std::to_string(i + 1) +
                            " of A gave no positive value on any draw");
    }
  }
  return {MarginParams(sigma, std::vector<double>(m, xi)),
          detail::wrap_rows(std::move(rows), "linear_transform(" + model.generator.info().label + ")", rate)};
}

}  // namespace mgpx
