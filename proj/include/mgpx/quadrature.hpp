#pragma once

// One-dimensional adaptive quadrature over the real line (for the t-integrals
// of the MGP density formulas) and a composite Gauss rule for 2-D checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mgpx/core.hpp"

namespace mgpx {

struct QuadConfig {
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  double t_lo = -40.0;
  double t_hi = 40.0;
  int max_doublings = 6;
  unsigned max_depth = 15;
  double panel_width = 2.0;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw DomainError("QuadConfig: tolerances must be positive");
    if (!(t_lo < t_hi)) throw DomainError("QuadConfig: t_lo must be below t_hi");
    if (!(panel_width > 0.0)) throw DomainError("QuadConfig: panel width must be positive");
  }
};

/// Integral of a nonnegative, exponentially decaying f over R. The window
/// [t_lo, t_hi] doubles until both endpoint values drop below abs_tol; the
/// support inside the window is located on a scan grid and split into
/// panels, each integrated by adaptive Gauss-Kronrod (61 points).
/// Throws QuadratureError when the summed error estimate misses tolerance.
inline Estimate integrate_real_line(const std::function<double(double)>& f, const QuadConfig& cfg = {}) {
  cfg.validate();
  double a = cfg.t_lo, b = cfg.t_hi;
  for (int k = 0; k < cfg.max_doublings && std::abs(f(a)) >= cfg.abs_tol; ++k) a *= 2.0;
  for (int k = 0; k < cfg.max_doublings && std::abs(f(b)) >= cfg.abs_tol; ++k) b *= 2.0;
  const double fa = std::abs(f(a)), fb = std::abs(f(b));
  if (fa >= cfg.abs_tol || fb >= cfg.abs_tol) {
    throw QuadratureError("integrate_real_line: integrand does not decay within the window",
                          std::max(fa, fb) * (b - a));
  }

  const std::size_t scan = static_cast<std::size_t>(std::ceil((b - a) / 0.25));
  const double h = (b - a) / static_cast<double>(scan);
  std::vector<double> fx(scan + 1);
  double fmax = 0.0;
  for (std::size_t i = 0; i <= scan; ++i) {
    fx[i] = std::abs(f(a + h * static_cast<double>(i)));
    fmax = std::max(fmax, fx[i]);
  }
  if (fmax == 0.0) return {0.0, 0.0, {}};
  const double floor = fmax * 1e-18;
  std::size_t first = 0, last = scan;
  while (first < scan && fx[first] <= floor) ++first;
  while (last > 0 && fx[last] <= floor) --last;
  const double lo = a + h * static_cast<double>(first > 0 ? first - 1 : 0);
  const double hi = a + h * static_cast<double>(std::min(scan, last + 1));

  const std::size_t panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / cfg.panel_width)));
  const double w = (hi - lo) / static_cast<double>(panels);
  double total = 0.0, err = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    double e = 0.0;
    const double x0 = lo + w * static_cast<double>(p);
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, x0, p + 1 == panels ? hi : x0 + w, cfg.max_depth, cfg.rel_tol * 1e-2, &e);
    err += e;
  }
  // truncated tails: at most the edge value times a unit decay length
  err += (fa + fb);
  if (err > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total))) {
    throw QuadratureError("integrate_real_line: tolerance not met (achieved " + std::to_string(err) + ")",
                          err);
  }
  return {total, err, {}};
}

/// Composite fixed-order Gauss-Legendre integration of f over [lo, hi]
/// where either end may be infinite (mapped by x = c +- s t / (1 - t)).
/// Breakpoints strictly inside (lo, hi) start new segments.
class Composite {
 public:
  explicit Composite(std::size_t panels_per_segment = 24, double scale = 2.0)
      : panels_(panels_per_segment), scale_(scale) {}

  template <class F>
  double integrate(F&& f, double lo, double hi, std::vector<double> breaks = {}) const {
    std::vector<double> pts{lo};
    std::sort(breaks.begin(), breaks.end());
    for (double x : breaks) {
      if (x > pts.back() && x < hi) pts.push_back(x);
    }
    pts.push_back(hi);
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < pts.size(); ++s) total += segment(f, pts[s], pts[s + 1]);
    return total;
  }

 private:
  using Rule = boost::math::quadrature::gauss<double, 20>;

  template <class F>
  double panels(F&& g, double a, double b) const {
    double total = 0.0;
    const double w = (b - a) / static_cast<double>(panels_);
    for (std::size_t p = 0; p < panels_; ++p) {
      const double x0 = a + w * static_cast<double>(p);
      total += Rule::integrate(g, x0, x0 + w);
    }
    return total;
  }

  template <class F>
  double segment(F&& f, double a, double b) const {
    const double s = scale_;
    if (std::isfinite(a) && std::isfinite(b)) return panels(f, a, b);
    if (std::isfinite(a)) {
      return panels([&](double t) {
        const double d = 1.0 - t;
        return f(a + s * t / d) * s / (d * d);
      }, 0.0, 1.0);
    }
    if (std::isfinite(b)) {
      return panels([&](double t) {
        const double d = 1.0 - t;
        return f(b - s * t / d) * s / (d * d);
      }, 0.0, 1.0);
    }
    return segment(f, a, 0.0) + segment(f, 0.0, b);
  }

  std::size_t panels_;
  double scale_;
};

/// Integral of f(x1, x2) over {x1 in [lo1, hi1], x2 in [lo2(x1), hi2(x1)]}
/// with per-x1 inner breakpoints.
inline double integrate_2d(const std::function<double(double, double)>& f, double lo1, double hi1,
                           const std::vector<double>& breaks1,
                           const std::function<std::pair<double, double>(double)>& range2,
                           const std::function<std::vector<double>(double)>& breaks2,
                           const Composite& rule = Composite{}) {
  return rule.integrate(
      [&](double x1) {
        const auto [lo2, hi2] = range2(x1);
        if (!(lo2 < hi2)) return 0.0;
        return rule.integrate([&](double x2) { return f(x1, x2); }, lo2, hi2, breaks2(x1));
      },
      lo1, hi1, breaks1);
}

/// Integral of a density on the standard support L = {max z > 0} in D = 2.
/// Breakpoints follow the kinks of max z at z1 = 0 and z2 in {0, z1}.
inline double integrate_over_L2(const std::function<double(double, double)>& p,
                                const Composite& rule = Composite{}) {
  return integrate_2d(
      p, neg_inf, pos_inf, {0.0},
      [](double z1) { return std::pair{z1 > 0.0 ? neg_inf : 0.0, pos_inf}; },
      [](double z1) { return std::vector<double>{0.0, z1}; }, rule);
}

}  // namespace mgpx
