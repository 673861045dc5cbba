#pragma once

// Extended-real vectors, marginal GP/GEV maps, failure regions and the
// deterministic random-stream contract shared by the rest of the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace mgpx {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

// Branch switch for the xi -> 0 limit of the GP and GEV maps.
inline constexpr double xi_zero_tol = 1e-10;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Raised when a sampler cannot honour its contract (all coordinates at
/// -inf, an exhausted rejection bound, a too-extreme threshold, ...).
class GenerationError : public Error {
 public:
  using Error::Error;
};

class NotAbsolutelyContinuous : public DomainError {
 public:
  using DomainError::DomainError;
};

class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : Error(what), achieved_error(achieved) {}
  double achieved_error;
};

/// A Monte Carlo or numerical estimate with its standard error. Exact
/// values carry std_error == 0.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::vector<std::string> warnings;
};

inline void require_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw DimensionError(std::string(where) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

// ---------------------------------------------------------------------------
// XVec

/// A point of [-inf, inf)^D. Components are finite reals or -inf; +inf and
/// NaN are rejected on construction and on assignment.
///
/// Arithmetic follows IEEE with the extended-real reading spelled out:
/// -inf + finite = -inf, exp(-inf) = 0. The maximum of a vector ignores
/// -inf entries, and a vector whose entries are all -inf has no maximum.
class XVec {
 public:
  XVec() = default;
  explicit XVec(std::size_t dim, double fill = 0.0) : v_(dim, fill) { validate(); }
  XVec(std::initializer_list<double> values) : v_(values) { validate(); }
  explicit XVec(std::vector<double> values) : v_(std::move(values)) { validate(); }
  explicit XVec(std::span<const double> values) : v_(values.begin(), values.end()) {
    validate();
  }

  [[nodiscard]] std::size_t size() const { return v_.size(); }
  [[nodiscard]] double operator[](std::size_t j) const { return v_[j]; }
  [[nodiscard]] std::span<const double> span() const { return v_; }
  [[nodiscard]] const std::vector<double>& values() const { return v_; }
  [[nodiscard]] auto begin() const { return v_.begin(); }
  [[nodiscard]] auto end() const { return v_.end(); }

  void set(std::size_t j, double value) {
    check_component(value);
    v_.at(j) = value;
  }

  /// Largest finite component; throws when every component is -inf.
  [[nodiscard]] double max() const { return max_of(v_); }

  static double max_of(std::span<const double> x) {
    double m = neg_inf;
    for (double xj : x) m = std::max(m, xj);
    if (m == neg_inf) throw DomainError("XVec: maximum of an all -inf vector is undefined");
    return m;
  }

  friend bool operator==(const XVec&, const XVec&) = default;

 private:
  static void check_component(double x) {
    if (std::isnan(x)) throw DomainError("XVec: NaN component");
    if (x == pos_inf) throw DomainError("XVec: +inf is not a valid component");
  }
  void validate() const {
    if (v_.empty()) throw DimensionError("XVec: dimension must be at least 1");
    for (double x : v_) check_component(x);
  }

  std::vector<double> v_;
};

/// Row-major n x D matrix of extended reals (sample output).
struct XMatrix {
  XMatrix() = default;
  XMatrix(std::size_t n, std::size_t d) : rows(n), cols(d), data(n * d, 0.0) {}

  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
  [[nodiscard]] std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  [[nodiscard]] double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  [[nodiscard]] std::vector<double> column(std::size_t j) const {
    std::vector<double> c(rows);
    for (std::size_t i = 0; i < rows; ++i) c[i] = data[i * cols + j];
    return c;
  }
};

// ---------------------------------------------------------------------------
// Order relation and marginal maps

/// x is not below u: some coordinate of x strictly exceeds the matching
/// coordinate of u. Entries of u may be +inf (that coordinate never exceeds).
inline bool exceeds(std::span<const double> x, std::span<const double> u) {
  require_same_dim(x.size(), u.size(), "exceeds");
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] > u[j]) return true;
  }
  return false;
}

inline bool exceeds(const XVec& x, const XVec& u) { return exceeds(x.span(), u.span()); }

/// Marginal parameters of an MGP vector: scale sigma_j > 0 and shape xi_j.
struct MarginParams {
  std::vector<double> sigma;
  std::vector<double> xi;

  MarginParams() = default;
  MarginParams(std::vector<double> s, std::vector<double> x) : sigma(std::move(s)), xi(std::move(x)) {
    validate();
  }
  /// Standard margins (1, 0) in dimension d.
  static MarginParams standard(std::size_t d) {
    return {std::vector<double>(d, 1.0), std::vector<double>(d, 0.0)};
  }

  [[nodiscard]] std::size_t dim() const { return sigma.size(); }

  void validate() const {
    require_same_dim(sigma.size(), xi.size(), "MarginParams");
    if (sigma.empty()) throw DimensionError("MarginParams: empty");
    for (double s : sigma) {
      if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("MarginParams: sigma must be positive");
    }
    for (double x : xi) {
      if (!std::isfinite(x)) throw DomainError("MarginParams: xi must be finite");
    }
  }

  [[nodiscard]] bool is_standard() const {
    return std::all_of(sigma.begin(), sigma.end(), [](double s) { return s == 1.0; }) &&
           std::all_of(xi.begin(), xi.end(), [](double x) { return x == 0.0; });
  }
};

/// sigma (e^{xi z} - 1) / xi, with the linear limit sigma z at xi = 0.
inline double gp_margin(double z, double sigma, double xi) {
  if (!(sigma > 0.0)) throw DomainError("gp_margin: sigma must be positive");
  if (std::isnan(z) || z == pos_inf) throw DomainError("gp_margin: z must lie in [-inf, inf)");
  if (std::abs(xi) < xi_zero_tol) return sigma * z;
  if (z == neg_inf) return xi > 0.0 ? -sigma / xi : neg_inf;
  return sigma * std::expm1(xi * z) / xi;
}

/// Inverse of gp_margin: log(1 + xi y / sigma) / xi, or y / sigma at xi = 0.
/// The lower endpoint -sigma/xi (xi > 0) maps back to -inf.
inline double gp_margin_inverse(double y, double sigma, double xi) {
  if (!(sigma > 0.0)) throw DomainError("gp_margin_inverse: sigma must be positive");
  if (std::isnan(y) || y == pos_inf) throw DomainError("gp_margin_inverse: y must lie in [-inf, inf)");
  if (std::abs(xi) < xi_zero_tol) return y / sigma;
  if (y == neg_inf) {
    if (xi > 0.0) throw DomainError("gp_margin_inverse: -inf is below the lower endpoint");
    return neg_inf;
  }
  const double arg = xi * y / sigma;
  if (arg < -1.0) throw DomainError("gp_margin_inverse: y outside the range of the GP map");
  if (arg == -1.0) {
    if (xi > 0.0) return neg_inf;
    throw DomainError("gp_margin_inverse: y at the upper endpoint");
  }
  return std::log1p(arg) / xi;
}

/// Univariate GP(sigma, xi) distribution function on [0, inf).
inline double gp_cdf(double y, double sigma, double xi) {
  if (!(sigma > 0.0)) throw DomainError("gp_cdf: sigma must be positive");
  if (std::isnan(y)) throw DomainError("gp_cdf: NaN argument");
  if (y <= 0.0) return 0.0;
  if (std::abs(xi) < xi_zero_tol) return -std::expm1(-y / sigma);
  const double t = 1.0 + xi * y / sigma;
  if (t <= 0.0) return 1.0;
  return -std::expm1(-std::log(t) / xi);
}

/// GEV(mu, sigma, xi) distribution function; the Gumbel limit at xi = 0.
inline double gev_cdf(double x, double mu, double sigma, double xi) {
  if (!(sigma > 0.0)) throw DomainError("gev_cdf: sigma must be positive");
  if (std::isnan(x)) throw DomainError("gev_cdf: NaN argument");
  if (x == pos_inf) return 1.0;
  if (x == neg_inf) return 0.0;
  const double s = (x - mu) / sigma;
  if (std::abs(xi) < xi_zero_tol) return std::exp(-std::exp(-s));
  const double t = 1.0 + xi * s;
  if (t <= 0.0) return xi > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::pow(t, -1.0 / xi));
}

// ---------------------------------------------------------------------------
// Regions

/// Failure sets: {x : x not<= u}, closed boxes and finite unions thereof.
/// Bounds are plain doubles so that +inf (no constraint) can be expressed.
class Region {
 public:
  struct NotBelow {
    std::vector<double> u;
  };
  struct Box {
    std::vector<double> lo;
    std::vector<double> hi;
  };
  struct Union {
    std::size_t dim = 0;
    std::vector<Region> parts;
  };

  static Region not_below(std::vector<double> u) {
    check_bounds(u, "Region::not_below");
    return Region(NotBelow{std::move(u)});
  }
  static Region box(std::vector<double> lo, std::vector<double> hi) {
    require_same_dim(lo.size(), hi.size(), "Region::box");
    check_bounds(lo, "Region::box");
    check_bounds(hi, "Region::box");
    return Region(Box{std::move(lo), std::move(hi)});
  }
  /// {x : x_j >= level}, all other coordinates free.
  static Region half_space(std::size_t dim, std::size_t j, double level) {
    std::vector<double> lo(dim, neg_inf);
    lo.at(j) = level;
    return box(std::move(lo), std::vector<double>(dim, pos_inf));
  }
  static Region union_of(std::size_t dim, std::vector<Region> parts) {
    for (const auto& p : parts) require_same_dim(p.dim(), dim, "Region::union_of");
    return Region(Union{dim, std::move(parts)});
  }

  [[nodiscard]] std::size_t dim() const {
    return std::visit(
        [](const auto& r) -> std::size_t {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, NotBelow>) return r.u.size();
          else if constexpr (std::is_same_v<T, Box>) return r.lo.size();
          else return r.dim;
        },
        kind_);
  }

  [[nodiscard]] bool contains(std::span<const double> x) const {
    require_same_dim(x.size(), dim(), "Region::contains");
    return std::visit(
        [&](const auto& r) -> bool {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, NotBelow>) {
            return exceeds(x, r.u);
          } else if constexpr (std::is_same_v<T, Box>) {
            for (std::size_t j = 0; j < x.size(); ++j) {
              if (x[j] < r.lo[j] || x[j] > r.hi[j]) return false;
            }
            return true;
          } else {
            return std::any_of(r.parts.begin(), r.parts.end(),
                               [&](const Region& p) { return p.contains(x); });
          }
        },
        kind_);
  }

  /// A level b with max(x) >= b for every member x; -inf when the region is
  /// not bounded away from -inf and +inf when it is empty.
  [[nodiscard]] double max_lower_bound() const {
    return std::visit(
        [](const auto& r) -> double {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, NotBelow>) {
            double b = pos_inf;
            for (double uj : r.u) {
              if (uj < pos_inf) b = std::min(b, uj);
            }
            return b;
          } else if constexpr (std::is_same_v<T, Box>) {
            for (std::size_t j = 0; j < r.lo.size(); ++j) {
              if (r.lo[j] > r.hi[j]) return pos_inf;
            }
            return *std::max_element(r.lo.begin(), r.lo.end());
          } else {
            double b = pos_inf;
            for (const auto& p : r.parts) b = std::min(b, p.max_lower_bound());
            return b;
          }
        },
        kind_);
  }

  [[nodiscard]] bool bounded_away() const { return max_lower_bound() > neg_inf; }
  [[nodiscard]] bool empty_by_construction() const { return max_lower_bound() == pos_inf; }

  /// B + t (the scalar is added to every coordinate).
  [[nodiscard]] Region translated(double t) const {
    return map_bounds([t](double b) { return b + t; });
  }

  /// {x : e^x in B} for a Pareto-scale region B in [0, inf)^D.
  [[nodiscard]] Region log_image() const {
    return map_bounds([](double b) {
      if (b < 0.0) throw DomainError("Region::log_image: Pareto-scale bounds must be nonnegative");
      return b == 0.0 ? neg_inf : std::log(b);
    });
  }

  /// t B for t > 0 (Pareto scale).
  [[nodiscard]] Region scaled(double t) const {
    if (!(t > 0.0)) throw DomainError("Region::scaled: factor must be positive");
    return map_bounds([t](double b) { return b * t; });
  }

  [[nodiscard]] const auto& kind() const { return kind_; }

 private:
  using Kind = std::variant<NotBelow, Box, Union>;
  explicit Region(Kind k) : kind_(std::move(k)) {}

  static void check_bounds(const std::vector<double>& b, const char* where) {
    if (b.empty()) throw DimensionError(std::string(where) + ": empty bound vector");
    for (double x : b) {
      if (std::isnan(x)) throw DomainError(std::string(where) + ": NaN bound");
    }
  }

  template <class F>
  [[nodiscard]] Region map_bounds(F f) const {
    auto apply = [&](std::vector<double> v) {
      // infinite bounds are left alone by every map we need
      for (double& x : v) {
        if (std::isfinite(x)) x = f(x);
      }
      return v;
    };
    return std::visit(
        [&](const auto& r) -> Region {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, NotBelow>) {
            return Region(NotBelow{apply(r.u)});
          } else if constexpr (std::is_same_v<T, Box>) {
            return Region(Box{apply(r.lo), apply(r.hi)});
          } else {
            std::vector<Region> parts;
            parts.reserve(r.parts.size());
            for (const auto& p : r.parts) parts.push_back(p.map_bounds(f));
            return Region(Union{r.dim, std::move(parts)});
          }
        },
        kind_);
  }

  Kind kind_;
};

// ---------------------------------------------------------------------------
// Random streams

/// A reproducible random stream identified by (seed, stream id). The same
/// pair always yields the same draws; distinct ids give independent streams.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x6d67u, 0x7078u};
    engine_.seed(seq);
  }

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }
  double normal() { return boost::random::normal_distribution<double>(0.0, 1.0)(engine_); }
  double exponential() { return boost::random::exponential_distribution<double>(1.0)(engine_); }
  double gamma(double shape) { return boost::random::gamma_distribution<double>(shape, 1.0)(engine_); }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// A child stream keyed on a value drawn from this one (advances *this).
  RngStream fork() { return RngStream(next_u64(), 0); }

  using engine_type = std::mt19937_64;
  engine_type& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  engine_type engine_;
};

}  // namespace mgpx
