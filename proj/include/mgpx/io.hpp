#pragma once

// Model specification files (JSON) and CSV interchange.
//
// A spec names a dependence family and optional GP margins:
//
//   {
//     "dimension": 2,
//     "generator": {"type": "husler_reiss",
//                   "params": {"mu": [0, 0], "Sigma": [[1, 0.5], [0.5, 1]]}},
//     "margins": {"sigma": [1, 2], "xi": [0.1, -0.1]}
//   }
//
// "family" is accepted in place of "generator". Types: complete_dep,
// asy_indep {p}, logistic {alpha}, husler_reiss {mu, Sigma},
// t_gaussian {mu, Sigma}, empirical {path} (a CSV of S rows, resolved
// relative to the spec file).

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgpx/core.hpp"
#include "mgpx/parametric.hpp"

namespace mgpx::io {

using json = nlohmann::ordered_json;

class SpecError : public Error {
 public:
  using Error::Error;
};

struct ModelSpec {
  std::size_t dimension = 0;
  FamilySpec family;
  MarginParams margins;
};

// ---------------------------------------------------------------------------
// Number formatting

/// Shortest decimal that round-trips; -inf is written as "-inf".
inline std::string format_double(double x) {
  if (x == neg_inf) return "-inf";
  if (x == pos_inf) return "inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, res.ptr};
}

/// Parses a CSV field: a decimal number or the token "-inf".
inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "-inf") return neg_inf;
  if (s.empty()) throw DomainError("empty field");
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw DomainError("malformed number '" + std::string(s) + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------
// CSV

struct Table {
  std::vector<std::string> header;
  XMatrix values;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

/// Reads a numeric CSV with a mandatory header row.
inline Table read_csv(std::istream& in, const std::string& name = "csv") {
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw DomainError(name + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  t.header = split_csv_line(line);
  t.values.cols = t.header.size();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != t.values.cols) {
      throw DomainError(name + ": line " + std::to_string(lineno) + ": expected " + std::to_string(t.values.cols) +
                        " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      try {
        t.values.data.push_back(parse_double(fields[j]));
      } catch (const DomainError& e) {
        throw DomainError(name + ": line " + std::to_string(lineno) + ", column " + std::to_string(j + 1) + ": " +
                          e.what());
      }
    }
    ++t.values.rows;
  }
  return t;
}

inline Table read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path.string());
  return read_csv(in, path.string());
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& header, const XMatrix& m) {
  require_same_dim(header.size(), m.cols, "write_csv");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

inline std::vector<std::string> default_header(const std::string& prefix, std::size_t d) {
  std::vector<std::string> h;
  for (std::size_t j = 0; j < d; ++j) h.push_back(prefix + std::to_string(j + 1));
  return h;
}

// ---------------------------------------------------------------------------
// Spec parsing

namespace detail {

inline std::string location(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

[[noreturn]] inline void fail(const std::string& field, const std::string& msg) {
  throw SpecError("spec field '" + field + "': " + msg);
}

inline double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

inline std::vector<double> get_vector(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(get_number(j[i], field + "[" + std::to_string(i) + "]"));
  return v;
}

inline std::vector<std::vector<double>> get_matrix(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of rows");
  std::vector<std::vector<double>> m;
  for (std::size_t i = 0; i < j.size(); ++i) m.push_back(get_vector(j[i], field + "[" + std::to_string(i) + "]"));
  return m;
}

inline HuslerReissParams gaussian_params(const json& p, std::size_t d, const std::string& field) {
  if (!p.contains("Sigma")) fail(field + ".Sigma", "missing");
  const auto sigma = get_matrix(p["Sigma"], field + ".Sigma");
  std::vector<double> mu(d, 0.0);
  if (p.contains("mu")) mu = get_vector(p["mu"], field + ".mu");
  if (mu.size() != d) fail(field + ".mu", "length must equal dimension " + std::to_string(d));
  if (sigma.size() != d) fail(field + ".Sigma", "must be " + std::to_string(d) + " x " + std::to_string(d));
  try {
    return HuslerReissParams(mu, sigma);
  } catch (const Error& e) {
    fail(field + ".Sigma", e.what());
  }
}

}  // namespace detail

/// Parses a spec document; `base` resolves relative empirical paths.
inline ModelSpec parse_spec(const std::string& text, const std::filesystem::path& base = ".") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError("spec is not valid JSON at " + detail::location(text, e.byte > 0 ? e.byte - 1 : 0) + ": " +
                    e.what());
  }
  if (!doc.is_object()) throw SpecError("spec: top level must be a JSON object");
  ModelSpec spec;

  const bool has_family = doc.contains("family"), has_gen = doc.contains("generator");
  if (has_family == has_gen) detail::fail("generator", "exactly one of 'family' or 'generator' is required");
  const std::string key = has_family ? "family" : "generator";
  const json& g = doc[key];
  std::string type;
  json params = json::object();
  if (g.is_string()) {
    type = g.get<std::string>();
    if (doc.contains("params")) params = doc["params"];
  } else if (g.is_object()) {
    if (!g.contains("type") || !g["type"].is_string()) detail::fail(key + ".type", "missing or not a string");
    type = g["type"].get<std::string>();
    if (g.contains("params")) params = g["params"];
  } else {
    detail::fail(key, "expected an object {type, params} or a family name");
  }
  if (!params.is_object()) detail::fail(key + ".params", "expected an object");
  const std::string pf = key + ".params";

  std::size_t d = 0;
  if (doc.contains("dimension")) {
    const json& dj = doc["dimension"];
    if (!dj.is_number_integer() || dj.get<long long>() < 1) detail::fail("dimension", "expected a positive integer");
    d = dj.get<std::size_t>();
  }

  if (type == "complete_dep" || type == "complete_dependence") {
    if (d == 0) detail::fail("dimension", "required for complete_dep");
    spec.family = family::CompleteDep{d};
  } else if (type == "asy_indep" || type == "asymptotic_independence") {
    std::vector<double> p;
    if (params.contains("p")) {
      p = detail::get_vector(params["p"], pf + ".p");
    } else {
      if (d == 0) detail::fail("dimension", "required for asy_indep without p");
      p.assign(d, 1.0 / static_cast<double>(d));
    }
    try {
      (void)asymptotic_independence(p);
    } catch (const Error& e) {
      detail::fail(pf + ".p", e.what());
    }
    if (d == 0) d = p.size();
    spec.family = family::AsyIndep{p};
  } else if (type == "logistic") {
    if (d == 0) detail::fail("dimension", "required for logistic");
    if (!params.contains("alpha")) detail::fail(pf + ".alpha", "missing");
    LogisticParams lp{detail::get_number(params["alpha"], pf + ".alpha"), d};
    try {
      lp.validate();
    } catch (const Error& e) {
      detail::fail(pf + ".alpha", e.what());
    }
    spec.family = family::Logistic{lp};
  } else if (type == "husler_reiss" || type == "t_gaussian") {
    if (d == 0 && params.contains("Sigma") && params["Sigma"].is_array()) d = params["Sigma"].size();
    if (d == 0) detail::fail("dimension", "required");
    auto hp = detail::gaussian_params(params, d, pf);
    if (type == "husler_reiss") spec.family = family::HuslerReiss{hp};
    else spec.family = family::TGaussian{hp};
  } else if (type == "empirical") {
    if (!params.contains("path") || !params["path"].is_string()) detail::fail(pf + ".path", "missing or not a string");
    family::Empirical e;
    e.path = params["path"].get<std::string>();
    const std::filesystem::path file = std::filesystem::path(e.path).is_absolute() ? std::filesystem::path(e.path) : base / e.path;
    try {
      e.rows = read_csv_file(file).values;
      (void)empirical(e.rows);
    } catch (const Error& err) {
      detail::fail(pf + ".path", err.what());
    }
    if (d == 0) d = e.rows.cols;
    spec.family = std::move(e);
  } else {
    detail::fail(key + ".type", "unknown family '" + type + "'");
  }
  if (family_dim(spec.family) != d) {
    detail::fail("dimension", "declared " + std::to_string(d) + " but the family has dimension " +
                                  std::to_string(family_dim(spec.family)));
  }
  spec.dimension = d;

  spec.margins = MarginParams::standard(d);
  if (doc.contains("margins")) {
    const json& m = doc["margins"];
    if (!m.is_object()) detail::fail("margins", "expected an object {sigma, xi}");
    std::vector<double> sigma(d, 1.0), xi(d, 0.0);
    if (m.contains("sigma")) sigma = detail::get_vector(m["sigma"], "margins.sigma");
    if (m.contains("xi")) xi = detail::get_vector(m["xi"], "margins.xi");
    if (sigma.size() != d) detail::fail("margins.sigma", "length must equal dimension " + std::to_string(d));
    if (xi.size() != d) detail::fail("margins.xi", "length must equal dimension " + std::to_string(d));
    for (std::size_t j = 0; j < d; ++j) {
      if (!(sigma[j] > 0.0)) detail::fail("margins.sigma[" + std::to_string(j) + "]", "must be positive");
    }
    spec.margins = MarginParams(sigma, xi);
  }
  return spec;
}

inline ModelSpec read_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

/// Canonical JSON form of a spec (generator object, explicit margins).
inline json to_json(const ModelSpec& spec) {
  json gen;
  json params = json::object();
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        auto gaussian = [&](const HuslerReissParams& p) {
          std::vector<double> mu(p.mu.data(), p.mu.data() + p.mu.size());
          std::vector<std::vector<double>> sig(p.dim(), std::vector<double>(p.dim()));
          for (std::size_t i = 0; i < p.dim(); ++i) {
            for (std::size_t j = 0; j < p.dim(); ++j) {
              sig[i][j] = p.Sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
          }
          params["mu"] = mu;
          params["Sigma"] = sig;
        };
        if constexpr (std::is_same_v<T, family::CompleteDep>) {
          gen["type"] = "complete_dep";
        } else if constexpr (std::is_same_v<T, family::AsyIndep>) {
          gen["type"] = "asy_indep";
          params["p"] = s.p;
        } else if constexpr (std::is_same_v<T, family::Logistic>) {
          gen["type"] = "logistic";
          params["alpha"] = s.params.alpha;
        } else if constexpr (std::is_same_v<T, family::HuslerReiss>) {
          gen["type"] = "husler_reiss";
          gaussian(s.params);
        } else if constexpr (std::is_same_v<T, family::TGaussian>) {
          gen["type"] = "t_gaussian";
          gaussian(s.params);
        } else {
          gen["type"] = "empirical";
          params["path"] = s.path;
        }
      },
      spec.family);
  gen["params"] = params;
  json doc;
  doc["dimension"] = spec.dimension;
  doc["generator"] = gen;
  doc["margins"] = {{"sigma", spec.margins.sigma}, {"xi", spec.margins.xi}};
  return doc;
}

inline std::string family_name(const FamilySpec& f) {
  static const char* names[] = {"complete_dep", "asy_indep", "logistic", "husler_reiss", "t_gaussian", "empirical"};
  return names[f.index()];
}

}  // namespace mgpx::io
