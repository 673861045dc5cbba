// mgpx: simulate, evaluate and check multivariate generalized Pareto models.
//
// Exit codes: 0 success, 1 verification failure, 2 spec / points / usage
// errors, 3 generation failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "mgpx/io.hpp"
#include "mgpx/mgp.hpp"
#include "mgpx/tailmeasure.hpp"
#include "mgpx/verify.hpp"

using namespace mgpx;
using json = io::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_verify = 1;
constexpr int exit_input = 2;
constexpr int exit_generation = 3;

/// Input error (bad points file, unsupported evaluation).
struct InputError : Error {
  using Error::Error;
};

struct Common {
  std::string spec;
  std::size_t n = 100'000;
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* app, Common& c, bool needs_spec, const std::string& default_format) {
  c.format = default_format;
  auto* s = app->add_option("--spec", c.spec, "model specification (JSON)");
  if (needs_spec) s->required();
  app->add_option("--n", c.n, "sample size / Monte Carlo draws")->check(CLI::PositiveNumber);
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--out", c.out, "output path (stdout when omitted)");
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
}

/// Writes `text` to the --out path or stdout.
void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw InputError("cannot open output file " + c.out);
  f << text;
}

json number(double v) {
  if (std::isfinite(v)) return v;
  return io::format_double(v);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Common& c) {
  const io::ModelSpec spec = io::read_spec_file(c.spec);
  const MgpModel model(spec.margins, family_generator(spec.family));
  RngStream rng(c.seed);
  const XMatrix y = sample(model, rng, c.n);
  const auto header = io::default_header("y", spec.dimension);
  std::ostringstream os;
  if (c.format == "csv") {
    io::write_csv(os, header, y);
  } else {
    json rows = json::array();
    for (std::size_t i = 0; i < y.rows; ++i) {
      json r = json::array();
      for (double v : y.row(i)) r.push_back(number(v));
      rows.push_back(std::move(r));
    }
    json doc;
    doc["columns"] = header;
    doc["rows"] = std::move(rows);
    os << doc.dump(2) << '\n';
  }
  emit(c, os.str());
  return exit_ok;
}

struct Evaluated {
  double value = 0.0;
  double std_error = 0.0;
  std::string provenance;
};

int cmd_eval(const Common& c, const std::string& what, const std::string& points_path) {
  const io::ModelSpec spec = io::read_spec_file(c.spec);
  io::Table pts;
  try {
    pts = io::read_csv_file(points_path);
  } catch (const Error& e) {
    throw InputError(std::string("points: ") + e.what());
  }
  const std::size_t d = spec.dimension;
  if (pts.values.cols != d) {
    throw InputError("points: " + std::to_string(pts.values.cols) + " columns, but the model has dimension " +
                     std::to_string(d));
  }
  const MgpModel model(spec.margins, family_generator(spec.family));
  const SGenerator& gen = model.generator;

  std::optional<TailFunctions> tail;
  if (what == "stdf" || what == "V" || what == "pickands") {
    RngStream trng(c.seed);
    tail = tail_functions(spec.family, trng, c.n);
  }
  auto tail_value = [&](std::span<const double> arg) {
    return Evaluated{tail->ell(arg), tail->ell_std_error(arg), tail->monte_carlo() ? "monte-carlo" : "closed-form"};
  };

  std::vector<Evaluated> results;
  for (std::size_t i = 0; i < pts.values.rows; ++i) {
    const auto y = pts.values.row(i);
    Evaluated r;
    try {
      if (what == "density") {
        bool called = false;
        Estimate e;
        const double v = density(model, y, [&](std::span<const double> z) {
          called = true;
          e = density_standard(gen, XVec(z));
          return e.value;
        });
        r.value = v;
        r.std_error = called && e.value > 0.0 ? v * e.std_error / e.value : 0.0;
        r.provenance = called && !gen.info().density_Z ? "quadrature" : "closed-form";
      } else if (what == "cdf") {
        RngStream prng(c.seed, i);
        const Estimate e = cdf(model, y, c.n, prng);
        r = {e.value, e.std_error,
             gen.tag() == GeneratorTag::CompleteDep || gen.tag() == GeneratorTag::AsyIndep ? "closed-form"
                                                                                            : "monte-carlo"};
      } else if (what == "stdf") {
        r = tail_value(y);
      } else if (what == "V") {
        std::vector<double> inv(d);
        for (std::size_t j = 0; j < d; ++j) {
          if (!(y[j] > 0.0)) throw DomainError("V: coordinates must be positive");
          inv[j] = 1.0 / y[j];
        }
        r = tail_value(inv);
        r.value = exponent_function(*tail, y);
      } else {
        r = tail_value(y);
        r.value = pickands(*tail, y);
      }
    } catch (const NotAbsolutelyContinuous& e) {
      throw InputError(e.what());
    } catch (const DomainError& e) {
      throw InputError("points: row " + std::to_string(i + 1) + ": " + e.what());
    }
    results.push_back(std::move(r));
  }

  std::ostringstream os;
  if (c.format == "csv") {
    for (const auto& h : pts.header) os << h << ',';
    os << "value,std_error,provenance\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      for (double v : pts.values.row(i)) os << io::format_double(v) << ',';
      os << io::format_double(results[i].value) << ',' << io::format_double(results[i].std_error) << ','
         << results[i].provenance << '\n';
    }
  } else {
    json rows = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
      json r;
      json p = json::array();
      for (double v : pts.values.row(i)) p.push_back(number(v));
      r["point"] = std::move(p);
      r["value"] = number(results[i].value);
      r["std_error"] = number(results[i].std_error);
      r["provenance"] = results[i].provenance;
      rows.push_back(std::move(r));
    }
    json doc;
    doc["what"] = what;
    doc["columns"] = pts.header;
    doc["results"] = std::move(rows);
    os << doc.dump(2) << '\n';
  }
  emit(c, os.str());
  return exit_ok;
}

int cmd_coef(const Common& c, const std::string& which) {
  const io::ModelSpec spec = io::read_spec_file(c.spec);
  const SGenerator gen = family_generator(spec.family);
  const std::size_t d = spec.dimension;
  const bool want_chi = which != "extremal", want_ext = which != "chi";
  if (want_chi && d != 2) throw InputError("coef: chi requires a bivariate model");

  auto exact_tag = gen.tag() == GeneratorTag::CompleteDep || gen.tag() == GeneratorTag::AsyIndep;
  json doc;
  doc["family"] = io::family_name(spec.family);
  doc["dimension"] = d;
  doc["n"] = c.n;
  doc["seed"] = c.seed;
  std::vector<std::string> warnings;
  std::optional<Estimate> chi_e, ext_e;
  if (want_chi) {
    RngStream rng(c.seed, 1);
    chi_e = chi(gen, c.n, rng);
    doc["chi"] = {{"value", chi_e->value},
                  {"std_error", chi_e->std_error},
                  {"provenance", exact_tag ? "closed-form" : "monte-carlo"}};
    warnings.insert(warnings.end(), chi_e->warnings.begin(), chi_e->warnings.end());
  }
  if (want_ext) {
    RngStream rng(c.seed, 2);
    ext_e = extremal_coefficient(gen, c.n, rng);
    doc["extremal"] = {{"value", ext_e->value},
                       {"std_error", ext_e->std_error},
                       {"provenance", gen.info().margin_means ? "closed-form" : "monte-carlo"}};
    warnings.insert(warnings.end(), ext_e->warnings.begin(), ext_e->warnings.end());
  }
  if (chi_e && ext_e) {
    const double resid = ext_e->value - (2.0 - chi_e->value);
    const double se = std::hypot(chi_e->std_error, ext_e->std_error);
    doc["identity"] = {{"relation", "extremal = 2 - chi"},
                       {"residual", resid},
                       {"joint_std_error", se},
                       {"within_3_std_errors", std::abs(resid) <= 3.0 * se}};
  }
  doc["warnings"] = warnings;

  std::ostringstream os;
  if (c.format == "json") {
    os << doc.dump(2) << '\n';
  } else {
    os << "quantity,value,std_error,provenance\n";
    for (const char* key : {"chi", "extremal"}) {
      if (!doc.contains(key)) continue;
      const auto& e = doc[key];
      os << key << ',' << io::format_double(e["value"].get<double>()) << ','
         << io::format_double(e["std_error"].get<double>()) << ',' << e["provenance"].get<std::string>() << '\n';
    }
    if (doc.contains("identity")) {
      os << "identity_residual," << io::format_double(doc["identity"]["residual"].get<double>()) << ','
         << io::format_double(doc["identity"]["joint_std_error"].get<double>()) << ",derived\n";
    }
  }
  emit(c, os.str());
  return exit_ok;
}

int cmd_verify(const Common& c, const std::string& suite, const std::string& tier, bool tamper) {
  verify::Options opt;
  opt.tier = tier == "full" ? verify::Tier::Full : verify::Tier::Quick;
  opt.seed = c.seed;
  opt.tamper = tamper;
  const verify::Report rep = verify::run(suite, opt);
  std::ostringstream os;
  if (c.format == "csv") {
    os << "suite,name,passed,statistic,comparison,threshold\n";
    for (const auto& k : rep.checks()) {
      os << k.suite << ',' << k.name << ',' << (k.passed ? "true" : "false") << ',' << io::format_double(k.statistic)
         << ',' << k.comparison << ',' << io::format_double(k.threshold) << '\n';
    }
  } else {
    os << rep.to_json(suite).dump(2) << '\n';
  }
  emit(c, os.str());
  return rep.all_passed() ? exit_ok : exit_verify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mgpx: multivariate generalized Pareto simulation and diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mgpx 1.0.0");

  Common sim, ev, co, ve;
  auto* s_sim = app.add_subcommand("simulate", "draw n rows from the model");
  add_common(s_sim, sim, true, "csv");

  auto* s_eval = app.add_subcommand("eval", "evaluate a model function at points read from a CSV file");
  add_common(s_eval, ev, true, "csv");
  std::string what, points;
  s_eval->add_option("--what", what, "function to evaluate")
      ->required()
      ->check(CLI::IsMember({"density", "cdf", "stdf", "V", "pickands"}));
  s_eval->add_option("--points", points, "CSV file of evaluation points (header row required)")->required();

  auto* s_coef = app.add_subcommand("coef", "tail dependence coefficients");
  add_common(s_coef, co, true, "json");
  std::string which = "both";
  s_coef->add_option("--which", which, "coefficient")->check(CLI::IsMember({"chi", "extremal", "both"}));

  auto* s_ver = app.add_subcommand("verify", "run the invariant suites");
  add_common(s_ver, ve, false, "json");
  std::string suite = "all", tier = "quick";
  bool tamper = false;
  s_ver->add_option("--suite", suite, "suite to run")
      ->check(CLI::IsMember({"mgp", "stability", "tail", "mev", "pointproc", "all"}));
  s_ver->add_option("--tier", tier, "budget tier")->check(CLI::IsMember({"quick", "full"}));
  s_ver->add_flag("--tamper", tamper, "negative control: replace every tolerance by an unattainable one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input;
  }

  try {
    if (*s_sim) return cmd_simulate(sim);
    if (*s_eval) return cmd_eval(ev, what, points);
    if (*s_coef) return cmd_coef(co, which);
    return cmd_verify(ve, suite, tier, tamper);
  } catch (const io::SpecError& e) {
    std::cerr << "mgpx: spec error: " << e.what() << '\n';
    return exit_input;
  } catch (const InputError& e) {
    std::cerr << "mgpx: " << e.what() << '\n';
    return exit_input;
  } catch (const GenerationError& e) {
    std::cerr << "mgpx: generation failed: " << e.what() << '\n';
    return exit_generation;
  } catch (const std::exception& e) {
    std::cerr << "mgpx: " << e.what() << '\n';
    return exit_generation;
  }
}
