#include "sumrules/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sumrules/errors.hpp"
#include "sumrules/ldp.hpp"
#include "sumrules/measures.hpp"
#include "sumrules/opuc.hpp"
#include "sumrules/oprl.hpp"
#include "sumrules/schrodinger.hpp"

namespace sumrules::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::size_t kMinQuadPoints = 16;
constexpr std::size_t kMaxQuadPoints = std::size_t{1} << 22;

struct Common {
  std::string input;
  std::string output;
  std::string format = "json";
  std::optional<std::size_t> quad_points;
  std::optional<double> tolerance;
  std::uint64_t seed = McConfig{}.seed;
};

struct Outcome {
  std::string body;
  int status = kPass;
};

void add_common(CLI::App& app, Common& c) {
  app.add_option("-i,--input", c.input, "Input file, or an inline JSON string");
  app.add_option("-o,--output", c.output, "Report path (written atomically); stdout if omitted");
  app.add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--quad-points", c.quad_points, "Quadrature nodes (default $SUMRULES_QUAD_POINTS or 4096)");
  app.add_option("--tolerance", c.tolerance, "Pass threshold on the residual");
  app.add_option("--seed", c.seed, "Monte Carlo seed");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read input file \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Inline JSON if the text starts with '{' or '[' (after whitespace), a file path otherwise.
json load_json(const std::string& text, const std::string& what) {
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool inline_doc = first != std::string::npos && (text[first] == '{' || text[first] == '[');
  const std::string source = inline_doc ? text : read_file(text);
  try {
    return json::parse(source);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, source.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (source[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::ostringstream msg;
    msg << what << ": malformed JSON at line " << line << ", column " << column << ": " << e.what();
    throw InputError(msg.str());
  }
}

std::size_t resolve_quad_points(const Common& c) {
  std::size_t q = kDefaultQuadPoints;
  if (c.quad_points) {
    q = *c.quad_points;
  } else if (const char* env = std::getenv("SUMRULES_QUAD_POINTS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw InputError("SUMRULES_QUAD_POINTS must be a positive integer");
    q = static_cast<std::size_t>(v);
  }
  if (q < kMinQuadPoints || q > kMaxQuadPoints) {
    std::ostringstream msg;
    msg << "quad points " << q << " outside [" << kMinQuadPoints << ", " << kMaxQuadPoints << "]";
    throw InputError(msg.str());
  }
  return q;
}

// Exactly one of the inline flag value and --input must be given.
json primary_input(const std::string& flag_value, const std::string& flag_name, const Common& c) {
  if (!flag_value.empty() && !c.input.empty()) {
    throw InputError("give either " + flag_name + " or --input, not both");
  }
  if (flag_value.empty() && c.input.empty()) throw InputError("missing " + flag_name + " or --input");
  return load_json(flag_value.empty() ? c.input : flag_value, flag_value.empty() ? "--input" : flag_name);
}

std::string dump(const ordered_json& doc) { return doc.dump(2) + "\n"; }

Outcome render(const SumRuleReport& report, const Common& c) {
  return {c.format == "csv" ? to_csv(report) : dump(to_json(report)), report.passed() ? kPass : kToleranceFailure};
}

void write_atomically(const std::string& path, const std::string& body) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write output file \"" + path + "\"");
    out << body;
    out.flush();
    if (!out) throw InputError("failed writing output file \"" + path + "\"");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InputError("cannot move report into place at \"" + path + "\"");
  }
}

// "lo:hi:n" (inclusive, evenly spaced) or a JSON array of numbers.
std::vector<double> parse_grid(const std::string& text, const std::string& what) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos && text.find('[') == std::string::npos) {
    double lo = 0.0;
    double hi = 0.0;
    long n = 0;
    char c1 = 0;
    char c2 = 0;
    std::istringstream ss(text);
    if (!(ss >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1 || !(ss >> std::ws).eof()) {
      throw InputError(what + ": expected lo:hi:n or a JSON array");
    }
    for (long i = 0; i < n; ++i) {
      out.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return out;
  }
  const json doc = load_json(text, what);
  if (!doc.is_array()) throw InputError(what + ": expected a JSON array");
  for (const auto& v : doc) {
    if (!v.is_number()) throw InputError(what + ": non-numeric entry");
    out.push_back(v.get<double>());
  }
  if (out.empty()) throw InputError(what + ": empty grid");
  return out;
}

// --- subcommands ----------------------------------------------------------

struct SzegoArgs {
  std::string alphas;
};

Outcome run_szego(const SzegoArgs& a, const Common& c) {
  const VerblunskySeq alphas = verblunsky_from_json(primary_input(a.alphas, "--alphas", c));
  const double tol = c.tolerance.value_or(1e-6);
  return render(verify_szego(alphas, resolve_quad_points(c), tol), c);
}

struct KsArgs {
  std::string jacobi;
};

Outcome run_killip_simon(const KsArgs& a, const Common& c) {
  const JacobiParams jacobi = jacobi_from_json(primary_input(a.jacobi, "--jacobi", c));
  const double tol = c.tolerance.value_or(1e-6);
  return render(verify_killip_simon(jacobi, resolve_quad_points(c), tol), c);
}

struct KdvArgs {
  std::string potential;
  double depth = 2.0;
  double width = 1.0;
  double height = 1.0;
  double half_width = 1.0;
  std::optional<double> step;
  std::optional<double> extent;
  std::optional<double> cutoff;
  double e_max = 50.0;
  std::size_t n_energies = 400;
};

Outcome run_kdv(const KdvArgs& a, const Common& c) {
  json doc;
  if (a.potential == "sech2") {
    doc = {{"type", "named"}, {"name", "sech2"}, {"params", {{"depth", a.depth}}}};
  } else if (a.potential == "gaussian") {
    doc = {{"type", "named"}, {"name", "gaussian"}, {"params", {{"depth", a.depth}, {"width", a.width}}}};
  } else if (a.potential == "barrier") {
    doc = {{"type", "named"}, {"name", "barrier"}, {"params", {{"height", a.height}, {"half_width", a.half_width}}}};
  } else {
    doc = primary_input(a.potential, "--potential", c);
  }
  if (!doc.is_object()) throw InputError("--potential: expected a JSON object");
  if (a.step || a.extent || a.cutoff) {
    json grid = doc.value("grid", json::object());
    if (a.step) grid["step"] = *a.step;
    if (a.extent) grid["extent"] = *a.extent;
    if (a.cutoff) grid["cutoff"] = *a.cutoff;
    doc["grid"] = grid;
  }
  if (!(a.e_max > kKdvLowestEnergy)) throw InputError("--e-max must exceed 1e-6");
  if (a.n_energies < 2 || a.n_energies > 100000) throw InputError("--n-energies must be in [2, 100000]");
  const Potential potential = potential_from_json(doc);
  const double tol = c.tolerance.value_or(5e-3);
  return render(verify_kdv(potential, a.e_max, a.n_energies, tol), c);
}

struct RateArgs {
  std::string a_grid = "0.4:2.5:22";
  std::string energies = "2.05:6:40";
  bool mc = false;
  std::size_t n = McConfig{}.n;
  std::size_t trials = McConfig{}.trials;
  double delta = McConfig{}.delta;
  std::string method = "tilted";
};

Outcome run_rate_function(const RateArgs& a, const Common& c) {
  std::vector<double> grid = a.a_grid.empty() ? std::vector<double>{} : parse_grid(a.a_grid, "--a-grid");
  if (!c.input.empty()) {
    const json doc = load_json(c.input, "--input");
    if (!doc.is_object() || !doc.contains("a_grid")) throw InputError("--input: expected {\"a_grid\": [...]}");
    grid = parse_grid(doc.at("a_grid").dump(), "a_grid");
  }
  for (double x : grid) {
    if (!(x > 0.0)) throw InputError("--a-grid: entries must be positive");
  }
  const std::vector<double> energies = parse_grid(a.energies, "--energies");
  for (double e : energies) {
    if (!(std::abs(e) > 2.0)) throw InputError("--energies: entries must satisfy |E| > 2");
  }
  std::optional<McConfig> mc;
  if (a.mc) {
    if (a.n == 0) throw InputError("--n must be positive");
    if (a.trials < 10000) throw InputError("--trials must be at least 1e4");
    if (!(a.delta > 0.0)) throw InputError("--delta must be positive");
    mc = McConfig{a.n, a.trials, a.delta, c.seed, mc_method_from_string(a.method)};
  }
  const RateFunctionEstimate estimate = check_G_rate(grid, mc);
  const double tol = c.tolerance.value_or(1e-8);
  const bool passed = estimate.max_legendre_error() <= tol;
  if (c.format == "csv") return {to_csv(estimate), passed ? kPass : kToleranceFailure};

  ordered_json doc;
  doc["rule"] = "rate-function";
  doc["tolerance"] = tol;
  doc["passed"] = passed;
  doc["convention_note"] =
      "G(a) = a^2 - 1 - log a^2 = Lambda*(a^2), Lambda(l) = -log(1 - l) for unit-mean exponentials; "
      "MC estimates -(1/n) log P(|S_n - a^2| <= delta) and carries an O(log n / n) finite-n bias";
  doc["estimate"] = to_json(estimate);
  ordered_json rows = ordered_json::array();
  for (const auto& r : potential_relation(energies)) {
    rows.push_back({{"energy", r.energy},
                    {"F", r.f_value},
                    {"log_potential", r.potential},
                    {"residual_F_minus_E2/4_plus_U_plus_1/2", r.relation_residual}});
  }
  doc["potential_relation"] = rows;
  return {dump(doc), passed ? kPass : kToleranceFailure};
}

struct RoundtripArgs {
  std::string alphas;
  std::string jacobi;
  std::string measure;
  std::size_t count = 10;
};

double max_abs_diff(const std::vector<Complex>& x, const std::vector<Complex>& y) {
  double e = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    e = std::max({e, std::abs(x[i].real() - y[i].real()), std::abs(x[i].imag() - y[i].imag())});
  }
  return e;
}

Outcome run_roundtrip(const RoundtripArgs& a, const Common& c) {
  const int given = !a.alphas.empty() + !a.jacobi.empty() + !a.measure.empty() + !c.input.empty();
  if (given != 1) throw InputError("roundtrip: give exactly one of --alphas, --jacobi, --measure, --input");
  const std::string text = !a.alphas.empty()   ? a.alphas
                           : !a.jacobi.empty() ? a.jacobi
                           : !a.measure.empty() ? a.measure
                                                : c.input;
  const json doc = load_json(text, "roundtrip input");
  std::string kind;
  if (!a.alphas.empty()) kind = "alphas";
  if (!a.jacobi.empty()) kind = "jacobi";
  if (!a.measure.empty()) kind = "measure";
  if (kind.empty()) {
    if (doc.is_array() || (doc.is_object() && doc.contains("alphas"))) {
      kind = "alphas";
    } else if (doc.is_object() && doc.contains("a")) {
      kind = "jacobi";
    } else {
      kind = "measure";
    }
  }
  const std::size_t qp = resolve_quad_points(c);
  ordered_json out;
  out["rule"] = "roundtrip";
  out["kind"] = kind;
  out["quad_points"] = qp;
  bool passed = true;
  if (kind == "alphas") {
    const VerblunskySeq alphas = verblunsky_from_json(doc);
    const double tol = c.tolerance.value_or(1e-8);
    const CircleMeasure mu = bernstein_szego_measure(alphas, qp);
    // Recover a few extra coefficients: they must vanish.
    const std::size_t extra = 3;
    const VerblunskySeq back = verblunsky_from_measure(mu, alphas.size() + extra);
    std::vector<Complex> expected = alphas.alphas();
    expected.resize(alphas.size() + extra, Complex(0.0, 0.0));
    const double err = max_abs_diff(expected, back.alphas());
    passed = err <= tol;
    out["input"] = to_json(alphas);
    out["recovered"] = to_json(back);
    out["max_componentwise_error"] = err;
    out["tolerance"] = tol;
  } else if (kind == "jacobi") {
    const JacobiParams jacobi = jacobi_from_json(doc);
    const double tol = c.tolerance.value_or(1e-6);
    const LineMeasure mu = spectral_measure(jacobi, qp);
    const std::size_t n = jacobi.tail_free_after() + 3;
    const JacobiParams back = jacobi_from_measure(mu, n);
    double err = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      err = std::max({err, std::abs(jacobi.a_at(k) - back.a_at(k)), std::abs(jacobi.b_at(k) - back.b_at(k))});
    }
    passed = err <= tol;
    out["input"] = to_json(jacobi);
    out["recovered"] = {{"a", back.a()}, {"b", back.b()}};
    out["max_componentwise_error"] = err;
    out["tolerance"] = tol;
  } else {
    if (!doc.is_object() || !doc.contains("kind")) {
      throw InputError("roundtrip: measure needs \"kind\": \"circle\" or \"line\"");
    }
    if (doc.at("kind") == "circle") {
      const CircleMeasure mu = circle_measure_from_json(doc);
      out["measure"] = "circle";
      out["recovered"] = to_json(verblunsky_from_measure(mu, a.count));
    } else {
      const LineMeasure mu = line_measure_from_json(doc);
      out["measure"] = "line";
      const JacobiParams back = jacobi_from_measure(mu, a.count);
      out["recovered"] = {{"a", back.a()}, {"b", back.b()}};
    }
    out["count"] = a.count;
  }
  out["passed"] = passed;
  if (c.format == "csv") {
    std::ostringstream csv;
    csv << std::setprecision(17) << "key,value\n";
    for (const auto& [k, v] : out.items()) {
      if (!v.is_structured()) csv << k << ',' << v.dump() << '\n';
    }
    return {csv.str(), passed ? kPass : kToleranceFailure};
  }
  return {dump(out), passed ? kPass : kToleranceFailure};
}

void report_error(std::ostream& err, const Error& e) {
  ordered_json payload;
  payload["error"] = e.kind();
  payload["message"] = e.what();
  if (const auto* ill = dynamic_cast<const IllConditionedError*>(&e)) payload["order"] = ill->order();
  err << payload.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral sum rules: Szego, Killip-Simon, KdV and their large-deviation rates", "sumrules"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sumrules 1.0.0");

  Common common;
  SzegoArgs szego;
  KsArgs ks;
  KdvArgs kdv;
  RateArgs rate;
  RoundtripArgs rt;

  auto* s_szego = app.add_subcommand("szego", "Szego-Verblunsky sum rule for a Bernstein-Szego measure");
  add_common(*s_szego, common);
  s_szego->add_option("--alphas", szego.alphas, "Verblunsky coefficients, e.g. '[[0.5,0]]'");

  auto* s_ks = app.add_subcommand("killip-simon", "Killip-Simon sum rule for an eventually free Jacobi matrix");
  add_common(*s_ks, common);
  s_ks->add_option("--jacobi", ks.jacobi, "e.g. '{\"a\":[1.2],\"b\":[0.5],\"tail_free_after\":1}'");

  auto* s_kdv = app.add_subcommand("kdv", "KdV (Faddeev-Zakharov) sum rule for a Schrodinger operator");
  add_common(*s_kdv, common);
  s_kdv->add_option("--potential", kdv.potential, "sech2 | gaussian | barrier | potential JSON")->required();
  s_kdv->add_option("--depth", kdv.depth, "Well depth for sech2 and gaussian");
  s_kdv->add_option("--width", kdv.width, "Gaussian width");
  s_kdv->add_option("--height", kdv.height, "Barrier height");
  s_kdv->add_option("--half-width", kdv.half_width, "Barrier half width");
  s_kdv->add_option("--step", kdv.step, "Integration step h");
  s_kdv->add_option("--extent", kdv.extent, "Half length L of the integration box");
  s_kdv->add_option("--cutoff", kdv.cutoff, "|V| cutoff defining the support");
  s_kdv->add_option("--e-max", kdv.e_max, "Upper end of the energy grid");
  s_kdv->add_option("--n-energies", kdv.n_energies, "Number of log-spaced energies");

  auto* s_rate = app.add_subcommand("rate-function", "G as the Cramer rate of exponential averages");
  add_common(*s_rate, common);
  s_rate->add_option("--a-grid", rate.a_grid, "lo:hi:n or JSON array of a > 0");
  s_rate->add_option("--energies", rate.energies, "Energies |E| > 2 for the F / log-potential table");
  s_rate->add_flag("--mc", rate.mc, "Add Monte Carlo rate estimates at x = a^2");
  s_rate->add_option("--n", rate.n, "Sample size of each average");
  s_rate->add_option("--trials", rate.trials, "Monte Carlo trials per grid point");
  s_rate->add_option("--delta", rate.delta, "Window half width");
  s_rate->add_option("--mc-method", rate.method, "tilted or naive")->check(CLI::IsMember({"tilted", "naive"}));

  auto* s_rt = app.add_subcommand("roundtrip", "Coefficients -> measure -> coefficients");
  add_common(*s_rt, common);
  s_rt->add_option("--alphas", rt.alphas, "Verblunsky coefficients");
  s_rt->add_option("--jacobi", rt.jacobi, "Jacobi parameters");
  s_rt->add_option("--measure", rt.measure, "Measure JSON (kind circle or line)");
  s_rt->add_option("--count", rt.count, "Coefficients to extract from --measure");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kInputError;
  }

  try {
    Outcome outcome;
    if (s_szego->parsed()) {
      outcome = run_szego(szego, common);
    } else if (s_ks->parsed()) {
      outcome = run_killip_simon(ks, common);
    } else if (s_kdv->parsed()) {
      outcome = run_kdv(kdv, common);
    } else if (s_rate->parsed()) {
      outcome = run_rate_function(rate, common);
    } else {
      outcome = run_roundtrip(rt, common);
    }
    if (common.output.empty()) {
      out << outcome.body;
    } else {
      write_atomically(common.output, outcome.body);
    }
    return outcome.status;
  } catch (const InputError& e) {
    report_error(err, e);
    return kInputError;
  } catch (const Error& e) {
    report_error(err, e);
    return kNumericalError;
  } catch (const json::exception& e) {
    err << ordered_json{{"error", "input"}, {"message", e.what()}}.dump() << '\n';
    return kInputError;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("sumrules");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace sumrules::cli
