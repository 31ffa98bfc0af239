#include "suspflow/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "suspflow/aniso.hpp"
#include "suspflow/ceiling.hpp"
#include "suspflow/dynamics.hpp"
#include "suspflow/genericity.hpp"
#include "suspflow/mixing.hpp"
#include "suspflow/spectral.hpp"
#include "suspflow/transversality.hpp"

namespace suspflow::experiment {

namespace {

constexpr const char* kGridLowerBound =
    "grid lower bound: m_value and n_value are maxima over sampled points; m_upper widens every overlap test";
constexpr const char* kFittedRate = "fitted rate: least-squares exponent over the sampled t window, not the limsup";
constexpr const char* kQuadrature = "midpoint quadrature on a finite grid of X_f";
constexpr const char* kProbeSampling =
    "sampled (c, sigma) combinations; the full Y(n) membership count is not evaluated";
constexpr const char* kClusterWindow = "cluster window uses theta_K from the C^3 surrogate of K";

const std::set<std::string> kRuntimeKeys{"workers", "output", "format"};

json defaults() {
  json t = json::object();
  t["ell"] = 2;
  t["mean"] = 1.0;
  t["harmonics"] = json::array();
  t["gamma0"] = 0.9;
  t["experiment"] = "";
  t["seed"] = 0;
  t["report_timing"] = false;
  t["workers"] = 1;
  t["output"] = "";
  t["format"] = "json";

  t["transversality"] = {{"t", {2.0, 4.0, 6.0, 8.0}},
                         {"nx", 32},
                         {"ns", 4},
                         {"nl", 16},
                         {"certified", true},
                         {"lambda_method", "periodic"},
                         {"lambda_horizon", 12.0},
                         {"lambda_nx", 1024},
                         {"lambda_ns", 8}};
  t["mixing"] = {{"grid", 4096},
                 {"depth", 0},
                 {"tol_strict", 0.0},
                 {"tol_clear", 0.0},
                 {"eigen_t", {0.7, 1.3}},
                 {"eigen_nx", 64},
                 {"eigen_ns", 8}};
  t["spectrum"] = {{"t", 1.0},         {"nx", 32},       {"ns", 4},
                   {"points_per_box", 64}, {"k", 8},         {"sampling", "lattice"},
                   {"dense_limit", 2048},  {"bound", true},  {"bound_nx", 16},
                   {"bound_ns", 4}};
  t["correlations"] = {{"t_max", 10.0}, {"t_step", 0.5},    {"nx", 128},      {"ns", 16},
                       {"psi", "cos_s"}, {"phi", "cos_s"}, {"cutoff", false}};
  t["norms"] = {{"n", 64},       {"h", 0.125},       {"functions", 10},
                {"eps", 0.25},   {"plus", {-0.5, 0.5}}, {"minus", {2.0, -2.0}}};
  t["genericity"] = {{"n_lo", 6},        {"n_hi", 12},        {"window_factor", 8.0},
                     {"probe_n", {4, 6, 8}}, {"samples", 2000},  {"epsilon", 0.05},
                     {"directions", 8},  {"plateau", 8.0},    {"y", 0.3},
                     {"eps0", 0.0},      {"mu", 0},           {"jac_points", 20},
                     {"tail", 4},        {"rho", 1.0},        {"gamma", 1.9},
                     {"alpha", 1.8},     {"beta", 1.7},       {"p", 3},
                     {"nu", 6},          {"N", 104}};
  t["branches"] = {{"x", 0.3}, {"s", 0.0}, {"t", 4.0}, {"theta", 0.0}, {"cap", 16777216}};
  return t;
}

bool is_section(const std::string& name) {
  const auto& names = experiment_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

// Splits "section.key" and locates the slot; null when the key is unknown.
json* locate(json& tree, const std::string& key) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) {
    if (is_section(key) || !tree.contains(key)) return nullptr;
    return &tree[key];
  }
  const std::string section = key.substr(0, dot);
  const std::string leaf = key.substr(dot + 1);
  if (!is_section(section) || !tree[section].contains(leaf)) return nullptr;
  return &tree[section][leaf];
}

[[noreturn]] void violation(const std::string& key, const std::string& message) {
  fail(ErrorCode::ValidationError, key + ": " + message,
       {{"violations", json::array({{{"key", key}, {"message", message}}})}});
}

[[noreturn]] void fail_violations(const std::vector<json>& problems) {
  std::string msg = std::to_string(problems.size()) + " configuration violation(s)";
  for (const auto& item : problems) msg += "; " + item["key"].get<std::string>() + ": " + item["message"].get<std::string>();
  fail(ErrorCode::ValidationError, msg, {{"violations", problems}});
}

json normalize_harmonics(const std::string& key, const json& value) {
  if (!value.is_array()) violation(key, "expected an array of [k, cos, sin] entries");
  json out = json::array();
  for (const auto& h : value) {
    json entry;
    if (h.is_array() && h.size() == 3) {
      entry = h;
    } else if (h.is_object() && h.contains("k")) {
      entry = json::array({h["k"], h.value("cos", 0.0), h.value("sin", 0.0)});
    } else {
      violation(key, "each harmonic is [k, cos, sin] or {\"k\", \"cos\", \"sin\"}");
    }
    if (!entry[0].is_number_integer()) violation(key, "harmonic index k must be an integer");
    if (!entry[1].is_number() || !entry[2].is_number()) violation(key, "harmonic coefficients must be numbers");
    out.push_back(entry);
  }
  return out;
}

json coerce(const std::string& key, const json& current, const json& value) {
  if (key == "harmonics") return normalize_harmonics(key, value);
  if (key == "correlations.psi" || key == "correlations.phi") {
    if (!value.is_string() && !value.is_object()) violation(key, "expected an observable name or object");
    return value;
  }
  if (current.is_boolean()) {
    if (!value.is_boolean()) violation(key, "expected true or false");
    return value;
  }
  if (current.is_string()) {
    if (!value.is_string()) violation(key, "expected a string");
    return value;
  }
  if (current.is_number_integer()) {
    if (value.is_number_integer()) return value;
    if (value.is_number_float() && std::floor(value.get<double>()) == value.get<double>() &&
        std::abs(value.get<double>()) < 9.0e15)
      return static_cast<long long>(value.get<double>());
    violation(key, "expected an integer");
  }
  if (current.is_number()) {
    if (!value.is_number()) violation(key, "expected a number");
    return value.get<double>();
  }
  if (current.is_array()) {
    if (!value.is_array()) violation(key, "expected an array");
    const bool integers = !current.empty() && current[0].is_number_integer();
    json out = json::array();
    for (const auto& v : value) {
      if (!v.is_number()) violation(key, "array entries must be numbers");
      if (integers) {
        if (!v.is_number_integer()) violation(key, "array entries must be integers");
        out.push_back(v);
      } else {
        out.push_back(v.get<double>());
      }
    }
    return out;
  }
  violation(key, "unsupported value");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool bare_word(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

[[noreturn]] void parse_error(std::size_t line, std::size_t column, const std::string& message) {
  fail(ErrorCode::ParseError,
       "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message,
       {{"line", line}, {"column", column}});
}

// Value text starting at 1-based column `column`.
json parse_value(const std::string& text, std::size_t line, std::size_t column) {
  if (text.empty()) parse_error(line, column, "missing value");
  if (bare_word(text) && text != "true" && text != "false" && text != "null") return text;
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    parse_error(line, column + offset, "malformed value");
  }
}

// Position of a '#' that starts a comment (outside string literals).
std::size_t comment_start(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
    } else if (c == '"') {
      in_string = true;
    } else if (c == '#') {
      return i;
    }
  }
  return std::string::npos;
}

ceiling::TrigPolynomial ceiling_of(const json& tree) {
  std::vector<ceiling::Harmonic> hs;
  for (const auto& h : tree["harmonics"]) hs.push_back({h[0].get<int>(), h[1].get<double>(), h[2].get<double>()});
  return {tree["ell"].get<int>(), tree["mean"].get<double>(), std::move(hs)};
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void dump_into(std::string& out, const json& v, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [k, item] : v.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(k).dump();
        out += indent < 0 ? ":" : ": ";
        dump_into(out, item, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        dump_into(out, item, indent, depth + 1);
      }
      newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float:
      out += format_double(v.get<double>());
      return;
    default:
      out += v.dump();
  }
}

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_structured()) return csv_cell(json(dump_json(v)));
  return v.dump();
}

// ---------------------------------------------------------------------------
// Validation

struct Checker {
  const json& tree;
  std::vector<json>& out;

  void add(const std::string& key, const std::string& message) {
    out.push_back({{"key", key}, {"message", message}});
  }
  double num(const std::string& section, const std::string& key) const {
    return tree[section][key].get<double>();
  }
  void positive_int(const std::string& section, const std::string& key, long long lo, long long hi) {
    const auto v = tree[section][key].get<long long>();
    if (v < lo || v > hi)
      add(section + "." + key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  void power_of_two(const std::string& section, const std::string& key) {
    const auto v = tree[section][key].get<long long>();
    if (v <= 0 || (v & (v - 1)) != 0) add(section + "." + key, "must be a power of 2");
  }
};

spectral::Observable observable_from(const json& spec, bool cutoff) {
  using Trig = spectral::Observable::Trig;
  spectral::Observable o;
  o.cutoff = cutoff;
  o.center = true;
  if (spec.is_string()) {
    const auto name = spec.get<std::string>();
    o.id = name;
    if (name == "cos_s") o.terms = {{1.0, 0, Trig::One, 1.0, Trig::Cos}};
    else if (name == "sin_s") o.terms = {{1.0, 0, Trig::One, 1.0, Trig::Sin}};
    else if (name == "cos_x") o.terms = {{1.0, 1, Trig::Cos, 0.0, Trig::One}};
    else if (name == "cos_x_cos_s") o.terms = {{1.0, 1, Trig::Cos, 1.0, Trig::Cos}};
    else fail(ErrorCode::ValidationError, "unknown observable '" + name + "'");
    return o;
  }
  auto trig = [](const json& j) {
    const auto s = j.get<std::string>();
    if (s == "one") return Trig::One;
    if (s == "cos") return Trig::Cos;
    if (s == "sin") return Trig::Sin;
    fail(ErrorCode::ValidationError, "observable factor must be one, cos or sin");
  };
  if (!spec.contains("terms") || !spec["terms"].is_array() || spec["terms"].empty())
    fail(ErrorCode::ValidationError, "observable object needs a non-empty \"terms\" array");
  for (const auto& t : spec["terms"]) {
    if (!t.is_array() || t.size() != 5)
      fail(ErrorCode::ValidationError, "observable term is [coeff, kx, fx, ks, fs]");
    o.terms.push_back({t[0].get<double>(), t[1].get<int>(), trig(t[2]), t[3].get<double>(), trig(t[4])});
  }
  o.cutoff = spec.value("cutoff", cutoff);
  o.center = spec.value("center", true);
  o.id = spec.value("id", std::string("custom"));
  return o;
}

void check_sections(const json& tree, std::vector<json>& out, const ceiling::TrigPolynomial* f) {
  Checker c{tree, out};
  // transversality
  {
    const auto& s = tree["transversality"];
    if (s["t"].empty()) c.add("transversality.t", "needs at least one time");
    for (const auto& t : s["t"])
      if (t.get<double>() < 0.0) c.add("transversality.t", "times must be non-negative");
    c.positive_int("transversality", "nx", 1, 4096);
    c.positive_int("transversality", "ns", 1, 1024);
    c.positive_int("transversality", "nl", 8, 1 << 16);
    const auto m = s["lambda_method"].get<std::string>();
    if (m != "periodic" && m != "grid") c.add("transversality.lambda_method", "must be periodic or grid");
    if (c.num("transversality", "lambda_horizon") < 1.0) c.add("transversality.lambda_horizon", "must be >= 1");
    if (m == "periodic" && c.num("transversality", "lambda_horizon") > 20.0)
      c.add("transversality.lambda_horizon", "periodic orbits are enumerated up to period 20");
    c.positive_int("transversality", "lambda_nx", 1, 1 << 16);
    c.positive_int("transversality", "lambda_ns", 1, 1024);
  }
  // mixing
  {
    c.power_of_two("mixing", "grid");
    if (tree["mixing"]["grid"].get<long long>() < 256) c.add("mixing.grid", "must be at least 256");
    const auto depth = tree["mixing"]["depth"].get<long long>();
    if (depth < 0 || depth > mixing::max_depth(tree["ell"].get<int>()))
      c.add("mixing.depth", "must lie in [0, " + std::to_string(mixing::max_depth(tree["ell"].get<int>())) +
                                "] (0 selects the maximum)");
    const double ts = c.num("mixing", "tol_strict");
    const double tc = c.num("mixing", "tol_clear");
    if (ts < 0.0 || tc < 0.0) c.add("mixing.tol_strict", "tolerances must be non-negative");
    if ((ts > 0.0) != (tc > 0.0)) c.add("mixing.tol_clear", "set both tolerances or neither");
    if (ts > 0.0 && tc > 0.0 && !(ts < tc)) c.add("mixing.tol_clear", "need tol_strict < tol_clear");
    for (const auto& t : tree["mixing"]["eigen_t"])
      if (t.get<double>() < 0.0) c.add("mixing.eigen_t", "times must be non-negative");
    c.positive_int("mixing", "eigen_nx", 1, 4096);
    c.positive_int("mixing", "eigen_ns", 1, 1024);
  }
  // spectrum
  {
    if (c.num("spectrum", "t") < 0.0) c.add("spectrum.t", "must be non-negative");
    c.positive_int("spectrum", "nx", 1, 1 << 16);
    c.positive_int("spectrum", "ns", 1, 1 << 16);
    const auto boxes = tree["spectrum"]["nx"].get<long long>() * tree["spectrum"]["ns"].get<long long>();
    if (boxes > (1 << 16)) c.add("spectrum.nx", "nx * ns must not exceed 2^16");
    c.positive_int("spectrum", "points_per_box", 16, 1 << 20);
    c.positive_int("spectrum", "k", 1, 32);
    const auto smp = tree["spectrum"]["sampling"].get<std::string>();
    if (smp != "lattice" && smp != "montecarlo") c.add("spectrum.sampling", "must be lattice or montecarlo");
    c.positive_int("spectrum", "dense_limit", 0, 1 << 16);
    c.positive_int("spectrum", "bound_nx", 1, 4096);
    c.positive_int("spectrum", "bound_ns", 1, 1024);
  }
  // correlations
  {
    if (c.num("correlations", "t_max") < 0.0) c.add("correlations.t_max", "must be non-negative");
    if (!(c.num("correlations", "t_step") > 0.0)) c.add("correlations.t_step", "must be positive");
    else if (c.num("correlations", "t_max") / c.num("correlations", "t_step") > 1e5)
      c.add("correlations.t_step", "at most 1e5 time samples");
    c.positive_int("correlations", "nx", 1, 1 << 14);
    c.positive_int("correlations", "ns", 1, 1 << 14);
    for (const char* k : {"psi", "phi"}) {
      try {
        observable_from(tree["correlations"][k], false);
      } catch (const Error& e) {
        c.add(std::string("correlations.") + k, e.what());
      }
    }
  }
  // norms
  {
    c.power_of_two("norms", "n");
    c.positive_int("norms", "n", 8, 1024);
    if (!(c.num("norms", "h") > 0.0)) c.add("norms.h", "must be positive");
    c.positive_int("norms", "functions", 1, 10000);
    const double eps = c.num("norms", "eps");
    if (!(eps > 0.0 && eps < 0.5)) c.add("norms.eps", "must lie in (0, 1/2)");
    for (const char* k : {"plus", "minus"})
      if (tree["norms"][k].size() != 2) c.add(std::string("norms.") + k, "cone is [slope_lo, slope_hi]");
    if (tree["norms"]["plus"].size() == 2 && tree["norms"]["minus"].size() == 2) {
      const aniso::ConeSpec plus{tree["norms"]["plus"][0].get<double>(), tree["norms"]["plus"][1].get<double>()};
      const aniso::ConeSpec minus{tree["norms"]["minus"][0].get<double>(), tree["norms"]["minus"][1].get<double>()};
      if (plus.intersects(minus)) c.add("norms.minus", "cones must meet only at the origin");
    }
  }
  // genericity
  {
    const auto& g = tree["genericity"];
    c.positive_int("genericity", "n_lo", 1, 20);
    c.positive_int("genericity", "n_hi", 1, 20);
    if (g["n_hi"].get<long long>() - g["n_lo"].get<long long>() < 2)
      c.add("genericity.n_hi", "need n_hi >= n_lo + 2 for the growth fit");
    if (std::pow(tree["ell"].get<double>(), g["n_hi"].get<double>()) > double(1 << 20))
      c.add("genericity.n_hi", "ell^n_hi must not exceed 2^20");
    if (!(c.num("genericity", "window_factor") > 0.0)) c.add("genericity.window_factor", "must be positive");
    if (g["probe_n"].empty()) c.add("genericity.probe_n", "needs at least one length");
    for (const auto& n : g["probe_n"])
      if (n.get<long long>() < 1 || n.get<long long>() > 64) c.add("genericity.probe_n", "lengths must lie in [1, 64]");
    c.positive_int("genericity", "samples", 1, 1 << 24);
    if (c.num("genericity", "epsilon") < 0.0) c.add("genericity.epsilon", "must be non-negative");
    c.positive_int("genericity", "directions", 0, 4096);
    if (!(c.num("genericity", "plateau") > 0.0)) c.add("genericity.plateau", "must be positive");
    const double y = c.num("genericity", "y");
    if (!(y >= 0.0 && y < 1.0)) c.add("genericity.y", "must lie in [0, 1)");
    const double eps0 = c.num("genericity", "eps0");
    if (eps0 < 0.0 || eps0 >= 0.5) c.add("genericity.eps0", "must lie in [0, 1/2) (0 selects the maximum)");
    c.positive_int("genericity", "mu", 0, 64);
    c.positive_int("genericity", "jac_points", 1, 100000);
    c.positive_int("genericity", "tail", 0, 40);
    c.positive_int("genericity", "p", 1, 64);
    c.positive_int("genericity", "nu", 1, 20);
    if (std::pow(tree["ell"].get<double>(), g["nu"].get<double>()) > 1024.0)
      c.add("genericity.nu", "ell^nu must not exceed 1024");
    const auto mu = g["mu"].get<long long>();
    if (mu != 0 && mu <= g["nu"].get<long long>()) c.add("genericity.mu", "must exceed nu (0 selects the default)");
  }
  // branches
  {
    const auto& b = tree["branches"];
    const double x = b["x"].get<double>();
    if (!(x >= 0.0 && x < 1.0)) c.add("branches.x", "must lie in [0, 1)");
    const double s = b["s"].get<double>();
    if (s < 0.0) c.add("branches.s", "must be non-negative");
    else if (f != nullptr && x >= 0.0 && x < 1.0 && s >= (*f)(x)) c.add("branches.s", "point must lie below the roof f(x)");
    if (b["t"].get<double>() < 0.0) c.add("branches.t", "must be non-negative");
    if (b["theta"].get<double>() < 0.0) c.add("branches.theta", "must be non-negative (0 selects theta_f)");
    c.positive_int("branches", "cap", 1, 1LL << 26);
  }
}

// ---------------------------------------------------------------------------
// Experiments

struct Context {
  const json& tree;
  const Exec& exec;
  ceiling::TrigPolynomial f;
  ceiling::CeilingClass cls;
  RunReport& report;
};


void run_transversality(Context& ctx) {
  const auto& s = ctx.tree["transversality"];
  json records = json::array();
  ctx.report.caveats = {kGridLowerBound, kFittedRate};
  std::vector<std::pair<double, double>> m_samples, n_samples;
  try {
    for (const auto& tj : s["t"]) {
      const double t = tj.get<double>();
      auto est = transversality::m_of_t(ctx.f, ctx.cls, t, s["nx"].get<int>(), s["ns"].get<int>(),
                                        s["certified"].get<bool>(), ctx.exec);
      const auto [nv, nu] = transversality::n_of_t(ctx.f, ctx.cls, t, s["nx"].get<int>(), s["ns"].get<int>(),
                                                   s["nl"].get<int>(), ctx.exec);
      records.push_back({{"t", t},
                         {"m_value", est.m_value},
                         {"m_upper", est.m_upper},
                         {"n_value", nv},
                         {"n_upper", nu},
                         {"grid", {{"nx", est.grid.nx}, {"ns", est.grid.ns}, {"nl", s["nl"].get<int>()}}},
                         {"slack", est.slack},
                         {"argmax_x", est.m_argmax.z.x},
                         {"argmax_s", est.m_argmax.z.s},
                         {"on_section", est.m_argmax.on_section}});
      m_samples.emplace_back(t, est.m_value);
      n_samples.emplace_back(t, nv);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ResourceLimit && e.code() != ErrorCode::NumericalFailure) throw;
    ctx.report.status = e.code();
    ctx.report.payload = {{"error", {{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}}},
                          {"records", records}};
    return;
  }
  json summary = {{"theta_f", ctx.cls.theta_f}, {"theta_K", ctx.cls.theta_K}, {"K", ctx.cls.K}};
  if (m_samples.size() >= 3) {
    const auto mf = transversality::exponent_fit(m_samples);
    const auto nf = transversality::exponent_fit(n_samples);
    summary["m_fitted_rate"] = mf.rate;
    summary["m_fit_residual"] = mf.log_residual;
    summary["n_fitted_rate"] = nf.rate;
    summary["n_fit_residual"] = nf.log_residual;
    for (auto& r : records) r["fitted_rate"] = mf.rate;
  } else {
    for (auto& r : records) r["fitted_rate"] = nullptr;
  }
  const bool periodic = s["lambda_method"].get<std::string>() == "periodic";
  try {
    const auto lm = transversality::lambda_min(
        ctx.f, periodic ? transversality::LambdaMethod::Periodic : transversality::LambdaMethod::Grid,
        s["lambda_horizon"].get<double>(), s["lambda_nx"].get<int>(), s["lambda_ns"].get<int>());
    summary["lambda_min"] = {{"method", periodic ? "periodic" : "grid"},
                             {"value", lm.value},
                             {"horizon", lm.horizon},
                             {"beta_max", lm.beta_max}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ResourceLimit) throw;
    ctx.report.status = e.code();
    ctx.report.payload = {{"error", {{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}}},
                          {"records", records}};
    return;
  }
  ctx.report.payload = {{"summary", summary}, {"records", records}};
}

void run_mixing(Context& ctx) {
  const auto& s = ctx.tree["mixing"];
  std::optional<mixing::Tolerances> tol;
  if (s["tol_strict"].get<double>() > 0.0)
    tol = mixing::Tolerances{s["tol_strict"].get<double>(), s["tol_clear"].get<double>()};
  const int depth = s["depth"].get<int>() == 0 ? -1 : s["depth"].get<int>();
  auto res = mixing::weak_mixing_test(ctx.f, tol, s["grid"].get<int>(), depth, ctx.exec);
  const auto& rep = res.report;
  json summary = {{"c", rep.c},
                  {"depth", rep.depth},
                  {"grid", rep.grid},
                  {"tail_bound", rep.tail_bound},
                  {"psi_mean", rep.psi_mean},
                  {"quadrature_tol", rep.quadrature_tol},
                  {"residual_sup", rep.residual_sup},
                  {"verdict", mixing::to_string(res.decision.verdict)},
                  {"tol_strict", res.decision.tol_strict},
                  {"tol_clear", res.decision.tol_clear}};
  if (res.decision.verdict == mixing::Verdict::NotWeaklyMixing) {
    std::vector<double> ts;
    for (const auto& t : s["eigen_t"]) ts.push_back(t.get<double>());
    summary["eigenfunction_defect"] =
        mixing::eigenfunction_check(rep, ctx.f, ts, res.decision.tol_strict, s["eigen_nx"].get<int>(),
                                    s["eigen_ns"].get<int>());
  }
  json records = json::array();
  const std::size_t stride = std::max<std::size_t>(1, rep.psi.size() / 64);
  for (std::size_t j = 0; j < rep.psi.size(); j += stride)
    records.push_back({{"x", static_cast<double>(j) / rep.psi.size()}, {"psi", rep.psi[j]}, {"Psi", rep.Psi[j]}});
  ctx.report.payload = {{"summary", summary}, {"records", records}};
}

// Ulam |lambda_2|, the correlation decay rate of the configured observables and
// the per-unit-time bound m(f,t)^{1/2t}, side by side.
json resonance_summary(Context& ctx, const spectral::SpectrumReport& rep,
                       const transversality::TransversalityEstimate& m, double t) {
  const auto& c = ctx.tree["correlations"];
  const bool cutoff = c["cutoff"].get<bool>();
  std::vector<double> ts;
  const double step = c["t_step"].get<double>();
  for (long long i = 0;; ++i) {
    const double ti = static_cast<double>(i) * step;
    if (ti > c["t_max"].get<double>() * (1.0 + 1e-12)) break;
    ts.push_back(ti);
  }
  const auto curve = spectral::correlation(ctx.f, observable_from(c["psi"], cutoff),
                                           observable_from(c["phi"], cutoff), ts, c["nx"].get<int>(),
                                           c["ns"].get<int>(), ctx.exec);
  spectral::DecayFit fit;
  try {
    fit = spectral::decay_fit(curve);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidArgument) throw;
    return nullptr;
  }
  const auto cmp = spectral::resonance_compare(rep, fit, m, {ctx.f.descriptor(), t});
  return {{"lambda2_abs", cmp.lambda2_abs},
          {"fitted_rate", cmp.fitted_rate},
          {"m_bound", cmp.m_bound},
          {"slack", cmp.slack},
          {"fit_within_bound", cmp.fit_within_bound},
          {"advisory", true}};
}

void run_spectrum(Context& ctx) {
  const auto& s = ctx.tree["spectrum"];
  ctx.report.caveats = {spectral::kDiscretizedSpectrumCaveat};
  const double t = s["t"].get<double>();
  const auto sampling = s["sampling"].get<std::string>() == "lattice" ? spectral::Sampling::Lattice
                                                                        : spectral::Sampling::MonteCarlo;
  try {
    const auto op = spectral::build_ulam(ctx.f, t, s["nx"].get<int>(), s["ns"].get<int>(),
                                         s["points_per_box"].get<int>(), ctx.tree["seed"].get<std::uint64_t>(),
                                         sampling, ctx.exec);
    auto rep = spectral::spectrum(op, s["k"].get<int>(), s["dense_limit"].get<std::size_t>());
    json summary = {{"t", t},
                    {"nx", op.nx},
                    {"ns", op.ns},
                    {"points_per_box", op.points_per_box},
                    {"sampling", s["sampling"]},
                    {"method", rep.method},
                    {"iterations", rep.iterations}};
    json eig = json::array();
    json records = json::array();
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
      const auto& l = rep.eigenvalues[i];
      eig.push_back({l.real(), l.imag()});
      records.push_back({{"index", i},
                         {"re", l.real()},
                         {"im", l.imag()},
                         {"modulus", std::abs(l)},
                         {"multiplicity", rep.multiplicity[i]}});
    }
    summary["eigenvalues"] = eig;
    summary["leading_gap"] = rep.eigenvalues.empty() ? 1.0 : std::abs(rep.eigenvalues[0] - 1.0);
    if (s["bound"].get<bool>() && t > 0.0) {
      const auto m = transversality::m_of_t(ctx.f, ctx.cls, t, s["bound_nx"].get<int>(),
                                            s["bound_ns"].get<int>(), true, ctx.exec);
      summary["m_value"] = m.m_value;
      summary["essential_bound"] = std::sqrt(m.m_value);
      ctx.report.caveats.emplace_back(kGridLowerBound);
      summary["resonance"] = resonance_summary(ctx, rep, m, t);
    }
    summary["caveat"] = spectral::kDiscretizedSpectrumCaveat;
    ctx.report.payload = {{"summary", summary}, {"records", records}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ResourceLimit && e.code() != ErrorCode::NumericalFailure) throw;
    ctx.report.status = e.code();
    ctx.report.payload = {{"error", {{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}}},
                          {"records", json::array()}};
  }
}

void run_correlations(Context& ctx) {
  const auto& s = ctx.tree["correlations"];
  ctx.report.caveats = {kQuadrature, kFittedRate};
  const bool cutoff = s["cutoff"].get<bool>();
  const auto psi = observable_from(s["psi"], cutoff);
  const auto phi = observable_from(s["phi"], cutoff);
  std::vector<double> ts;
  const double t_max = s["t_max"].get<double>();
  const double step = s["t_step"].get<double>();
  for (long long i = 0;; ++i) {
    const double t = static_cast<double>(i) * step;
    if (t > t_max * (1.0 + 1e-12)) break;
    ts.push_back(t);
  }
  const auto curve = spectral::correlation(ctx.f, psi, phi, ts, s["nx"].get<int>(), s["ns"].get<int>(), ctx.exec);
  json records = json::array();
  for (const auto& [t, v] : curve.samples) records.push_back({{"t", t}, {"re", v}, {"im", 0.0}});
  json summary = {{"psi", psi.id}, {"phi", phi.id}, {"samples", curve.samples.size()}};
  try {
    const auto fit = spectral::decay_fit(curve);
    summary["rate"] = fit.rate;
    summary["residual"] = fit.residual;
    summary["used"] = fit.used;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidArgument) throw;
    summary["rate"] = nullptr;
  }
  ctx.report.payload = {{"summary", summary}, {"records", records}};
}

void run_norms(Context& ctx) {
  const auto& s = ctx.tree["norms"];
  const int n = s["n"].get<int>();
  const double h = s["h"].get<double>();
  const double eps = s["eps"].get<double>();
  const aniso::Polarization theta({s["plus"][0].get<double>(), s["plus"][1].get<double>()},
                                  {s["minus"][0].get<double>(), s["minus"][1].get<double>()});
  const auto seed = ctx.tree["seed"].get<std::uint64_t>();
  json records = json::array();
  double max_ratio = 0.0, max_parseval = 0.0;
  bool weak_le_strong = true;
  for (int i = 0; i < s["functions"].get<int>(); ++i) {
    const auto u = aniso::random_function(n, h, seed + static_cast<std::uint64_t>(i));
    const auto strong = aniso::aniso_norm(u, theta, aniso::strong_params(), ctx.exec);
    const auto weak = aniso::aniso_norm(u, theta, aniso::weak_params(eps), ctx.exec);
    const double l2 = u.l2_norm();
    const double ratio = l2 / strong.total;
    const double pd = aniso::parseval_defect(u, theta);
    max_ratio = std::max(max_ratio, ratio);
    max_parseval = std::max(max_parseval, pd);
    const bool le = weak.total <= strong.total;
    weak_le_strong = weak_le_strong && le;
    records.push_back({{"id", "random-" + std::to_string(i)},
                       {"l2", l2},
                       {"strong", strong.total},
                       {"strong_plus", strong.plus},
                       {"strong_minus", strong.minus},
                       {"weak", weak.total},
                       {"embedding_ratio", ratio},
                       {"weak_le_strong", le},
                       {"parseval_defect", pd}});
  }
  // Orthogonality of two functions with Fourier support in transversal cones.
  const aniso::ConeSpec cu{0.1, 0.2}, cv{0.5, 0.6};
  const auto u = aniso::restrict_to_cone(aniso::random_function(n, h, seed + 1000003), cu);
  const auto v = aniso::restrict_to_cone(aniso::random_function(n, h, seed + 2000003), cv);
  const double ortho = aniso::transversal_orthogonality(u, v, theta, cu, cv);
  // Norm comparison against a polarization Theta' < Theta built by shrinking the plus cone.
  json ordering = nullptr;
  {
    const aniso::ConeSpec p0{s["plus"][0].get<double>(), s["plus"][1].get<double>()};
    const double lo = p0.slope_lo, hi = p0.slope_hi;
    if (std::isfinite(lo) && std::isfinite(hi) && lo < hi) {
      const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      const aniso::Polarization theta_prime({mid - 0.6 * half, mid + 0.6 * half}, {hi - 0.2 * half, lo + 0.2 * half});
      if (aniso::precedes(theta_prime, theta)) {
        std::vector<aniso::GridFunction2D> sample;
        for (int i = 0; i < std::min(4, s["functions"].get<int>()); ++i)
          sample.push_back(aniso::random_function(n, h, seed + static_cast<std::uint64_t>(i)));
        ordering = aniso::ordering_constant(sample, theta_prime, theta);
      }
    }
  }
  ctx.report.payload = {{"summary",
                         {{"n", n},
                          {"h", h},
                          {"eps", eps},
                          {"max_level", aniso::max_level(h)},
                          {"partition_of_unity_error", aniso::partition_of_unity_error(theta, n, h)},
                          {"max_embedding_ratio", max_ratio},
                          {"embedding_bound", std::sqrt(6.0)},
                          {"weak_le_strong", weak_le_strong},
                          {"max_parseval_defect", max_parseval},
                          {"transversal_inner_max", ortho},
                          {"ordering_constant", ordering}}},
                        {"records", records}};
}

void run_genericity(Context& ctx) {
  const auto& g = ctx.tree["genericity"];
  ctx.report.caveats = {kProbeSampling, kClusterWindow, kFittedRate};
  const int ell = ctx.f.ell();
  genericity::GenericityParams params;
  params.rho = g["rho"].get<double>();
  params.gamma = g["gamma"].get<double>();
  params.alpha = g["alpha"].get<double>();
  params.beta = g["beta"].get<double>();
  params.p = g["p"].get<int>();
  params.nu = g["nu"].get<int>();
  params.N = g["N"].get<int>();
  json records = json::array();
  json summary = json::object();
  summary["theta_K"] = ctx.cls.theta_K;
  summary["delta"] = params.delta(ell);
  summary["params_violations"] = params.violations(ell);

  const auto growth = genericity::cluster_growth(ctx.f, ctx.cls, g["n_lo"].get<int>(), g["n_hi"].get<int>(),
                                                 g["window_factor"].get<double>());
  for (const auto& [n, count] : growth.counts)
    records.push_back({{"kind", "cluster"},
                       {"n", n},
                       {"max_cluster", count},
                       {"window", g["window_factor"].get<double>() * ctx.cls.theta_K * std::pow(double(ell), -n)}});
  summary["cluster_growth_rate"] = growth.rate;
  summary["cluster_growth_residual"] = growth.residual;

  // Bump family and the Jacobian bound at sampled points near y.
  const int nu = params.nu;
  const int p = params.p;
  const int mu = g["mu"].get<int>() == 0 ? genericity::default_mu(ell, nu, p) : g["mu"].get<int>();
  const double y = g["y"].get<double>();
  const double eps0 = g["eps0"].get<double>() == 0.0 ? genericity::max_admissible_eps0(ell, y, nu, mu)
                                                     : g["eps0"].get<double>();
  const auto fam = genericity::bump_family(ell, y, nu, eps0, mu, 2.0);
  summary["mu"] = mu;
  summary["eps0"] = eps0;
  summary["max_predecessors"] = *std::max_element(fam.predecessors.begin(), fam.predecessors.end());
  const std::size_t need = static_cast<std::size_t>((nu + 1) * (p + 1));
  if (fam.words.size() >= need) {
    std::vector<std::size_t> A(need);
    for (std::size_t i = 0; i < need; ++i) A[i] = i;
    auto top = genericity::maximal_elements(fam, A);
    top.resize(static_cast<std::size_t>(p + 1));
    genericity::SplitMix64 rng(ctx.tree["seed"].get<std::uint64_t>(), 0xb0b);
    double min_jac = std::numeric_limits<double>::infinity();
    const int points = g["jac_points"].get<int>();
    for (int k = 0; k < points; ++k) {
      const double x = y + (eps0 / 3.0) * (2.0 * (k + 0.5) / points - 1.0);
      std::vector<dynamics::Word> sigma;
      for (auto idx : top) {
        std::vector<std::uint8_t> tail(g["tail"].get<std::size_t>());
        for (auto& l : tail) l = static_cast<std::uint8_t>(1 + rng.next() % ell);
        sigma.push_back(fam.words[idx].concat(dynamics::Word(ell, std::move(tail))));
      }
      const double xx = x - std::floor(x);
      min_jac = std::min(min_jac, genericity::jacobian(genericity::g_matrix(xx, sigma, fam.bumps)));
    }
    summary["min_jacobian"] = min_jac;
    summary["jacobian_points"] = points;
  } else {
    summary["min_jacobian"] = nullptr;
  }

  // Bad-set probe on a covering family of bumps.
  const genericity::PerturbationFamily family(
      ctx.f, g["directions"].get<int>() > 0 ? genericity::uniform_bumps(g["directions"].get<int>(), g["plateau"].get<double>())
                                            : std::vector<genericity::Bump>{},
      g["epsilon"].get<double>());
  for (const auto& nj : g["probe_n"]) {
    const auto pr = genericity::bad_set_probe(family, ctx.cls, nj.get<int>(), g["samples"].get<std::size_t>(), params,
                                              ctx.tree["seed"].get<std::uint64_t>(), ctx.exec);
    records.push_back({{"kind", "probe"},
                       {"n", nj},
                       {"samples", pr.samples},
                       {"hits", pr.hits},
                       {"jac_rejected", pr.jac_rejected},
                       {"accepted", pr.accepted},
                       {"fraction", pr.fraction},
                       {"ci_low", pr.ci_low},
                       {"ci_high", pr.ci_high},
                       {"window", pr.window}});
  }
  ctx.report.payload = {{"summary", summary}, {"records", records}};
}

void run_branches(Context& ctx) {
  const auto& b = ctx.tree["branches"];
  const double theta = b["theta"].get<double>() > 0.0 ? b["theta"].get<double>() : ctx.cls.theta_f;
  try {
    const auto branches = dynamics::inverse_branches(ctx.f, {b["x"].get<double>(), b["s"].get<double>()},
                                                     b["t"].get<double>(), theta, b["cap"].get<std::size_t>());
    json records = json::array();
    double sum = 0.0;
    int max_level = 0;
    for (const auto& br : branches) {
      records.push_back({{"word", br.word.str()},
                         {"n", br.level},
                         {"y", br.preimage.x},
                         {"s_prime", br.preimage.s},
                         {"E", br.expansion},
                         {"slope", br.slope}});
      sum += 1.0 / br.expansion;
      max_level = std::max(max_level, br.level);
    }
    ctx.report.payload = {{"summary", {{"count", branches.size()}, {"branch_sum", sum}, {"max_level", max_level}, {"theta", theta}}},
                          {"records", records}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ResourceLimit) throw;
    ctx.report.status = e.code();
    ctx.report.payload = {{"error", {{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}}},
                          {"records", json::array()}};
  }
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig::ExperimentConfig() : tree_(defaults()) {}

void ExperimentConfig::set(const std::string& key, const json& value) {
  json* slot = locate(tree_, key);
  if (slot == nullptr) violation(key, "unknown key");
  *slot = coerce(key, *slot, value);
}

void ExperimentConfig::set_literal(const std::string& key, const std::string& literal) {
  set(key, parse_value(trim(literal), 1, 1));
}

const json& ExperimentConfig::get(const std::string& key) const {
  json* slot = locate(const_cast<json&>(tree_), key);
  if (slot == nullptr) fail(ErrorCode::InvalidArgument, "unknown key '" + key + "'");
  return *slot;
}

std::vector<json> ExperimentConfig::violations() const {
  std::vector<json> out;
  auto add = [&](const std::string& key, const std::string& message) {
    out.push_back({{"key", key}, {"message", message}});
  };
  const int ell = tree_["ell"].get<int>();
  if (ell < 2 || ell > 16) add("ell", "must lie in [2, 16]");
  const auto experiment = tree_["experiment"].get<std::string>();
  if (experiment.empty()) add("experiment", "is required");
  else if (!is_section(experiment)) add("experiment", "unknown experiment '" + experiment + "'");
  if (tree_["seed"].get<long long>() < 0) add("seed", "must be non-negative");
  if (tree_["workers"].get<long long>() < 1 || tree_["workers"].get<long long>() > 256)
    add("workers", "must lie in [1, 256]");
  const auto fmt = tree_["format"].get<std::string>();
  if (fmt != "json" && fmt != "jsonl" && fmt != "csv") add("format", "must be json, jsonl or csv");

  std::optional<ceiling::TrigPolynomial> f;
  std::set<long long> seen;
  bool harmonics_ok = true;
  for (const auto& h : tree_["harmonics"]) {
    const auto k = h[0].get<long long>();
    if (k < 1) {
      add("harmonics", "harmonic indices must be positive");
      harmonics_ok = false;
    } else if (!seen.insert(k).second) {
      add("harmonics", "harmonic index " + std::to_string(k) + " appears twice");
      harmonics_ok = false;
    }
  }
  if (harmonics_ok && ell >= 2 && ell <= 16) {
    f = ceiling_of(tree_);
    double lo = (*f)(0.0);
    for (int i = 1; i < 4096; ++i) lo = std::min(lo, (*f)(i / 4096.0));
    if (!(lo > 0.0)) {
      std::ostringstream msg;
      msg << "ceiling must be positive everywhere (grid minimum " << format_double(lo) << ")";
      add("mean", msg.str());
      f.reset();
    }
  }
  const double gamma0 = tree_["gamma0"].get<double>();
  if (ell >= 2 && !(gamma0 > 1.0 / ell && gamma0 < 1.0)) add("gamma0", "must lie in (1/ell, 1) = (" + format_double(1.0 / ell) + ", 1)");
  check_sections(tree_, out, f ? &*f : nullptr);
  return out;
}

void ExperimentConfig::validate() const {
  const auto v = violations();
  if (!v.empty()) fail_violations(v);
}

json ExperimentConfig::echo() const {
  json out = json::object();
  for (const auto& [k, v] : tree_.items())
    if (!kRuntimeKeys.count(k)) out[k] = v;
  return out;
}

std::string ExperimentConfig::hash() const { return git_blob_sha1(dump_json(echo())); }

namespace {

ExperimentConfig parse_collect(const std::string& text, std::vector<json>& problems) {
  ExperimentConfig cfg;
  std::set<std::string> assigned;
  std::string section;
  bool section_known = true;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (line_no == 1 && raw.rfind("\xEF\xBB\xBF", 0) == 0) raw.erase(0, 3);
    const auto cpos = comment_start(raw);
    const std::string line = cpos == std::string::npos ? raw : raw.substr(0, cpos);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::size_t indent = line.find_first_not_of(" \t\r") + 1;
    if (body.front() == '[') {
      if (body.back() != ']') parse_error(line_no, indent + body.size() - 1, "section header must end with ']'");
      section = trim(body.substr(1, body.size() - 2));
      section_known = is_section(section);
      if (!section_known) problems.push_back({{"key", "[" + section + "]"}, {"message", "unknown section"}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_error(line_no, indent + body.size(), "expected '='");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) parse_error(line_no, indent, "missing key before '='");
    for (std::size_t i = 0; i < key.size(); ++i) {
      const char c = key[i];
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'))
        parse_error(line_no, indent + i, std::string("invalid character '") + c + "' in key");
    }
    const std::size_t value_start = line.find_first_not_of(" \t", eq + 1);
    const std::string value_text = value_start == std::string::npos ? "" : trim(line.substr(value_start));
    const std::size_t value_col = value_start == std::string::npos ? line.size() + 1 : value_start + 1;
    const json value = parse_value(value_text, line_no, value_col);
    if (!section_known) continue;
    const std::string full = section.empty() ? key : section + "." + key;
    if (!assigned.insert(full).second) {
      problems.push_back({{"key", full}, {"message", "assigned more than once (line " + std::to_string(line_no) + ")"}});
      continue;
    }
    try {
      cfg.set(full, value);
    } catch (const Error& e) {
      for (const auto& v : e.detail()["violations"]) problems.push_back(v);
    }
  }
  return cfg;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  std::vector<json> problems;
  auto cfg = parse_collect(text, problems);
  if (!problems.empty()) fail_violations(problems);
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) { return parse_config(text, {}); }

ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::vector<json> problems;
  auto cfg = parse_collect(text, problems);
  for (const auto& [key, literal] : overrides) {
    try {
      cfg.set_literal(key, literal);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ValidationError) throw;
      for (const auto& v : e.detail()["violations"]) problems.push_back(v);
    }
  }
  for (auto& v : cfg.violations()) problems.push_back(std::move(v));
  if (!problems.empty()) fail_violations(problems);
  return cfg;
}

RunReport run(const ExperimentConfig& config, const Exec& exec) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.config = config.echo();
  report.config_hash = config.hash();
  report.experiment = config.tree()["experiment"].get<std::string>();
  report.report_timing = config.tree()["report_timing"].get<bool>();
  report.ok = false;

  const auto& tree = config.tree();
  auto f = ceiling_of(tree);
  auto cls = ceiling::classify(f, tree["gamma0"].get<double>());
  Context ctx{tree, exec, std::move(f), cls, report};
  report.status = ErrorCode::InvalidArgument;
  bool captured = false;
  // Module code signals a captured failure by setting payload["error"].
  const auto& name = report.experiment;
  try {
    if (name == "transversality") run_transversality(ctx);
    else if (name == "mixing") run_mixing(ctx);
    else if (name == "spectrum") run_spectrum(ctx);
    else if (name == "correlations") run_correlations(ctx);
    else if (name == "norms") run_norms(ctx);
    else if (name == "genericity") run_genericity(ctx);
    else if (name == "branches") run_branches(ctx);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ResourceLimit && e.code() != ErrorCode::NumericalFailure) throw;
    report.status = e.code();
    report.payload = {{"error", {{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}}},
                      {"records", json::array()}};
  }
  captured = report.payload.contains("error");
  report.ok = !captured;
  if (!report.payload.contains("records")) report.payload["records"] = json::array();
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ResourceLimit: return 2;
    case ErrorCode::NumericalFailure: return 3;
    default: return 1;
  }
}

int exit_code(const RunReport& report) { return report.ok ? 0 : exit_code(report.status); }

std::string dump_json(const json& value, int indent) {
  std::string out;
  dump_into(out, value, indent, 0);
  return out;
}

namespace {

// Nested objects become dotted columns: {"grid": {"nx": 8}} -> "grid.nx".
void flatten_into(json& flat, const std::string& prefix, const json& value) {
  if (value.is_object() && !value.empty()) {
    for (const auto& [k, v] : value.items()) flatten_into(flat, prefix.empty() ? k : prefix + "." + k, v);
    return;
  }
  flat[prefix] = value;
}

}  // namespace

std::string records_csv(const json& records) {
  if (!records.is_array() || records.empty()) return "";
  std::vector<json> rows;
  std::vector<std::string> columns;
  for (const auto& r : records) {
    json flat = json::object();
    flatten_into(flat, "", r);
    for (const auto& [k, v] : flat.items())
      if (std::find(columns.begin(), columns.end(), k) == columns.end()) columns.push_back(k);
    rows.push_back(std::move(flat));
  }
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out += ',';
      if (r.contains(columns[i])) out += csv_cell(r[columns[i]]);
    }
    out += '\n';
  }
  return out;
}

std::string emit(const RunReport& report, const std::string& format) {
  const std::string status = report.ok ? "ok" : to_string(report.status);
  const bool empty = report.payload.is_null() || report.payload.empty();
  if (empty && (format == "json" || format == "jsonl")) return "[]\n";
  if (format == "json") {
    json doc = {{"experiment", report.experiment},
                {"status", status},
                {"config_hash", report.config_hash},
                {"config", report.config},
                {"caveats", report.caveats},
                {"payload", report.payload}};
    if (report.report_timing) doc["wall_time_s"] = report.wall_time;
    return dump_json(doc, 2) + "\n";
  }
  if (format == "jsonl") {
    json head = {{"experiment", report.experiment},
                 {"status", status},
                 {"config_hash", report.config_hash},
                 {"caveats", report.caveats}};
    if (report.payload.contains("summary")) head["summary"] = report.payload["summary"];
    if (report.payload.contains("error")) head["error"] = report.payload["error"];
    if (report.report_timing) head["wall_time_s"] = report.wall_time;
    std::string out = dump_json(head) + "\n";
    for (const auto& r : report.payload["records"]) out += dump_json(r) + "\n";
    return out;
  }
  if (format == "csv") return empty ? "" : records_csv(report.payload["records"]);
  fail(ErrorCode::InvalidArgument, "unsupported output format '" + format + "'");
}

std::string git_blob_sha1(const std::string& text) {
  const std::string blob = "blob " + std::to_string(text.size()) + std::string(1, '\0') + text;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    fail(ErrorCode::NumericalFailure, "SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

}  // namespace suspflow::experiment
