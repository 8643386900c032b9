#include "experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "pconvex/convexity.hpp"
#include "pconvex/discrete.hpp"
#include "pconvex/errors.hpp"
#include "pconvex/exterior.hpp"
#include "pconvex/fieldexpr.hpp"
#include "pconvex/solver.hpp"
#include "pconvex/weights.hpp"

namespace pconvex::app {

namespace {

using Rng = std::mt19937_64;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  return v < 0 ? "(" + s + ")" : s;
}

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

const char* error_name(const std::exception& e) {
  if (dynamic_cast<const UnknownVariable*>(&e)) return "UnknownVariable";
  if (dynamic_cast<const ArityError*>(&e)) return "ArityError";
  if (dynamic_cast<const SyntaxError*>(&e)) return "SyntaxError";
  if (dynamic_cast<const ShapeError*>(&e)) return "ShapeError";
  if (dynamic_cast<const MembershipError*>(&e)) return "MembershipError";
  if (dynamic_cast<const PreconditionError*>(&e)) return "PreconditionError";
  if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
  if (dynamic_cast<const DegenerateGradient*>(&e)) return "DegenerateGradient";
  if (dynamic_cast<const EmptyDomain*>(&e)) return "EmptyDomain";
  if (dynamic_cast<const SupportError*>(&e)) return "SupportError";
  if (dynamic_cast<const NotClosed*>(&e)) return "NotClosed";
  if (dynamic_cast<const CohomologyObstruction*>(&e)) return "CohomologyObstruction";
  if (dynamic_cast<const NoConvergence*>(&e)) return "NoConvergence";
  if (dynamic_cast<const GapAmbiguous*>(&e)) return "GapAmbiguous";
  if (dynamic_cast<const TailError*>(&e)) return "TailError";
  return "Error";
}

Json error_record(const std::exception& e, const std::string& where) {
  Json j;
  j["check"] = "error";
  j["where"] = where;
  j["error"] = error_name(e);
  j["message"] = e.what();
  j["pass"] = false;
  return j;
}

// One named stream per task, derived from the config seed.
Rng make_stream(std::uint64_t seed, const std::string& name) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : name) h = (h ^ c) * 16777619u;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), h};
  return Rng(seq);
}

// ---------------------------------------------------------------------------
// Builtins

struct Call {
  std::string name;
  std::map<std::string, std::string> args;
};

// Parses "name(k = v, k = v)" when `text` is exactly one call; commas nested
// in parentheses stay inside their value.
std::optional<Call> parse_call(const std::string& text) {
  const std::string s = trim(text);
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')') return std::nullopt;
  Call c{trim(s.substr(0, open)), {}};
  if (c.name.empty() || !std::all_of(c.name.begin(), c.name.end(), [](char ch) { return std::isalnum(ch) || ch == '_'; }))
    return std::nullopt;
  int depth = 0;
  std::string cur;
  std::vector<std::string> parts;
  for (std::size_t i = open + 1; i + 1 < s.size(); ++i) {
    const char ch = s[i];
    if (ch == '(') ++depth;
    if (ch == ')' && --depth < 0) return std::nullopt;  // closes before the end: not a single call
    if (ch == ',' && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (depth != 0) return std::nullopt;
  if (!trim(cur).empty() || !parts.empty()) parts.push_back(cur);
  for (const auto& part : parts) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) return std::nullopt;
    c.args[trim(part.substr(0, eq))] = trim(part.substr(eq + 1));
  }
  return c;
}

struct BuiltinDoc {
  const char* kind;
  const char* signature;
  const char* doc;
};

const std::vector<BuiltinDoc>& builtin_docs() {
  static const std::vector<BuiltinDoc> docs{
      {"weight", "bump(center=c1 .. cn, radius=R, amplitude=1)",
       "C-infinity bump exp(1 - 1/(1 - |x-c|^2/R^2)); whole values only"},
      {"weight", "cor42(p=1, D=1, center=0 .. 0)", "p |x - c|^2 / (2 D^2), strictly p-psh with p-trace p^2/D^2"},
      {"weight", "df(r=EXPR, phi=EXPR, K=1, eta=0.5)", "-(-r exp(-K phi))^eta, the Diederich-Fornaess composition"},
      {"domain", "annulus(center=0 .. 0, inner=0.5, outer=1)", "(|x-c|^2 - inner^2)(|x-c|^2 - outer^2)"},
      {"domain", "ball(center=0 .. 0, radius=1)", "|x - c|^2 - radius^2"},
      {"domain", "box", "no defining function: the whole box"},
      {"domain", "ellipse(a=1, b=1)", "x1^2/a^2 + x2^2/b^2 - 1 (n = 2)"},
      {"domain", "torus(R=1, a=0.5)", "(|x|^2 + R^2 - a^2)^2 - 4 R^2 (x1^2 + x2^2), solid torus about the x3 axis (n = 3)"},
  };
  return docs;
}

class ArgReader {
 public:
  ArgReader(const Call& c, const Section& sec, const std::string& key) : c_(c), sec_(sec), key_(key) {}

  double number(const std::string& name, std::optional<double> fallback = std::nullopt) {
    used_.insert(name);
    const auto it = c_.args.find(name);
    if (it == c_.args.end()) {
      if (!fallback) sec_.fail(key_, c_.name + ": missing argument '" + name + "'");
      return *fallback;
    }
    const auto v = parse_number(it->second);
    if (!v) sec_.fail(key_, c_.name + ": argument '" + name + "' is not a number");
    return *v;
  }

  std::vector<double> vector(const std::string& name, int n) {
    used_.insert(name);
    const auto it = c_.args.find(name);
    if (it == c_.args.end()) return std::vector<double>(n, 0.0);
    std::istringstream ss(it->second);
    std::vector<double> out;
    std::string w;
    while (ss >> w) {
      const auto v = parse_number(w);
      if (!v) sec_.fail(key_, c_.name + ": argument '" + name + "' has a non-number '" + w + "'");
      out.push_back(*v);
    }
    if (static_cast<int>(out.size()) != n)
      sec_.fail(key_, c_.name + ": argument '" + name + "' needs " + std::to_string(n) + " entries");
    return out;
  }

  std::string text(const std::string& name) {
    used_.insert(name);
    const auto it = c_.args.find(name);
    if (it == c_.args.end()) sec_.fail(key_, c_.name + ": missing argument '" + name + "'");
    return it->second;
  }

  void done() const {
    for (const auto& [k, v] : c_.args)
      if (!used_.count(k)) sec_.fail(key_, c_.name + ": unknown argument '" + k + "'");
  }

 private:
  const Call& c_;
  const Section& sec_;
  std::string key_;
  std::set<std::string> used_;
};

std::string squared_distance(const std::vector<double>& c) {
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) s += " + ";
    s += "(x" + std::to_string(i + 1) + " - " + fmt(c[i]) + ")^2";
  }
  return "(" + s + ")";
}

ScalarFieldExpr parse_expr_at(const Section& sec, const std::string& key, const std::string& text, int n);

// Expression text for a builtin call, or nullopt when `text` is not one.
std::optional<std::string> expand_builtin(const Section& sec, const std::string& key, const std::string& text,
                                          int n) {
  const auto call = parse_call(text);
  if (!call) return std::nullopt;
  ArgReader a(*call, sec, key);
  std::string out;
  if (call->name == "cor42") {
    const int p = static_cast<int>(a.number("p", 1.0));
    const double D = a.number("D", 1.0);
    const auto c = a.vector("center", n);
    if (p < 1 || p > n || D <= 0.0) sec.fail(key, "cor42 needs 1 <= p <= n and D > 0");
    out = corollary42_weight(p, D, c).to_string();
  } else if (call->name == "df") {
    const auto r = parse_expr_at(sec, key, a.text("r"), n);
    const auto phi = parse_expr_at(sec, key, a.text("phi"), n);
    const double K = a.number("K", 1.0), eta = a.number("eta", 0.5);
    if (K <= 0.0 || eta <= 0.0 || eta > 1.0) sec.fail(key, "df needs K > 0 and 0 < eta <= 1");
    out = compose_df(r, phi, K, eta).to_string();
  } else if (call->name == "ball") {
    const auto c = a.vector("center", n);
    const double R = a.number("radius", 1.0);
    out = squared_distance(c) + " - " + fmt(R * R);
  } else if (call->name == "annulus") {
    const auto c = a.vector("center", n);
    const double r0 = a.number("inner", 0.5), r1 = a.number("outer", 1.0);
    if (!(0.0 <= r0 && r0 < r1)) sec.fail(key, "annulus needs 0 <= inner < outer");
    const std::string q = squared_distance(c);
    out = "(" + q + " - " + fmt(r0 * r0) + ")*(" + q + " - " + fmt(r1 * r1) + ")";
  } else if (call->name == "ellipse") {
    if (n != 2) sec.fail(key, "ellipse is two-dimensional");
    const double ea = a.number("a", 1.0), eb = a.number("b", 1.0);
    out = "x1^2/" + fmt(ea * ea) + " + x2^2/" + fmt(eb * eb) + " - 1";
  } else if (call->name == "torus") {
    if (n != 3) sec.fail(key, "torus is three-dimensional");
    const double R = a.number("R", 1.0), ta = a.number("a", 0.5);
    if (!(0.0 < ta && ta < R)) sec.fail(key, "torus needs 0 < a < R");
    out = "(x1^2 + x2^2 + x3^2 + " + fmt(R * R - ta * ta) + ")^2 - " + fmt(4 * R * R) + "*(x1^2 + x2^2)";
  } else {
    return std::nullopt;
  }
  a.done();
  return out;
}

// Replaces every builtin call embedded in an expression by its text.
std::string expand_embedded(const Section& sec, const std::string& key, const std::string& text, int n) {
  static const std::vector<std::string> names{"cor42", "df", "ball", "annulus", "ellipse", "torus"};
  std::string s = text;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (const auto& name : names) {
      if (s.compare(i, name.size(), name) != 0) continue;
      if (i > 0 && (std::isalnum(static_cast<unsigned char>(s[i - 1])) || s[i - 1] == '_')) continue;
      std::size_t j = i + name.size();
      while (j < s.size() && s[j] == ' ') ++j;
      if (j >= s.size() || s[j] != '(') continue;
      int depth = 0;
      std::size_t k = j;
      for (; k < s.size(); ++k) {
        if (s[k] == '(') ++depth;
        if (s[k] == ')' && --depth == 0) break;
      }
      if (k >= s.size()) sec.fail(key, "unbalanced parentheses in " + name + "(...)");
      const auto body = expand_builtin(sec, key, s.substr(i, k + 1 - i), n);
      if (!body) continue;
      const std::string rep = "(" + *body + ")";
      s.replace(i, k + 1 - i, rep);
      i += rep.size() - 1;
      break;
    }
  }
  return s;
}

ScalarFieldExpr parse_expr_at(const Section& sec, const std::string& key, const std::string& text, int n) {
  const std::string expanded = expand_embedded(sec, key, text, n);
  try {
    return ScalarFieldExpr::parse(expanded, n);
  } catch (const SyntaxError& e) {
    sec.fail(key, std::string(error_name(e)) + " in '" + expanded + "': " + e.what());
  }
}

struct NamedField {
  Field field;
  std::string text;
  std::optional<ScalarFieldExpr> expr;  // absent for bumps
};

NamedField field_from(const Section& sec, const std::string& key, const std::string& text, int n) {
  if (const auto call = parse_call(text); call && call->name == "bump") {
    ArgReader a(*call, sec, key);
    const auto c = a.vector("center", n);
    const double R = a.number("radius");
    const double amp = a.number("amplitude", 1.0);
    a.done();
    if (R <= 0.0) sec.fail(key, "bump radius must be positive");
    return {bump_field(c, R, amp), trim(text), std::nullopt};
  }
  auto e = parse_expr_at(sec, key, text, n);
  return {e.as_field(), trim(text), e};
}

NamedField field_key(const Section& sec, const std::string& key, int n) { return field_from(sec, key, sec.text(key), n); }

// ---------------------------------------------------------------------------
// Shared config pieces

struct DomainSpec {
  Eigen::VectorXd lo, hi;
  std::vector<double> ladder;
  std::optional<NamedField> r;

  int dim() const { return static_cast<int>(lo.size()); }
  GridDomain grid(double h) const {
    std::optional<Field> rf;
    if (r) rf = r->field;
    return GridDomain::box(std::span<const double>(lo.data(), lo.size()), std::span<const double>(hi.data(), hi.size()),
                           h, rf);
  }
};

DomainSpec read_domain(const IniFile& ini, bool need_ladder) {
  const Section& d = ini.section("domain");
  d.restrict_keys({"lo", "hi", "h", "shape", "r"});
  DomainSpec spec;
  const auto lo = d.numbers("lo"), hi = d.numbers("hi");
  if (lo.size() != hi.size()) d.fail("hi", "lo and hi must have the same length");
  if (lo.empty() || lo.size() > 6) d.fail("lo", "dimension must be between 1 and 6");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) d.fail("hi", "every hi must exceed lo");
  spec.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size());
  spec.hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size());
  const int n = spec.dim();
  if (d.has("shape") && d.has("r")) d.fail("r", "give either shape or r, not both");
  if (d.has("shape")) {
    const std::string shape = d.text("shape");
    if (shape != "box") {
      const auto text = expand_builtin(d, "shape", shape, n);
      if (!text) d.fail("shape", "unknown shape '" + shape + "' (see list-builtins)");
      spec.r = field_from(d, "shape", *text, n);
    }
  } else if (d.has("r")) {
    spec.r = field_key(d, "r", n);
  }
  if (need_ladder) {
    spec.ladder = d.numbers("h");
    for (std::size_t i = 0; i < spec.ladder.size(); ++i) {
      if (spec.ladder[i] <= 0.0) d.fail("h", "grid steps must be positive");
      if (i > 0 && !(spec.ladder[i] < spec.ladder[i - 1])) d.fail("h", "refinement ladder must be strictly decreasing");
      try {
        spec.grid(spec.ladder[i]).counts();
      } catch (const Error& e) {
        d.fail("h", e.what());
      }
    }
  } else if (d.has("h")) {
    d.fail("h", "this task does not use a grid");
  }
  return spec;
}

void check_p(const Section& t, const std::string& key, int p, int lo, int hi) {
  if (p < lo || p > hi)
    t.fail(key, "p = " + std::to_string(p) + " is outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

// Cell centers of a per_axis^n lattice over the box, restricted to r < 0.
std::vector<Eigen::VectorXd> lattice(const DomainSpec& d, int per_axis) {
  const int n = d.dim();
  std::vector<Eigen::VectorXd> out;
  std::vector<int> idx(n, 0);
  const Eigen::VectorXd step = (d.hi - d.lo) / per_axis;
  while (true) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = d.lo[i] + (idx[i] + 0.5) * step[i];
    if (!d.r || d.r->field.value(std::span<const double>(x.data(), n)) < 0.0) out.push_back(x);
    int i = 0;
    while (i < n && ++idx[i] == per_axis) idx[i++] = 0;
    if (i == n) break;
  }
  return out;
}

// Zero crossings of r along the lattice edges, refined by bisection.
std::vector<Eigen::VectorXd> boundary_points(const DomainSpec& d, int per_axis) {
  const int n = d.dim();
  const Field& r = d.r->field;
  auto val = [&](const Eigen::VectorXd& x) { return r.value(std::span<const double>(x.data(), n)); };
  const Eigen::VectorXd step = (d.hi - d.lo) / per_axis;
  std::vector<Eigen::VectorXd> out;
  std::vector<int> idx(n, 0);
  while (true) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = d.lo[i] + idx[i] * step[i];
    const double fx = val(x);
    for (int a = 0; a < n; ++a) {
      if (idx[a] == per_axis) continue;
      Eigen::VectorXd y = x;
      y[a] += step[a];
      const double fy = val(y);
      if ((fx < 0.0) == (fy < 0.0)) continue;
      double t0 = 0.0, t1 = 1.0, f0 = fx;
      for (int it = 0; it < 60; ++it) {
        const double tm = 0.5 * (t0 + t1);
        Eigen::VectorXd z = x;
        z[a] += tm * step[a];
        const double fm = val(z);
        if ((fm < 0.0) == (f0 < 0.0)) {
          t0 = tm;
          f0 = fm;
        } else {
          t1 = tm;
        }
      }
      Eigen::VectorXd z = x;
      z[a] += 0.5 * (t0 + t1) * step[a];
      out.push_back(z);
    }
    int i = 0;
    while (i < n && ++idx[i] == per_axis + 1) idx[i++] = 0;
    if (i == n) break;
  }
  return out;
}

// The p-form of a [form] section: f = d(sample of a) for kind = exact, or the
// samples of g for kind = coefficients.
struct FormSpec {
  std::string kind;
  int p = 0;
  std::vector<NamedField> coeffs;

  Cochain on(const CubicalComplex& cx) const {
    std::vector<Field> fs;
    for (const auto& c : coeffs) fs.push_back(c.field);
    if (kind == "coefficients") return sample_cochain(cx, fs, p);
    const Cochain a = sample_cochain(cx, fs, p - 1);
    return Cochain{p, apply_d(cx, p - 1, a.values)};
  }
  std::vector<Field> fields() const {
    std::vector<Field> fs;
    for (const auto& c : coeffs) fs.push_back(c.field);
    return fs;
  }
};

FormSpec read_form(const IniFile& ini, int n, int p) {
  const Section& f = ini.section("form");
  FormSpec spec;
  spec.kind = f.text_or("kind", "exact");
  spec.p = p;
  if (spec.kind != "exact" && spec.kind != "coefficients") f.fail("kind", "expected exact or coefficients");
  const bool exact = spec.kind == "exact";
  const int deg = exact ? p - 1 : p;
  const long count = binomial(n, deg);
  const char prefix = exact ? 'a' : 'g';
  std::set<std::string> allowed{"kind"};
  for (long i = 1; i <= count; ++i) allowed.insert(prefix + std::to_string(i));
  f.restrict_keys(allowed);
  for (long i = 1; i <= count; ++i) {
    const std::string key = prefix + std::to_string(i);
    spec.coeffs.push_back(f.has(key) ? field_key(f, key, n) : NamedField{Field::constant(n, 0.0), "0", std::nullopt});
  }
  if (std::none_of(f.entries().begin(), f.entries().end(), [](const auto& e) { return e.first != "kind"; }))
    f.fail("kind", "the form has no coefficients");
  return spec;
}

std::optional<NamedField> weight_opt(const IniFile& ini, const std::string& key, int n) {
  const Section& w = ini.section_or_empty("weights");
  if (!w.has(key)) return std::nullopt;
  return field_key(w, key, n);
}

NamedField weight_req(const IniFile& ini, const std::string& key, int n) {
  const Section& w = ini.section("weights");
  return field_key(w, key, n);
}

bool non_increasing(const std::vector<double>& v, double rel = 1e-12) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1] * (1.0 + rel)) return false;
  return true;
}

struct Ctx {
  const IniFile& ini;
  std::uint64_t seed;
  bool verbose;
  const Section& task;
};

void log_record(const Ctx& c, const Json& j) {
  if (c.verbose) std::cerr << j.dump() << "\n";
}

void push(const Ctx& c, TaskResult& out, Json j) {
  if (j.contains("pass") && j["pass"].is_boolean() && !j["pass"].get<bool>()) out.pass = false;
  log_record(c, j);
  out.records.push_back(std::move(j));
}

// ---------------------------------------------------------------------------
// Tasks

TaskResult task_check_psh(const Ctx& c) {
  c.task.restrict_keys({"p", "mode", "samples_per_axis", "random_samples"});
  const DomainSpec dom = read_domain(c.ini, false);
  const int n = dom.dim();
  const int p = c.task.integer("p");
  check_p(c.task, "p", p, 1, n);
  const std::string mode = c.task.text_or("mode", "semi");
  if (mode != "semi" && mode != "strict") c.task.fail("mode", "expected semi or strict");
  const int per_axis = c.task.integer_or("samples_per_axis", 16);
  const int randoms = c.task.integer_or("random_samples", 0);
  if (per_axis < 1 || randoms < 0) c.task.fail("samples_per_axis", "sample counts must be positive");
  const NamedField phi = weight_req(c.ini, "phi", n);

  TaskResult out;
  auto samples = lattice(dom, per_axis);
  Rng rng = make_stream(c.seed, "check-psh");
  for (int k = 0; k < randoms;) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = std::uniform_real_distribution<double>(dom.lo[i], dom.hi[i])(rng);
    ++k;
    if (!dom.r || dom.r->field.value(std::span<const double>(x.data(), n)) < 0.0) samples.push_back(x);
  }
  try {
    const auto rep = field_p_psh_report(phi.field, samples, p);
    const Verdict need = mode == "strict" ? Verdict::strict : Verdict::semi;
    Json violations = Json::array();
    int count = 0;
    for (std::size_t i = 0; i < rep.reports.size(); ++i)
      if (rep.reports[i].verdict < need) {
        if (count++ < 10) violations.push_back({{"sample", vec_json(rep.points[i])}, {"min_p_trace", rep.reports[i].min_p_trace}});
      }
    Json j;
    j["check"] = "p_psh";
    j["phi"] = phi.text;
    j["p"] = p;
    j["mode"] = mode;
    j["samples"] = samples.size();
    j["min_p_trace"] = rep.min_p_trace;
    j["verdict"] = to_string(rep.verdict);
    j["worst_sample"] = vec_json(rep.points[rep.worst]);
    j["violations"] = count;
    j["first_violations"] = violations;
    j["pass"] = rep.verdict >= need;
    push(c, out, j);
  } catch (const Error& e) {
    push(c, out, error_record(e, "p_psh"));
  }
  return out;
}

TaskResult task_boundary_convexity(const Ctx& c) {
  c.task.restrict_keys({"p", "samples_per_axis", "expect"});
  const DomainSpec dom = read_domain(c.ini, false);
  const int n = dom.dim();
  if (!dom.r) c.ini.section("domain").fail("r", "boundary convexity needs a defining function");
  std::vector<int> ps;
  for (double v : c.task.numbers("p")) {
    ps.push_back(static_cast<int>(v));
    check_p(c.task, "p", ps.back(), 1, n - 1);
  }
  std::vector<std::string> expect;
  if (c.task.has("expect")) {
    expect = c.task.words("expect");
    if (expect.size() != ps.size()) c.task.fail("expect", "one verdict per p");
    for (const auto& v : expect)
      if (v != "fail" && v != "semi" && v != "strict") c.task.fail("expect", "verdicts are fail, semi or strict");
  }
  const int per_axis = c.task.integer_or("samples_per_axis", 40);

  TaskResult out;
  const auto pts = boundary_points(dom, per_axis);
  for (std::size_t k = 0; k < ps.size(); ++k) {
    try {
      const auto rep = boundary_p_convexity(dom.r->field, pts, ps[k]);
      Json j;
      j["check"] = "boundary_p_convexity";
      j["r"] = dom.r->text;
      j["p"] = ps[k];
      j["samples"] = pts.size();
      j["min_p_trace"] = rep.min_p_trace;
      j["verdict"] = to_string(rep.verdict);
      j["worst_sample"] = vec_json(rep.points[rep.worst]);
      if (!expect.empty()) {
        j["expected"] = expect[k];
        j["pass"] = expect[k] == to_string(rep.verdict);
      } else {
        j["pass"] = rep.verdict != Verdict::fail;
      }
      push(c, out, j);
    } catch (const Error& e) {
      push(c, out, error_record(e, "boundary_p_convexity"));
    }
  }
  return out;
}

TaskResult task_df_search(const Ctx& c) {
  c.task.restrict_keys({"p", "K", "eta", "samples_per_axis", "collar", "min_samples"});
  const Section& sw = c.ini.section_or_empty("sweep");
  std::string param;
  std::vector<double> values{0.0};
  if (c.ini.has("sweep")) {
    if (sw.entries().size() != 1) sw.fail("", "exactly one sweep parameter is supported");
    param = sw.entries().begin()->first;
    values = sw.numbers(param);
  }
  const int p = c.task.integer("p");
  const auto K = c.task.numbers("K"), eta = c.task.numbers("eta");
  for (double k : K)
    if (k <= 0.0) c.task.fail("K", "K must be positive");
  for (double e : eta)
    if (e <= 0.0 || e > 1.0) c.task.fail("eta", "eta must lie in (0, 1]");
  const int per_axis = c.task.integer_or("samples_per_axis", 24);
  const double collar = c.task.number_or("collar", 0.1);
  const int min_samples = c.task.integer_or("min_samples", 500);

  struct Case {
    double value;
    DomainSpec dom;
    ScalarFieldExpr r, phi;
  };
  std::vector<Case> cases;
  for (double v : values) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    const IniFile ini = param.empty() ? c.ini : c.ini.substitute("{" + param + "}", buf, "sweep");
    DomainSpec dom = read_domain(ini, false);
    const int n = dom.dim();
    check_p(c.task, "p", p, 1, n);
    if (!dom.r || !dom.r->expr) ini.section("domain").fail("r", "df-search needs an expression defining function");
    const NamedField phi = weight_req(ini, "phi", n);
    if (!phi.expr) ini.section("weights").fail("phi", "df-search needs an expression weight");
    cases.push_back({v, dom, *dom.r->expr, *phi.expr});
  }

  TaskResult out;
  Series s{{param.empty() ? "case" : param, "K", "eta", "min_p_trace", "samples", "feasible"}, {}};
  std::vector<double> ks, etas;
  for (const auto& cs : cases) {
    try {
      const auto samples = domain_samples(cs.r.as_field(), cs.dom.lo, cs.dom.hi, per_axis, collar);
      const auto res = df_search(cs.r, cs.phi, samples, p, K, eta);
      Json j;
      j["check"] = "df_search";
      if (!param.empty()) j["case"] = {{param, cs.value}};
      j["r"] = cs.r.to_string();
      j["phi"] = cs.phi.to_string();
      j["p"] = p;
      j["samples"] = samples.size();
      j["feasible"] = res.feasible;
      j["K"] = res.K;
      j["eta"] = res.eta;
      j["min_p_trace"] = res.min_p_trace_over_grid;
      j["degenerate"] = res.degenerate;
      j["pass"] = res.feasible && static_cast<int>(samples.size()) >= min_samples;
      push(c, out, j);
      s.rows.push_back({cs.value, res.K, res.eta, res.min_p_trace_over_grid, samples.size(), res.feasible ? 1 : 0});
      ks.push_back(res.K);
      etas.push_back(res.eta);
    } catch (const Error& e) {
      push(c, out, error_record(e, "df_search"));
    }
  }
  if (!param.empty() && ks.size() == cases.size() && cases.size() >= 2) {
    bool eta_dec = etas.back() < etas.front(), k_inc = ks.back() > ks.front();
    for (std::size_t i = 1; i < ks.size(); ++i) {
      eta_dec = eta_dec && etas[i] <= etas[i - 1];
      k_inc = k_inc && ks[i] >= ks[i - 1];
    }
    Json j;
    j["check"] = "df_trend";
    j["parameter"] = param;
    j["values"] = values;
    j["eta"] = etas;
    j["K"] = ks;
    j["eta_decreasing"] = eta_dec;
    j["K_increasing"] = k_inc;
    j["asserted"] = false;
    push(c, out, j);
  }
  out.series = s;
  return out;
}

TaskResult task_kmh(const Ctx& c) {
  c.task.restrict_keys({"p", "min_factor", "max_final_residual"});
  const DomainSpec dom = read_domain(c.ini, true);
  const int n = dom.dim();
  const int p = c.task.integer("p");
  check_p(c.task, "p", p, 1, n);
  const FormSpec form = read_form(c.ini, n, p);
  if (form.kind != "coefficients") c.ini.section("form").fail("kind", "kmh needs kind = coefficients");
  const NamedField phi = weight_req(c.ini, "phi", n);
  const double min_factor = c.task.number_or("min_factor", 1.5);
  const std::optional<double> max_final =
      c.task.has("max_final_residual") ? std::optional<double>(c.task.number("max_final_residual")) : std::nullopt;

  TaskResult out;
  Series s{{"h", "residual", "lhs", "rhs_gradient_term", "rhs_F_term"}, {}};
  PlotLine line{"relative residual", {}, {}};
  std::vector<double> res;
  const auto g = form.fields();
  for (double h : dom.ladder) {
    try {
      const auto r = kmh_residual(g, p, phi.field, dom.grid(h));
      Json j;
      j["check"] = "kmh";
      j["h"] = h;
      j["p"] = p;
      j["lhs"] = r.lhs;
      j["rhs_gradient_term"] = r.rhs_gradient_term;
      j["rhs_F_term"] = r.rhs_F_term;
      j["residual"] = r.residual;
      push(c, out, j);
      s.rows.push_back({h, r.residual, r.lhs, r.rhs_gradient_term, r.rhs_F_term});
      line.x.push_back(h);
      line.y.push_back(r.residual);
      res.push_back(r.residual);
    } catch (const Error& e) {
      push(c, out, error_record(e, "kmh"));
      return out;
    }
  }
  std::vector<double> factors;
  bool ok = true;
  for (std::size_t i = 1; i < res.size(); ++i) {
    factors.push_back(res[i] > 0.0 ? res[i - 1] / res[i] : INFINITY);
    ok = ok && (res[i - 1] <= 1e-13 || factors.back() >= min_factor);
  }
  Json j;
  j["check"] = "kmh_convergence";
  j["factors"] = Json::array();
  for (double f : factors) j["factors"].push_back(std::isfinite(f) ? Json(f) : Json("inf"));
  j["min_factor"] = min_factor;
  j["final_residual"] = res.back();
  if (max_final) {
    j["max_final_residual"] = *max_final;
    ok = ok && res.back() <= *max_final;
  }
  j["pass"] = ok;
  push(c, out, j);
  out.series = s;
  out.plot = Plot{"KMH identity residual", "h", "relative residual", {line}};
  return out;
}

TaskResult task_solve(const Ctx& c) {
  c.task.restrict_keys(
      {"p", "expect_error", "tol", "obstruction_tol", "closed_tol", "max_iter", "write_solution", "project_closed"});
  const DomainSpec dom = read_domain(c.ini, true);
  const int n = dom.dim();
  const int p = c.task.integer("p");
  check_p(c.task, "p", p, 1, n);
  const FormSpec form = read_form(c.ini, n, p);
  const NamedField phi = weight_req(c.ini, "phi", n);
  const std::string expect = c.task.text_or("expect_error", "");
  static const std::set<std::string> expectable{"NotClosed", "CohomologyObstruction", "NoConvergence"};
  if (!expect.empty() && !expectable.count(expect))
    c.task.fail("expect_error", "expected one of NotClosed, CohomologyObstruction, NoConvergence");
  SolveOptions opts;
  opts.tol = c.task.number_or("tol", opts.tol);
  opts.obstruction_tol = c.task.number_or("obstruction_tol", opts.obstruction_tol);
  opts.closed_tol = c.task.number_or("closed_tol", opts.closed_tol);
  opts.max_iter = c.task.integer_or("max_iter", opts.max_iter);
  const bool write = c.task.boolean_or("write_solution", true);
  // Sampled closed forms are closed only up to discretization error; the
  // projection drops the coexact Hodge part so the solver sees a closed f.
  const bool project = c.task.boolean_or("project_closed", false);
  if (project && p == n) c.task.fail("project_closed", "top-degree forms are always closed");

  TaskResult out;
  Series s{{"h", "cells", "iterations", "residual", "norm2"}, {}};
  for (double h : dom.ladder) {
    Json j;
    j["check"] = "solve";
    j["h"] = h;
    j["p"] = p;
    try {
      const auto cx = build_complex(dom.grid(h));
      Cochain f = form.on(cx);
      j["cells"] = cx.count(p - 1);
      if (project) {
        const auto parts = hodge_decompose(cx, f, phi.field, opts);
        const auto m = mass(cx, phi.field, p);
        j["coexact_fraction"] = std::sqrt(mass_dot(m, parts.coexact, parts.coexact) / mass_dot(m, f.values, f.values));
        f.values = parts.exact + parts.harmonic;
      }
      try {
        const auto sol = minimal_solution(cx, f, phi.field, opts);
        const double norm2 = mass_dot(mass(cx, phi.field, p - 1), sol.u.values, sol.u.values);
        j["iterations"] = sol.iterations;
        j["residual"] = sol.residual;
        j["harmonic_obstruction"] = sol.harmonic_obstruction;
        j["norm2"] = norm2;
        j["pass"] = expect.empty();
        s.rows.push_back({h, cx.count(p - 1), sol.iterations, sol.residual, norm2});
        if (write && h == dom.ladder.back()) {
          std::ostringstream os;
          write_cochain_csv(os, cx, sol.u);
          out.files["solution.csv"] = os.str();
        }
      } catch (const Error& e) {
        j["error"] = error_name(e);
        j["message"] = e.what();
        if (const auto* ob = dynamic_cast<const CohomologyObstruction*>(&e)) j["harmonic_norm"] = ob->harmonic_norm();
        j["pass"] = expect == error_name(e);
      }
    } catch (const Error& e) {
      push(c, out, error_record(e, "solve"));
      continue;
    }
    if (!expect.empty()) j["expected_error"] = expect;
    push(c, out, j);
  }
  out.series = s;
  return out;
}

Json report_json(const BoundReport& r, double alpha) {
  Json j;
  j["check"] = "bound";
  j["test"] = r.test;
  j["alpha"] = alpha;
  j["h"] = r.h;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["constant"] = r.constant;
  j["ratio"] = r.ratio;
  j["slack"] = r.slack;
  j["vacuous"] = r.vacuous;
  j["pass"] = r.pass;
  return j;
}

TaskResult task_bounds(const Ctx& c) {
  c.task.restrict_keys({"p", "tests", "alpha", "D", "slack", "monotone", "apriori_samples", "bitwise_equal", "tol"});
  static const std::set<std::string> known{"hormander",        "berndtsson", "berndtsson_via_nonpsh",
                                           "diameter",         "nonpsh",     "nonpsh_constant",
                                           "minimal_estimate"};
  const DomainSpec dom = read_domain(c.ini, true);
  const int n = dom.dim();
  const int p = c.task.integer("p");
  check_p(c.task, "p", p, 1, n);
  const FormSpec form = read_form(c.ini, n, p);
  const auto tests = c.task.words("tests");
  for (const auto& t : tests)
    if (!known.count(t)) c.task.fail("tests", "unknown bound '" + t + "'");
  const auto alphas = c.task.numbers_or("alpha", {0.0});
  const double slack = c.task.number_or("slack", kBoundSlack);
  const bool monotone = c.task.boolean_or("monotone", false);
  const int apriori = c.task.integer_or("apriori_samples", 6);
  const NamedField phi = weight_req(c.ini, "phi", n);
  const auto psi = weight_opt(c.ini, "psi", n);
  const auto omega = weight_opt(c.ini, "omega", n);
  auto needs = [&](const std::string& t) { return std::find(tests.begin(), tests.end(), t) != tests.end(); };
  for (const char* t : {"berndtsson", "berndtsson_via_nonpsh", "nonpsh", "nonpsh_constant", "minimal_estimate"})
    if (needs(t) && !psi) c.ini.section("weights").fail("psi", std::string(t) + " needs a psi weight");
  for (const char* t : {"nonpsh", "minimal_estimate"})
    if (needs(t) && !omega) c.ini.section("weights").fail("omega", std::string(t) + " needs an omega weight");
  double D = 0.0;
  if (needs("diameter")) {
    D = c.task.number("D");
    if (D <= 0.0) c.task.fail("D", "D must be positive");
  }
  std::vector<std::string> bitwise;
  if (c.task.has("bitwise_equal")) {
    bitwise = c.task.words("bitwise_equal");
    if (bitwise.size() != 2 || !needs(bitwise[0]) || !needs(bitwise[1]))
      c.task.fail("bitwise_equal", "name two of the listed tests");
  }
  SolveOptions opts;
  opts.tol = c.task.number_or("tol", opts.tol);

  TaskResult out;
  Series s{{"test", "alpha", "h", "lhs", "rhs", "constant", "ratio", "pass"}, {}};
  std::map<std::pair<std::string, double>, std::vector<double>> ratios;
  std::map<std::tuple<std::string, double, double>, BoundReport> by_key;
  Rng rng = make_stream(c.seed, "bounds");
  for (double h : dom.ladder) {
    std::optional<CubicalComplex> cx;
    Cochain f;
    try {
      cx = build_complex(dom.grid(h));
      f = form.on(*cx);
    } catch (const Error& e) {
      push(c, out, error_record(e, "bounds"));
      return out;
    }
    for (const auto& t : tests) {
      const bool uses_alpha = t != "hormander" && t != "diameter";
      for (double a : uses_alpha ? alphas : std::vector<double>{0.0}) {
        std::vector<BoundReport> reps;
        try {
          if (t == "hormander") reps.push_back(hormander_report(*cx, f, phi.field, opts, slack));
          if (t == "diameter") reps.push_back(diameter_report(*cx, f, phi.field, D, opts, slack));
          if (t == "nonpsh_constant") reps.push_back(nonpsh_constant_report(*cx, f, phi.field, psi->field, a, opts, slack));
          if (t == "nonpsh") reps.push_back(nonpsh_report(*cx, f, phi.field, psi->field, omega->field, a, opts, slack));
          if (t == "minimal_estimate")
            reps.push_back(minimal_estimate_report(*cx, f, phi.field, psi->field, omega->field, a, opts, slack));
          if (t == "berndtsson_via_nonpsh") reps.push_back(berndtsson_via_nonpsh(*cx, f, phi.field, psi->field, a, opts, slack));
          if (t == "berndtsson") {
            const auto b = berndtsson_report(*cx, f, phi.field, psi->field, a, rng(), apriori, opts, slack);
            reps.push_back(b.bound);
            reps.push_back(b.apriori);
          }
        } catch (const Error& e) {
          Json j = error_record(e, t);
          j["alpha"] = a;
          j["h"] = h;
          push(c, out, j);
          continue;
        }
        for (const auto& r : reps) {
          push(c, out, report_json(r, a));
          s.rows.push_back({r.test, a, h, r.lhs, r.rhs, r.constant, r.ratio, r.pass ? 1 : 0});
          if (r.test != "berndtsson_apriori_sampled") ratios[{r.test, a}].push_back(r.ratio);
          by_key[{r.test, a, h}] = r;
        }
      }
    }
  }
  Plot plot{"bound ratios", "h", "lhs / (constant rhs)", {}};
  for (const auto& [key, v] : ratios) {
    PlotLine line{key.first + (key.second != 0.0 ? " a=" + fmt(key.second) : std::string()), {}, {}};
    for (std::size_t i = 0; i < v.size() && i < dom.ladder.size(); ++i) {
      line.x.push_back(dom.ladder[i]);
      line.y.push_back(v[i]);
    }
    plot.lines.push_back(line);
    if (monotone && v.size() >= 2) {
      Json j;
      j["check"] = "ratio_monotone";
      j["test"] = key.first;
      j["alpha"] = key.second;
      j["ratios"] = v;
      j["pass"] = non_increasing(v);
      push(c, out, j);
    }
  }
  if (!bitwise.empty()) {
    std::string a = bitwise[0], b = bitwise[1];
    for (double h : dom.ladder) {
      const auto ia = by_key.find({a, 0.0, h}), ib = by_key.find({b, 0.0, h});
      Json j;
      j["check"] = "bitwise_equal";
      j["tests"] = bitwise;
      j["h"] = h;
      const bool found = ia != by_key.end() && ib != by_key.end();
      j["pass"] = found && ia->second.ratio == ib->second.ratio && ia->second.lhs == ib->second.lhs &&
                  ia->second.rhs * ia->second.constant == ib->second.rhs * ib->second.constant;
      if (found) j["ratios"] = {ia->second.ratio, ib->second.ratio};
      push(c, out, j);
    }
  }
  out.series = s;
  out.plot = plot;
  return out;
}

TaskResult task_cohomology(const Ctx& c) {
  c.task.restrict_keys({"degrees", "weights", "expect", "vanish_from", "block"});
  const DomainSpec dom = read_domain(c.ini, true);
  const int n = dom.dim();
  std::vector<int> degrees;
  for (double d : c.task.numbers_or("degrees", {})) {
    degrees.push_back(static_cast<int>(d));
    check_p(c.task, "degrees", degrees.back(), 0, n);
  }
  if (degrees.empty())
    for (int q = 0; q <= n; ++q) degrees.push_back(q);
  std::vector<NamedField> weights;
  if (c.task.has("weights")) {
    for (const auto& w : c.task.list("weights")) weights.push_back(field_from(c.task, "weights", w, n));
  } else {
    const auto phi = weight_opt(c.ini, "phi", n);
    weights.push_back(phi ? *phi : NamedField{Field::constant(n, 0.0), "0", std::nullopt});
  }
  std::vector<double> expect;
  if (c.task.has("expect")) {
    expect = c.task.numbers("expect");
    if (expect.size() != degrees.size()) c.task.fail("expect", "one rank per degree");
  }
  const std::optional<int> vanish =
      c.task.has("vanish_from") ? std::optional<int>(c.task.integer("vanish_from")) : std::nullopt;
  const int block = c.task.integer_or("block", 30);

  TaskResult out;
  Series s{{"h", "weight", "degree", "rank"}, {}};
  std::map<int, std::set<int>> seen;
  for (double h : dom.ladder) {
    std::optional<CubicalComplex> cx;
    try {
      cx = build_complex(dom.grid(h));
    } catch (const Error& e) {
      push(c, out, error_record(e, "cohomology"));
      return out;
    }
    for (std::size_t w = 0; w < weights.size(); ++w)
      for (std::size_t k = 0; k < degrees.size(); ++k) {
        const int q = degrees[k];
        Json j;
        j["check"] = "cohomology_rank";
        j["h"] = h;
        j["weight"] = weights[w].text;
        j["degree"] = q;
        j["cells"] = cx->count(q);
        try {
          const auto res = cohomology_rank(*cx, q, weights[w].field, block);
          j["rank"] = res.rank;
          j["threshold"] = res.threshold;
          j["eigenvalues"] = vec_json(res.eigenvalues.head(std::min<Eigen::Index>(res.eigenvalues.size(), res.rank + 3)));
          bool ok = true;
          if (!expect.empty()) {
            j["expected"] = static_cast<int>(expect[k]);
            ok = ok && res.rank == static_cast<int>(expect[k]);
          }
          if (vanish && q >= *vanish) ok = ok && res.rank == 0;
          j["pass"] = ok;
          seen[q].insert(res.rank);
          s.rows.push_back({h, static_cast<int>(w), q, res.rank});
        } catch (const Error& e) {
          j["error"] = error_name(e);
          j["message"] = e.what();
          j["pass"] = false;
        }
        push(c, out, j);
      }
  }
  Json inv;
  inv["check"] = "rank_invariance";
  inv["grids"] = dom.ladder.size();
  inv["weights"] = weights.size();
  Json ranks = Json::object();
  bool ok = true;
  for (int q : degrees) {
    const auto& set = seen[q];
    ranks[std::to_string(q)] = set.size() == 1 ? Json(*set.begin()) : Json(std::vector<int>(set.begin(), set.end()));
    ok = ok && set.size() == 1;
  }
  inv["ranks"] = ranks;
  if (vanish) inv["vanish_from"] = *vanish;
  inv["pass"] = ok;
  push(c, out, inv);
  out.series = s;
  return out;
}

TaskResult task_prekopa(const Ctx& c) {
  c.task.restrict_keys({"x_dim", "x_lo", "x_hi", "x_count", "y_lo", "y_hi", "y_nodes", "fd_step", "tol", "expect_second",
                        "expect_tol", "random_quadratics", "quadratic_tol"});
  if (c.ini.has("domain")) c.ini.section("domain").fail("", "prekopa integrates over [task] y_lo, y_hi");
  const int x_dim = c.task.integer_or("x_dim", 1);
  const auto y_lo = c.task.numbers("y_lo"), y_hi = c.task.numbers("y_hi");
  if (y_lo.size() != y_hi.size()) c.task.fail("y_hi", "y_lo and y_hi differ in length");
  const int n = x_dim + static_cast<int>(y_lo.size());
  if (x_dim < 1 || n > 4) c.task.fail("x_dim", "need x_dim >= 1 and x_dim + y_dim <= 4");
  const auto x_lo = c.task.numbers("x_lo"), x_hi = c.task.numbers("x_hi");
  if (static_cast<int>(x_lo.size()) != x_dim || x_hi.size() != x_lo.size())
    c.task.fail("x_lo", "x_lo and x_hi need x_dim entries");
  const int x_count = c.task.integer_or("x_count", 5);
  const int y_nodes = c.task.integer_or("y_nodes", 801);
  const double fd_step = c.task.number_or("fd_step", 1e-3), tol = c.task.number_or("tol", 1e-6);
  const std::optional<double> expect2 =
      c.task.has("expect_second") ? std::optional<double>(c.task.number("expect_second")) : std::nullopt;
  const double expect_tol = c.task.number_or("expect_tol", 1e-3);
  const int nq = c.task.integer_or("random_quadratics", 0);
  const double qtol = c.task.number_or("quadratic_tol", 1e-4);
  if (nq > 0 && n != 2) c.task.fail("random_quadratics", "random quadratics are two-dimensional");
  const auto phi = weight_opt(c.ini, "phi", n);
  if (!phi && nq == 0) c.ini.section("weights").fail("phi", "give a joint weight or random_quadratics");

  std::vector<Eigen::VectorXd> xs;
  const int count = x_dim == 1 ? x_count : static_cast<int>(std::pow(x_count, x_dim));
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd x(x_dim);
    int rest = k;
    for (int i = 0; i < x_dim; ++i) {
      const int t = rest % x_count;
      rest /= x_count;
      x[i] = x_count == 1 ? 0.5 * (x_lo[i] + x_hi[i]) : x_lo[i] + (x_hi[i] - x_lo[i]) * t / (x_count - 1);
    }
    xs.push_back(x);
  }
  const Eigen::VectorXd ylo = Eigen::Map<const Eigen::VectorXd>(y_lo.data(), y_lo.size());
  const Eigen::VectorXd yhi = Eigen::Map<const Eigen::VectorXd>(y_hi.data(), y_hi.size());

  TaskResult out;
  Series s{{"case", "x", "marginal", "min_hessian_eig"}, {}};
  auto run = [&](const std::string& label, const Field& f, std::optional<double> want, double want_tol) {
    Json j;
    j["check"] = "prekopa";
    j["phi"] = label;
    try {
      const auto r = prekopa_check(f, x_dim, xs, ylo, yhi, y_nodes, fd_step, tol);
      j["convex_input"] = r.convex_input;
      j["skipped"] = r.skipped;
      j["min_hessian_eig"] = r.min_hessian_eig;
      j["worst"] = r.worst;
      bool ok = r.skipped || r.pass;
      if (want && !r.skipped) {
        double err = 0.0;
        for (double e : r.min_hessian_eig) err = std::max(err, std::abs(e - *want));
        j["expected"] = *want;
        j["max_error"] = err;
        ok = ok && err <= want_tol;
      }
      j["pass"] = ok;
      for (std::size_t i = 0; i < xs.size() && i < r.marginal.size(); ++i)
        s.rows.push_back({label, xs[i][0], r.marginal[i], i < r.min_hessian_eig.size() ? Json(r.min_hessian_eig[i]) : Json()});
    } catch (const Error& e) {
      j = error_record(e, "prekopa");
      j["phi"] = label;
    }
    push(c, out, j);
  };
  if (phi) run(phi->text, phi->field, expect2, expect_tol);
  Rng rng = make_stream(c.seed, "prekopa");
  std::uniform_real_distribution<double> coef(0.5, 2.0), corr(-0.9, 0.9);
  for (int k = 0; k < nq; ++k) {
    const double q = coef(rng), sgm = coef(rng);
    const double m = corr(rng) * std::sqrt(q * sgm);
    const std::string text = fmt(q) + "*x1^2 + 2*" + fmt(m) + "*x1*x2 + " + fmt(sgm) + "*x2^2";
    run(text, ScalarFieldExpr::parse(text, 2).as_field(), 2.0 * (q - m * m / sgm), qtol);
  }
  out.series = s;
  return out;
}

TaskResult task_algebra(const Ctx& c) {
  c.task.restrict_keys({"cases", "n_max", "tol", "curvature_cases", "signature_n_max"});
  const int cases = c.task.integer_or("cases", 1000);
  const int n_max = c.task.integer_or("n_max", 6);
  const double tol = c.task.number_or("tol", 1e-10);
  const int curv = c.task.integer_or("curvature_cases", 500);
  const int sig_max = c.task.integer_or("signature_n_max", 7);
  if (n_max < 2 || n_max > 8) c.task.fail("n_max", "n_max must be in [2, 8]");
  if (sig_max < 1 || sig_max > 10) c.task.fail("signature_n_max", "signature_n_max must be in [1, 10]");

  Rng rng = make_stream(c.seed, "algebra-battery");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rnd_form = [&](int n, int p) {
    PointForm g(n, p);
    for (std::size_t r = 0; r < g.size(); ++r) g[r] = u(rng);
    return g;
  };
  auto rnd_matrix = [&](int r, int k) {
    Eigen::MatrixXd m(r, k);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < k; ++j) m(i, j) = u(rng);
    return m;
  };
  auto rnd_sym = [&](int n) {
    const Eigen::MatrixXd a = rnd_matrix(n, n);
    return Eigen::MatrixXd(0.5 * (a + a.transpose()));
  };
  auto dims = [&](int t) {
    const int n = 2 + t % (n_max - 1);
    return std::pair{n, 1 + (t / (n_max - 1)) % n};
  };

  TaskResult out;
  auto record = [&](const std::string& name, int count, double max_err, bool ok, Json extra = Json::object()) {
    Json j;
    j["check"] = name;
    j["cases"] = count;
    j["max_error"] = max_err;
    for (auto& [k, v] : extra.items()) j[k] = v;
    j["pass"] = ok;
    push(c, out, j);
  };

  double e_id = 0.0, e_sa = 0.0, e_sp = 0.0;
  for (int t = 0; t < cases; ++t) {
    const auto [n, p] = dims(t);
    const QuadraticForm th(rnd_sym(n));
    const auto g = rnd_form(n, p), h = rnd_form(n, p);
    // <F g, g> against theta_jk <e_j -| g, e_k -| g>
    std::vector<PointForm> contracted;
    for (int j = 0; j < n; ++j) {
      std::vector<double> e(n, 0.0);
      e[j] = 1.0;
      contracted.push_back(interior_product(e, g));
    }
    double want = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) want += th(j, k) * dot(contracted[j], contracted[k]);
    e_id = std::max(e_id, std::abs(dot(apply_F(th, g), g) - want) / (1.0 + std::abs(want)));
    e_sa = std::max(e_sa, std::abs(dot(apply_F(th, g), h) - dot(g, apply_F(th, h))));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(F_matrix(th, p));
    const auto sums = eigen_F(th, p).values;
    for (std::size_t k = 0; k < sums.size(); ++k) e_sp = std::max(e_sp, std::abs(es.eigenvalues()[k] - sums[k]));
  }
  record("F_quadratic_identity", cases, e_id, e_id <= tol);
  record("F_self_adjoint", cases, e_sa, e_sa <= tol);
  record("F_spectrum", cases, e_sp, e_sp <= tol);

  int bad = 0;
  double worst = 0.0;
  for (int t = 0; t < cases; ++t) {
    const auto [n, p] = dims(t);
    Eigen::VectorXd tv(n);
    for (int i = 0; i < n; ++i) tv[i] = u(rng);
    const int rk = 1 + t % n;
    const Eigen::MatrixXd b = rnd_matrix(n, rk);
    const QuadraticForm th = QuadraticForm::outer(std::span<const double>(tv.data(), n)) + QuadraticForm(b * b.transpose());
    const auto xi = rnd_form(n, p - 1);
    const auto f = apply_F(th, rnd_form(n, p));
    try {
      const auto r = lemma11_verify(th, std::span<const double>(tv.data(), n), xi, f);
      worst = std::max({worst, r.cross_lhs - r.cross_rhs, r.self_lhs - r.self_rhs, r.membership_residual});
      if (!(r.membership_ok && r.cross_ineq_ok && r.self_ineq_ok)) ++bad;
    } catch (const Error&) {
      ++bad;
    }
  }
  // theta = tau (x) tau: the self inequality is an equality for xi orthogonal to tau's kernel directions
  const double tau[] = {1.0, 0.0};
  const auto eq = lemma11_verify(QuadraticForm::outer(tau), tau, PointForm::basis(2, {2}));
  const double eq_gap = std::abs(eq.self_lhs - eq.self_rhs);
  record("rank_one_image_lemma", cases, worst, bad == 0 && worst <= 1e-10 && eq_gap <= 1e-12,
         {{"failures", bad}, {"equality_gap", eq_gap}});

  double ib = -INFINITY, id_gap = 0.0;
  int ib_bad = 0;
  for (int t = 0; t < cases / 2; ++t) {
    const auto [n, p] = dims(t);
    const Eigen::MatrixXd b = rnd_matrix(n, n);
    const QuadraticForm th(b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n));
    const auto g = rnd_form(n, p);
    const auto r = inverse_bound_check(th, g);
    ib = std::max(ib, r.lhs - r.rhs);
    if (!r.holds) ++ib_bad;
    const double cst = 0.5 + std::abs(u(rng));
    const auto e = inverse_bound_check(QuadraticForm::identity(n, cst), g);
    id_gap = std::max(id_gap, std::abs(e.lhs - e.rhs));
  }
  record("inverse_bound", cases / 2, ib, ib_bad == 0 && id_gap <= 1e-12, {{"equality_gap", id_gap}});

  bool sig_ok = true;
  Json sig = Json::array();
  for (int n = 1; n <= sig_max; ++n)
    for (int p = 1; p <= n; ++p) {
      const int got = signature_count(n, p);
      sig_ok = sig_ok && got == p * (n - p);
      sig.push_back({n, p, got});
    }
  record("signature_count", static_cast<int>(sig.size()), 0.0, sig_ok, {{"counts", sig}});

  double cb = 0.0, ceq = 0.0;
  int cb_bad = 0;
  for (int t = 0; t < curv; ++t) {
    const auto [n, p] = dims(t);
    const int m = n * (n - 1) / 2;
    const CurvatureOperator R(n, rnd_sym(m));
    const auto g = rnd_form(n, p);
    const auto r = curvature_bounds_check(R, g);
    cb = std::max({cb, r.lower - r.term, r.term - r.upper});
    if (!r.holds) ++cb_bad;
    const double cst = 2.0 * u(rng);
    const auto e = curvature_bounds_check(CurvatureOperator::identity(n, cst), g);
    ceq = std::max({ceq, std::abs(e.term - e.lower), std::abs(e.term - e.upper)});
  }
  record("curvature_bounds", curv, cb, cb_bad == 0 && ceq <= 1e-10, {{"equality_gap", ceq}});
  return out;
}

}  // namespace

TaskResult run_experiment(const IniFile& ini, std::optional<std::uint64_t> seed_override, bool verbose) {
  static const std::set<std::string> sections{"run", "domain", "weights", "form", "task", "sweep"};
  for (const auto& [name, sec] : ini.sections())
    if (!sections.count(name)) throw ConfigError(sec.line(), name, "unknown section");
  const Section& run = ini.section("run");
  run.restrict_keys({"task", "seed"});
  const std::string task = run.text("task");
  if (std::find(task_names().begin(), task_names().end(), task) == task_names().end())
    run.fail("task", "unknown task '" + task + "'");
  if (ini.has("sweep") && task != "df-search") ini.section("sweep").fail("", "only df-search supports a sweep");
  if (ini.has("weights")) ini.section("weights").restrict_keys({"phi", "psi", "omega"});
  std::uint64_t seed = 0;
  if (run.has("seed")) {
    const double s = run.number("seed");
    if (s < 0 || s != std::floor(s)) run.fail("seed", "seed must be a nonnegative integer");
    seed = static_cast<std::uint64_t>(s);
  }
  if (seed_override) seed = *seed_override;

  const Ctx ctx{ini, seed, verbose, ini.section_or_empty("task")};
  TaskResult out;
  if (task == "check-psh") out = task_check_psh(ctx);
  if (task == "boundary-convexity") out = task_boundary_convexity(ctx);
  if (task == "df-search") out = task_df_search(ctx);
  if (task == "kmh") out = task_kmh(ctx);
  if (task == "solve") out = task_solve(ctx);
  if (task == "bounds") out = task_bounds(ctx);
  if (task == "cohomology") out = task_cohomology(ctx);
  if (task == "prekopa") out = task_prekopa(ctx);
  if (task == "algebra-battery") out = task_algebra(ctx);
  out.task = task;
  for (const auto& r : out.records)
    if (r.contains("pass") && !r["pass"].get<bool>()) out.pass = false;
  return out;
}

std::string builtins_text() {
  std::ostringstream os;
  for (const char* kind : {"weight", "domain"}) {
    os << (std::string(kind) == "weight" ? "weights" : "domains") << ":\n";
    for (const auto& d : builtin_docs())
      if (std::string(d.kind) == kind) os << "  " << d.signature << "\n      " << d.doc << "\n";
  }
  os << "tasks:\n";
  for (const auto& t : task_names()) os << "  " << t << "\n";
  return os.str();
}

std::string series_csv(const Series& s) {
  std::ostringstream os;
  for (std::size_t i = 0; i < s.columns.size(); ++i) os << (i ? "," : "") << s.columns[i];
  os << "\n";
  for (const auto& row : s.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ",";
      if (row[i].is_string()) {
        std::string v = row[i].get<std::string>();
        if (v.find_first_of(",\"") != std::string::npos) {
          std::string q = "\"";
          for (char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
          v = q + "\"";
        }
        os << v;
      } else {
        os << row[i].dump();
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace pconvex::app
