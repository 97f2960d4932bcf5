#pragma once

// Run configurations: a JSON document naming a scenario (builtin or custom),
// tolerances and the suites to run. Unknown keys are errors. The schema is
// documented in the README.

#include "algdich/analysis.hpp"
#include "algdich/dichotomy.hpp"
#include "algdich/errors.hpp"
#include "algdich/expression.hpp"
#include "algdich/growth_rate.hpp"
#include "algdich/problem.hpp"
#include "algdich/scenarios.hpp"
#include "algdich/types.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace algdich {

using Json = nlohmann::json;

/// A declared constant or a request to estimate it.
struct Declared {
  std::optional<double> value;  // empty: estimate
};

struct CustomScenarioConfig {
  std::string label = "custom";
  Eigen::Index dimension = 0;
  std::vector<std::vector<Expression>> A;
  std::vector<Expression> f;  // empty: no perturbation
  Expression mu, mu_prime;
  std::optional<Expression> log_mu;
  Matrix projector;
  Declared K, alpha, beta, gamma;
  std::optional<double> norm_bound;
};

struct ScenarioConfig {
  std::string builtin;  // empty for custom
  std::map<std::string, double> parameters;
  std::string rate = "exponential";
  std::optional<CustomScenarioConfig> custom;
};

struct SuiteConfig {
  std::string type;
  std::vector<InitialCondition> initial_conditions;
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<StatePair> pairs;
  std::vector<double> offsets;
  double t = 0.0;
  Vector base, direction;
  std::vector<double> scales;
  std::vector<Vector> vectors;
  double horizon = 5.0;
  double threshold = 10.0;

  /// times x states.
  std::vector<TimedState> points() const {
    std::vector<TimedState> out;
    for (double tt : times)
      for (const auto& x : states) out.push_back({tt, x});
    return out;
  }
};

struct ResidualConfig {
  double forward = 1e-4;
  double inverse = 1e-3;
  double roundtrip = 1e-3;
  double bound_slack = 1e-3;
  double contraction_slack = 0.02;
  double gronwall_slack = 1e-6;
};

struct DichotomyCheckConfig {
  std::optional<Interval> interval;
  std::optional<int> points;
  double slack = 1e-6;
  bool fit = true;
};

struct RunConfig {
  ScenarioConfig scenario;
  std::optional<Interval> working_interval;
  DichotomyCheckConfig dichotomy;
  ProblemOptions options;
  ResidualConfig residual;
  std::vector<SuiteConfig> suites;
  std::optional<std::string> report_path;
  std::optional<std::string> csv_path;
};

namespace config_detail {

inline void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; })) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + " must be finite");
  return v;
}

inline double positive(const Json& j, const std::string& where) {
  const double v = number(j, where);
  if (!(v > 0.0)) throw ConfigError(where + " must be positive");
  return v;
}

inline int positive_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 1)
    throw ConfigError(where + " must be a positive integer");
  return j.get<int>();
}

inline std::string text(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + " must be a string");
  return j.get<std::string>();
}

inline Interval interval(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + " must be [lo, hi]");
  Interval iv{number(j[0], where + "[0]"), number(j[1], where + "[1]")};
  if (!(iv.hi > iv.lo)) throw ConfigError(where + " must be nonempty (lo < hi)");
  return iv;
}

inline Vector vector(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a nonempty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

/// Either an explicit list or {"from", "to", "points"}.
inline std::vector<double> times(const Json& j, const std::string& where) {
  std::vector<double> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
  }
  check_keys(j, {"from", "to", "points"}, where);
  if (!j.contains("from") || !j.contains("to") || !j.contains("points"))
    throw ConfigError(where + " needs from, to and points");
  const double a = number(j["from"], where + ".from"), b = number(j["to"], where + ".to");
  const int n = positive_int(j["points"], where + ".points");
  if (n == 1) return {a};
  for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
  return out;
}

inline Expression expression(const Json& j, const std::string& where) {
  const std::string src = text(j, where);
  try {
    return parse_expression(src);
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.message(), e.line(), e.column());
  }
}

inline Declared declared(const Json& j, const std::string& where, const char* keyword) {
  if (j.is_string()) {
    if (j.get<std::string>() != keyword)
      throw ConfigError(where + " must be a number or \"" + keyword + "\"");
    return {};
  }
  return {number(j, where)};
}

inline CustomScenarioConfig custom(const Json& j) {
  const std::string w = "scenario.custom";
  check_keys(j, {"label", "dimension", "A", "f", "mu", "mu_prime", "log_mu", "projector", "K",
                 "alpha", "beta", "gamma", "norm_bound"},
             w);
  for (const char* k : {"dimension", "A", "mu", "mu_prime", "projector", "K", "alpha"})
    if (!j.contains(k)) throw ConfigError(w + " is missing '" + k + "'");
  CustomScenarioConfig c;
  if (j.contains("label")) c.label = text(j["label"], w + ".label");
  c.dimension = positive_int(j["dimension"], w + ".dimension");
  const auto n = static_cast<std::size_t>(c.dimension);
  const Json& a = j["A"];
  if (!a.is_array() || a.size() != n) throw ConfigError(w + ".A must have dimension rows");
  for (std::size_t r = 0; r < n; ++r) {
    if (!a[r].is_array() || a[r].size() != n)
      throw ConfigError(w + ".A row " + std::to_string(r) + " must have dimension entries");
    c.A.emplace_back();
    for (std::size_t k = 0; k < n; ++k) {
      auto e = expression(a[r][k], w + ".A[" + std::to_string(r) + "][" + std::to_string(k) + "]");
      if (e.uses_state()) throw ConfigError(w + ".A entries may only depend on t");
      c.A.back().push_back(std::move(e));
    }
  }
  if (j.contains("f")) {
    const Json& f = j["f"];
    if (!f.is_array() || f.size() != n) throw ConfigError(w + ".f must have dimension entries");
    for (std::size_t k = 0; k < n; ++k) {
      auto e = expression(f[k], w + ".f[" + std::to_string(k) + "]");
      if (e.state_dimension() > c.dimension)
        throw ConfigError(w + ".f[" + std::to_string(k) + "] uses a state beyond the dimension");
      c.f.push_back(std::move(e));
    }
  }
  c.mu = expression(j["mu"], w + ".mu");
  c.mu_prime = expression(j["mu_prime"], w + ".mu_prime");
  if (j.contains("log_mu")) c.log_mu = expression(j["log_mu"], w + ".log_mu");
  for (const auto* e : {&c.mu, &c.mu_prime})
    if (e->uses_state()) throw ConfigError(w + ": mu and mu_prime may only depend on t");
  const Json& p = j["projector"];
  if (!p.is_array() || p.size() != n) throw ConfigError(w + ".projector must be n x n");
  c.projector.resize(c.dimension, c.dimension);
  for (std::size_t r = 0; r < n; ++r) {
    const Vector row = vector(p[r], w + ".projector[" + std::to_string(r) + "]");
    if (row.size() != c.dimension) throw ConfigError(w + ".projector must be n x n");
    c.projector.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  c.K = declared(j["K"], w + ".K", "fit");
  c.alpha = declared(j["alpha"], w + ".alpha", "fit");
  if (c.K.value.has_value() != c.alpha.value.has_value())
    throw ConfigError(w + ": K and alpha are fitted together; declare both or fit both");
  if (c.K.value && !(*c.K.value > 0.0)) throw ConfigError(w + ".K must be positive");
  if (c.alpha.value && !(*c.alpha.value > 0.0)) throw ConfigError(w + ".alpha must be positive");
  if (!c.f.empty()) {
    if (!j.contains("beta") || !j.contains("gamma"))
      throw ConfigError(w + ": a perturbation needs beta and gamma (numbers or \"estimate\")");
  }
  c.beta = j.contains("beta") ? declared(j["beta"], w + ".beta", "estimate") : Declared{0.0};
  c.gamma = j.contains("gamma") ? declared(j["gamma"], w + ".gamma", "estimate") : Declared{0.0};
  if (c.beta.value && *c.beta.value < 0.0) throw ConfigError(w + ".beta must be nonnegative");
  if (c.gamma.value && *c.gamma.value < 0.0) throw ConfigError(w + ".gamma must be nonnegative");
  if (j.contains("norm_bound")) c.norm_bound = positive(j["norm_bound"], w + ".norm_bound");
  return c;
}

inline ScenarioConfig scenario(const Json& j) {
  check_keys(j, {"builtin", "parameters", "rate", "custom"}, "scenario");
  ScenarioConfig s;
  if (j.contains("custom") == j.contains("builtin"))
    throw ConfigError("scenario needs exactly one of 'builtin' and 'custom'");
  if (j.contains("custom")) {
    if (j.contains("parameters") || j.contains("rate"))
      throw ConfigError("scenario.parameters and scenario.rate apply to builtin scenarios only");
    s.custom = custom(j["custom"]);
    return s;
  }
  s.builtin = text(j["builtin"], "scenario.builtin");
  std::initializer_list<const char*> allowed;
  std::map<std::string, double> defaults;
  if (s.builtin == "example_2_2") {
    defaults = {{"eta1", 1.0}, {"eta2", 1.0}};
  } else if (s.builtin == "section5") {
    defaults = {{"eta1", 1.0}, {"eta2", 1.0}, {"epsilon", 0.05}};
  } else if (s.builtin == "scalar_oracle") {
    defaults = {{"a", 1.0}, {"c", 0.5}};
  } else {
    throw ConfigError("unknown builtin scenario '" + s.builtin +
                      "' (example_2_2, section5, scalar_oracle)");
  }
  s.parameters = defaults;
  if (j.contains("parameters")) {
    const Json& p = j["parameters"];
    if (!p.is_object()) throw ConfigError("scenario.parameters must be an object");
    for (auto it = p.begin(); it != p.end(); ++it) {
      if (!defaults.count(it.key()))
        throw ConfigError("unknown key '" + it.key() + "' in scenario.parameters");
      s.parameters[it.key()] = number(it.value(), "scenario.parameters." + it.key());
    }
  }
  if (j.contains("rate")) {
    if (s.builtin != "example_2_2")
      throw ConfigError("scenario.rate applies to example_2_2 only");
    s.rate = text(j["rate"], "scenario.rate");
  }
  return s;
}

inline void tolerances(const Json& j, RunConfig& rc) {
  check_keys(j, {"quadrature", "picard", "integrator", "evolution", "residual"}, "tolerances");
  auto& o = rc.options;
  if (j.contains("quadrature")) {
    const Json& q = j["quadrature"];
    const std::string w = "tolerances.quadrature";
    check_keys(q, {"tail_tol", "panel_tol", "panel_rule", "max_panels", "initial_panel_length",
                   "trajectory_relaxation", "max_relaxation"},
               w);
    if (q.contains("tail_tol")) o.quad.tail_tol = positive(q["tail_tol"], w + ".tail_tol");
    if (q.contains("panel_tol")) o.quad.panel_tol = positive(q["panel_tol"], w + ".panel_tol");
    if (q.contains("panel_rule")) o.quad.panel_rule = text(q["panel_rule"], w + ".panel_rule");
    if (q.contains("max_panels"))
      o.quad.max_panels = static_cast<std::size_t>(positive_int(q["max_panels"], w + ".max_panels"));
    if (q.contains("initial_panel_length"))
      o.quad.initial_panel_length = positive(q["initial_panel_length"], w + ".initial_panel_length");
    if (q.contains("trajectory_relaxation")) {
      o.quad.trajectory_relaxation = number(q["trajectory_relaxation"], w + ".trajectory_relaxation");
      if (o.quad.trajectory_relaxation < 0.0)
        throw ConfigError(w + ".trajectory_relaxation must be nonnegative");
    }
    if (q.contains("max_relaxation")) {
      o.quad.max_relaxation = number(q["max_relaxation"], w + ".max_relaxation");
      if (o.quad.max_relaxation < 1.0) throw ConfigError(w + ".max_relaxation must be >= 1");
    }
  }
  if (j.contains("picard")) {
    const Json& p = j["picard"];
    const std::string w = "tolerances.picard";
    check_keys(p, {"grid_spacing", "stop_tol", "max_iter", "quad_tol", "max_panels",
                   "window_factor"},
               w);
    if (p.contains("grid_spacing"))
      o.picard.grid_spacing = positive(p["grid_spacing"], w + ".grid_spacing");
    if (p.contains("stop_tol")) o.picard.stop_tol = positive(p["stop_tol"], w + ".stop_tol");
    if (p.contains("max_iter")) o.picard.max_iter = positive_int(p["max_iter"], w + ".max_iter");
    if (p.contains("quad_tol")) o.picard.quad_tol = positive(p["quad_tol"], w + ".quad_tol");
    if (p.contains("max_panels"))
      o.picard.max_panels = static_cast<std::size_t>(positive_int(p["max_panels"], w + ".max_panels"));
    if (p.contains("window_factor")) {
      o.picard.window_factor = number(p["window_factor"], w + ".window_factor");
      if (o.picard.window_factor < 1.0) throw ConfigError(w + ".window_factor must be >= 1");
    }
  }
  if (j.contains("integrator")) {
    const Json& ig = j["integrator"];
    const std::string w = "tolerances.integrator";
    check_keys(ig, {"rtol", "atol", "max_steps"}, w);
    for (auto* cfg : {&o.flow, &o.evolution.integrator}) {
      if (ig.contains("rtol")) cfg->rtol = positive(ig["rtol"], w + ".rtol");
      if (ig.contains("atol")) cfg->atol = positive(ig["atol"], w + ".atol");
      if (ig.contains("max_steps"))
        cfg->max_steps = static_cast<std::size_t>(positive_int(ig["max_steps"], w + ".max_steps"));
    }
  }
  if (j.contains("evolution")) {
    const Json& e = j["evolution"];
    check_keys(e, {"knot_spacing"}, "tolerances.evolution");
    if (e.contains("knot_spacing"))
      o.evolution.knot_spacing = positive(e["knot_spacing"], "tolerances.evolution.knot_spacing");
  }
  if (j.contains("residual")) {
    const Json& r = j["residual"];
    const std::string w = "tolerances.residual";
    check_keys(r, {"forward", "inverse", "roundtrip", "bound_slack", "contraction_slack",
                   "gronwall_slack"},
               w);
    auto& rs = rc.residual;
    if (r.contains("forward")) rs.forward = positive(r["forward"], w + ".forward");
    if (r.contains("inverse")) rs.inverse = positive(r["inverse"], w + ".inverse");
    if (r.contains("roundtrip")) rs.roundtrip = positive(r["roundtrip"], w + ".roundtrip");
    if (r.contains("bound_slack")) rs.bound_slack = positive(r["bound_slack"], w + ".bound_slack");
    if (r.contains("contraction_slack"))
      rs.contraction_slack = positive(r["contraction_slack"], w + ".contraction_slack");
    if (r.contains("gronwall_slack"))
      rs.gronwall_slack = positive(r["gronwall_slack"], w + ".gronwall_slack");
  }
}

inline std::vector<Vector> vectors(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a nonempty array");
  std::vector<Vector> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(vector(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline SuiteConfig suite(const Json& j, std::size_t index) {
  const std::string w = "suites[" + std::to_string(index) + "]";
  if (!j.is_object() || !j.contains("type")) throw ConfigError(w + " needs a 'type'");
  SuiteConfig s;
  s.type = text(j["type"], w + ".type");
  auto need = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (!j.contains(k)) throw ConfigError(w + " (" + s.type + ") is missing '" + k + "'");
  };
  if (s.type == "conjugacy_residual") {
    check_keys(j, {"type", "initial_conditions", "times"}, w);
    need({"initial_conditions", "times"});
    const Json& ics = j["initial_conditions"];
    if (!ics.is_array() || ics.empty())
      throw ConfigError(w + ".initial_conditions must be a nonempty array");
    for (std::size_t i = 0; i < ics.size(); ++i) {
      const std::string wi = w + ".initial_conditions[" + std::to_string(i) + "]";
      check_keys(ics[i], {"t0", "x0"}, wi);
      if (!ics[i].contains("t0") || !ics[i].contains("x0"))
        throw ConfigError(wi + " needs t0 and x0");
      s.initial_conditions.push_back(
          {number(ics[i]["t0"], wi + ".t0"), vector(ics[i]["x0"], wi + ".x0")});
    }
    s.times = times(j["times"], w + ".times");
  } else if (s.type == "roundtrip" || s.type == "bound" || s.type == "contraction") {
    check_keys(j, {"type", "times", "states"}, w);
    need({"times", "states"});
    s.times = times(j["times"], w + ".times");
    s.states = vectors(j["states"], w + ".states");
  } else if (s.type == "holder") {
    check_keys(j, {"type", "t", "base", "direction", "scales"}, w);
    need({"t", "base", "direction", "scales"});
    s.t = number(j["t"], w + ".t");
    s.base = vector(j["base"], w + ".base");
    s.direction = vector(j["direction"], w + ".direction");
    s.scales = times(j["scales"], w + ".scales");
  } else if (s.type == "gronwall") {
    check_keys(j, {"type", "pairs", "offsets"}, w);
    need({"pairs", "offsets"});
    const Json& ps = j["pairs"];
    if (!ps.is_array() || ps.empty()) throw ConfigError(w + ".pairs must be a nonempty array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string wi = w + ".pairs[" + std::to_string(i) + "]";
      check_keys(ps[i], {"t0", "a", "b"}, wi);
      if (!ps[i].contains("t0") || !ps[i].contains("a") || !ps[i].contains("b"))
        throw ConfigError(wi + " needs t0, a and b");
      s.pairs.push_back({number(ps[i]["t0"], wi + ".t0"), vector(ps[i]["a"], wi + ".a"),
                         vector(ps[i]["b"], wi + ".b")});
    }
    s.offsets = times(j["offsets"], w + ".offsets");
  } else if (s.type == "no_bounded_solution") {
    check_keys(j, {"type", "vectors", "horizon", "threshold"}, w);
    need({"vectors"});
    s.vectors = vectors(j["vectors"], w + ".vectors");
    if (j.contains("horizon")) s.horizon = positive(j["horizon"], w + ".horizon");
    if (j.contains("threshold")) s.threshold = positive(j["threshold"], w + ".threshold");
  } else {
    throw ConfigError(w + ": unknown suite type '" + s.type +
                      "' (conjugacy_residual, roundtrip, bound, holder, contraction, gronwall, "
                      "no_bounded_solution)");
  }
  return s;
}

}  // namespace config_detail

inline RunConfig parse_run_config(const Json& j) {
  namespace cd = config_detail;
  cd::check_keys(j, {"scenario", "working_interval", "override_gates", "dichotomy", "tolerances",
                     "suites", "output"},
                 "config");
  if (!j.contains("scenario")) throw ConfigError("config needs a 'scenario'");
  RunConfig rc;
  rc.scenario = cd::scenario(j["scenario"]);
  if (j.contains("working_interval"))
    rc.working_interval = cd::interval(j["working_interval"], "working_interval");
  if (j.contains("override_gates")) {
    if (!j["override_gates"].is_boolean()) throw ConfigError("override_gates must be a boolean");
    rc.options.override_gates = j["override_gates"].get<bool>();
  }
  if (j.contains("dichotomy")) {
    const Json& d = j["dichotomy"];
    cd::check_keys(d, {"interval", "points", "slack", "fit"}, "dichotomy");
    if (d.contains("interval")) rc.dichotomy.interval = cd::interval(d["interval"], "dichotomy.interval");
    if (d.contains("points")) {
      rc.dichotomy.points = cd::positive_int(d["points"], "dichotomy.points");
      if (*rc.dichotomy.points < 2) throw ConfigError("dichotomy.points must be at least 2");
    }
    if (d.contains("slack")) rc.dichotomy.slack = cd::number(d["slack"], "dichotomy.slack");
    if (d.contains("fit")) {
      if (!d["fit"].is_boolean()) throw ConfigError("dichotomy.fit must be a boolean");
      rc.dichotomy.fit = d["fit"].get<bool>();
    }
  }
  if (j.contains("tolerances")) cd::tolerances(j["tolerances"], rc);
  if (j.contains("suites")) {
    const Json& s = j["suites"];
    if (!s.is_array()) throw ConfigError("suites must be an array");
    for (std::size_t i = 0; i < s.size(); ++i) rc.suites.push_back(cd::suite(s[i], i));
  }
  if (j.contains("output")) {
    const Json& o = j["output"];
    cd::check_keys(o, {"report", "csv"}, "output");
    if (o.contains("report")) rc.report_path = cd::text(o["report"], "output.report");
    if (o.contains("csv")) rc.csv_path = cd::text(o["csv"], "output.csv");
  }
  return rc;
}

/// A scenario built from a configuration, with the provenance of its constants.
struct BuiltScenario {
  Scenario scenario;
  bool K_estimated = false;
  bool alpha_estimated = false;
  std::optional<DichotomyFit> fit;
};

namespace config_detail {

inline GrowthRate builtin_rate(const std::string& name) {
  if (name == "exponential") return rates::exponential();
  if (name == "algebraic") return rates::algebraic();
  if (name == "arctan_exponential") return rates::arctan_exponential();
  throw ConfigError("unknown rate '" + name + "' (exponential, algebraic, arctan_exponential)");
}

inline std::vector<double> uniform(Interval iv, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(iv.lo + iv.length() * i / (n - 1));
  return out;
}

/// Sample states for estimating beta and gamma: a grid on [-2, 2]^n for
/// n <= 3, a fixed pseudo-random sample otherwise.
inline std::vector<Vector> sample_states(Eigen::Index n) {
  std::vector<Vector> out;
  if (n <= 3) {
    const std::vector<double> axis{-2.0, -1.0, 0.0, 1.0, 2.0};
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    for (;;) {
      Vector v(n);
      for (Eigen::Index i = 0; i < n; ++i) v(i) = axis[idx[static_cast<std::size_t>(i)]];
      out.push_back(v);
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == axis.size()) idx[k++] = 0;
      if (k == idx.size()) break;
    }
    return out;
  }
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 64; ++i) {
    Vector v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = u(rng);
    out.push_back(v);
  }
  return out;
}

inline BuiltScenario build_custom(const CustomScenarioConfig& c, Interval working,
                                  const DichotomyCheckConfig& dc) {
  BuiltScenario out;
  Scenario& sc = out.scenario;
  sc.label = c.label;
  sc.working = working;
  const Expression mu = c.mu, mup = c.mu_prime;
  const std::optional<Expression> lmu = c.log_mu;
  sc.rate = GrowthRate{
      [mu](double t) { return mu(t); },
      [mup](double t) { return mup(t); },
      [mu, lmu](double t) {
        if (lmu) return (*lmu)(t);
        const double v = mu(t);
        if (!(v > 0.0)) throw EvaluationError("mu(t) must be positive; t = " + std::to_string(t));
        return std::log(v);
      },
      c.label + " rate",
  };
  const auto n = c.dimension;
  const auto A = c.A;
  MatrixFunction coeff = [A, n](double t) {
    Matrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index k = 0; k < n; ++k)
        m(r, k) = A[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)](t);
    return m;
  };
  double M = 0.0;
  bool estimated = false;
  if (c.norm_bound) {
    M = *c.norm_bound;
  } else {
    std::vector<double> grid;
    for (int i = 0; i <= 2000; ++i) grid.push_back(working.lo + working.length() * i / 2000.0);
    M = 1.05 * sample_norm_bound(coeff, grid);
    estimated = true;
    sc.notes.push_back("norm bound M sampled on the working interval and inflated by 5%");
  }
  sc.system = LinearSystem{n, coeff, M, estimated, c.label};
  const Matrix P = c.projector;
  sc.spec.projector = [P](double) { return P; };
  sc.spec.rate = sc.rate;
  if (dc.interval) sc.pair_interval = *dc.interval;
  if (dc.points) sc.pair_points = *dc.points;
  if (c.K.value) {
    sc.spec.K = *c.K.value;
    sc.spec.alpha = *c.alpha.value;
  } else {
    EvolutionCache cache(sc.system, working);
    out.fit = fit_dichotomy_constants(cache, sc.spec.projector, sc.rate, sc.default_pairs());
    sc.spec.K = out.fit->K;
    sc.spec.alpha = out.fit->alpha;
    if (!(sc.spec.K > 0.0) || !(sc.spec.alpha > 0.0))
      throw FitError("fitted dichotomy constants are not positive (K = " +
                     std::to_string(sc.spec.K) + ", alpha = " + std::to_string(sc.spec.alpha) + ")");
    out.K_estimated = out.alpha_estimated = true;
    sc.notes.push_back("K and alpha fitted on the dichotomy grid (estimated)");
  }
  if (!c.f.empty()) {
    const auto f = c.f;
    NonlinearTerm term{[f, n](double t, const Vector& x) {
                         Vector v(n);
                         for (Eigen::Index k = 0; k < n; ++k) v(k) = f[static_cast<std::size_t>(k)](t, x);
                         return v;
                       },
                       c.beta.value.value_or(0.0), c.gamma.value.value_or(0.0), sc.rate};
    if (!c.beta.value || !c.gamma.value) {
      const auto times = uniform(sc.pair_interval, 21);
      const auto states = sample_states(n);
      const auto est = with_estimated_constants(term, times, states);
      if (!c.beta.value) {
        term.beta = est.beta;
        term.beta_estimated = true;
      }
      if (!c.gamma.value) {
        term.gamma = est.gamma;
        term.gamma_estimated = true;
      }
      sc.notes.push_back("beta/gamma estimated by sampling on [-2, 2]^n and inflated by 5%");
    }
    sc.perturbation = term;
  }
  return out;
}

}  // namespace config_detail

/// Builds the configured scenario; the working interval defaults to the scenario's.
inline BuiltScenario build_scenario(const RunConfig& rc) {
  const auto& s = rc.scenario;
  if (s.custom) {
    if (!rc.working_interval) throw ConfigError("custom scenarios need a working_interval");
    return config_detail::build_custom(*s.custom, *rc.working_interval, rc.dichotomy);
  }
  BuiltScenario out;
  const auto& p = s.parameters;
  try {
    if (s.builtin == "example_2_2") {
      out.scenario = example_2_2(p.at("eta1"), p.at("eta2"), config_detail::builtin_rate(s.rate));
    } else if (s.builtin == "section5") {
      out.scenario = section5(p.at("eta1"), p.at("eta2"), p.at("epsilon"));
    } else {
      out.scenario = scalar_oracle(p.at("a"), p.at("c"));
    }
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("scenario parameters: ") + e.what());
  }
  if (rc.working_interval) out.scenario.working = *rc.working_interval;
  if (rc.dichotomy.interval) out.scenario.pair_interval = *rc.dichotomy.interval;
  if (rc.dichotomy.points) out.scenario.pair_points = *rc.dichotomy.points;
  return out;
}

}  // namespace algdich
