#pragma once

// Config-driven batch runs: build the scenario, verify the dichotomy, run the
// suites in declared order and assemble the JSON report.

#include "algdich/analysis.hpp"
#include "algdich/config.hpp"
#include "algdich/conjugacy.hpp"
#include "algdich/dichotomy.hpp"
#include "algdich/errors.hpp"
#include "algdich/growth_rate.hpp"
#include "algdich/problem.hpp"
#include "algdich/scenarios.hpp"

#include "json.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace algdich {

namespace exit_codes {
inline constexpr int success = 0;
inline constexpr int check_failed = 1;
inline constexpr int config_error = 2;
inline constexpr int numerical_error = 3;
}  // namespace exit_codes

/// Command-line overrides; unset fields keep the configured values.
struct RunOptions {
  bool override_gates = false;
  double tighten = 1.0;
  std::optional<std::string> csv_path;
  std::optional<std::string> report_path;
  /// Progress messages; null for silence.
  std::ostream* log = nullptr;
};

struct RunOutcome {
  int exit_code = exit_codes::success;
  Json report;
  /// Flattened suite results in report order, for the CSV dump.
  std::vector<SuiteResult> suites;
};

/// Exit code of an error escaping a run.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const GateError*>(&e) || dynamic_cast<const PreconditionError*>(&e))
    return exit_codes::config_error;
  return exit_codes::numerical_error;
}

inline std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const ParseError*>(&e)) return "parse";
  if (dynamic_cast<const GateError*>(&e)) return "gate";
  if (dynamic_cast<const PreconditionError*>(&e)) return "precondition";
  if (dynamic_cast<const IntegrationError*>(&e)) return "integration";
  if (dynamic_cast<const QuadratureError*>(&e)) return "quadrature";
  if (dynamic_cast<const ConvergenceError*>(&e)) return "convergence";
  if (dynamic_cast<const IntervalError*>(&e)) return "interval";
  if (dynamic_cast<const EvaluationError*>(&e)) return "evaluation";
  if (dynamic_cast<const FitError*>(&e)) return "fit";
  return "internal";
}

namespace runner_detail {

inline Json vec(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

template <class T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline Json suite_json(const std::string& type, const SuiteResult& s) {
  Json details = Json::array();
  for (const auto& d : s.details) {
    details.push_back({{"t", d.t}, {"inputs", d.inputs}, {"residual", d.residual},
                       {"bound", d.bound}, {"pass", d.pass}});
  }
  return {{"type", type},          {"suite_name", s.suite_name}, {"samples", s.samples},
          {"worst_residual", s.worst_residual}, {"bound_used", s.bound_used},
          {"pass", s.pass},        {"notes", s.notes},           {"details", details}};
}

inline Json dichotomy_json(const DichotomyReport& r) {
  Json viol = Json::array();
  for (const auto& v : r.violations)
    viol.push_back({{"t", v.t}, {"s", v.s}, {"side", v.side}, {"ratio", v.ratio}});
  Json j = {{"K", r.K},
            {"alpha", r.alpha},
            {"slack", r.slack},
            {"max_stable_ratio", r.max_stable_ratio},
            {"max_unstable_ratio", r.max_unstable_ratio},
            {"stable_pairs", r.stable_pairs},
            {"unstable_pairs", r.unstable_pairs},
            {"violations", viol},
            {"pass", r.pass()}};
  if (r.fit) {
    auto side = [](const std::optional<std::pair<double, double>>& s) {
      return s ? Json{{"K", s->first}, {"alpha", s->second}} : Json(nullptr);
    };
    j["fit"] = {{"K", r.fit->K},
                {"alpha", r.fit->alpha},
                {"residual", r.fit->residual},
                {"stable", side(r.fit->stable)},
                {"unstable", side(r.fit->unstable)}};
  } else {
    j["fit"] = nullptr;
  }
  return j;
}

inline Json scenario_json(const BuiltScenario& b, const ScenarioConfig& cfg) {
  const Scenario& s = b.scenario;
  const bool beta_est = s.perturbation && s.perturbation->beta_estimated;
  const bool gamma_est = s.perturbation && s.perturbation->gamma_estimated;
  const double beta = s.perturbation ? s.perturbation->beta : 0.0;
  const double gamma = s.perturbation ? s.perturbation->gamma : 0.0;
  auto constant = [](double v, bool est) { return Json{{"value", v}, {"estimated", est}}; };
  const double gate = 6.0 * s.spec.K * gamma / s.spec.alpha;
  Json j = {{"label", s.label},
            {"kind", cfg.custom ? "custom" : cfg.builtin},
            {"parameters", s.parameters},
            {"rate", s.rate.label},
            {"dimension", s.system.dimension},
            {"working_interval", {s.working.lo, s.working.hi}},
            {"constants",
             {{"K", constant(s.spec.K, b.K_estimated)},
              {"alpha", constant(s.spec.alpha, b.alpha_estimated)},
              {"beta", constant(beta, beta_est)},
              {"gamma", constant(gamma, gamma_est)},
              {"M", constant(s.system.norm_bound, s.system.norm_bound_estimated)}}},
            {"gates",
             {{"conjugacy", {{"name", kConjugacyGate}, {"value", gate}, {"passed", gate < 1.0}}},
              {"holder", {{"name", "alpha>gamma"}, {"passed", s.spec.alpha > gamma}}}}},
            {"notes", s.notes}};
  return j;
}

inline std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Desk-scale suites used when a config has no "suites" key.
inline std::vector<SuiteConfig> default_suites(Eigen::Index n) {
  Vector a = Vector::Zero(n), b = Vector::Zero(n), e1 = Vector::Zero(n);
  a(0) = 0.3;
  b(n - 1) = -0.2;
  if (n > 1) a(1) = -0.2;
  e1(0) = 1.0;
  std::vector<SuiteConfig> out;
  SuiteConfig s;
  s.type = "conjugacy_residual";
  s.initial_conditions = {{0.0, a}, {0.0, b}};
  s.times = {-2.0, -1.0, 0.0, 1.0, 2.0};
  out.push_back(s);
  for (const char* type : {"roundtrip", "bound", "contraction"}) {
    SuiteConfig p;
    p.type = type;
    p.times = {-1.0, 0.0, 1.0};
    p.states = {Vector::Zero(n), a, b};
    out.push_back(p);
  }
  SuiteConfig g;
  g.type = "gronwall";
  g.pairs = {{0.0, a, b}, {-1.0, b, Vector::Zero(n)}};
  g.offsets = {0.5, 1.0, 1.5, 2.0};
  out.push_back(g);
  SuiteConfig h;
  h.type = "holder";
  h.base = Vector::Zero(n);
  h.direction = e1;
  for (int k = 1; k <= 6; ++k) h.scales.push_back(std::ldexp(1.0, -k));
  out.push_back(h);
  SuiteConfig p;
  p.type = "no_bounded_solution";
  p.vectors = {e1, Vector::Ones(n)};
  out.push_back(p);
  return out;
}

}  // namespace runner_detail

/// Runs an already-parsed configuration document. Never throws for errors of
/// the library; they become exit codes and a "failed_at" marker.
inline RunOutcome run(const Json& config, const RunOptions& opts = {}) {
  namespace rd = runner_detail;
  RunOutcome out;
  Json& rep = out.report;
  rep["config_echo"] = config;
  rep["scenario"] = nullptr;
  rep["dichotomy"] = nullptr;
  rep["suites"] = Json::array();
  rep["notes"] = Json::array();
  rep["tighten"] = opts.tighten;
  rep["failed_at"] = nullptr;
  rep["timestamp"] = rd::timestamp();
  auto say = [&](const std::string& msg) {
    if (opts.log) *opts.log << msg << std::endl;
  };

  std::string stage = "config";
  bool all_pass = true;
  try {
    RunConfig rc = parse_run_config(config);
    if (opts.override_gates) rc.options.override_gates = true;
    if (!(opts.tighten >= 1.0)) throw ConfigError("--tighten factor must be >= 1");
    rc.options = tightened(rc.options, opts.tighten);
    if (rc.options.override_gates) rep["notes"].push_back("theorem gates overridden");
    if (opts.tighten != 1.0) {
      std::ostringstream os;
      os << "tolerances tightened by " << opts.tighten;
      rep["notes"].push_back(os.str());
    }

    stage = "scenario";
    say("building scenario");
    const BuiltScenario built = build_scenario(rc);
    const Scenario& sc = built.scenario;
    rep["scenario"] = rd::scenario_json(built, rc.scenario);
    {
      std::vector<double> grid;
      for (int i = 0; i <= 400; ++i) grid.push_back(sc.working.lo + sc.working.length() * i / 400);
      const auto v = validate_growth_rate(sc.rate, grid, 1e-9);
      Json viol = Json::array();
      for (const auto& x : v.violations)
        viol.push_back({{"check", x.check}, {"t", x.t}, {"detail", x.detail}});
      rep["scenario"]["rate_validation"] = {{"pass", v.pass()},
                                            {"proxy_small", v.proxy.small},
                                            {"proxy_large", v.proxy.large},
                                            {"violations", viol}};
      if (!v.pass()) rep["notes"].push_back("growth-rate validation reported violations");
    }

    stage = "dichotomy";
    say("verifying dichotomy");
    {
      EvolutionCache cache(sc.system, sc.working, rc.options.evolution);
      const auto pairs = sc.default_pairs();
      const auto r = rc.dichotomy.fit ? verify_and_fit(cache, sc.spec, pairs, rc.dichotomy.slack)
                                      : verify_dichotomy(cache, sc.spec, pairs, rc.dichotomy.slack);
      rep["dichotomy"] = rd::dichotomy_json(r);
      all_pass = all_pass && r.pass();
    }

    const std::vector<SuiteConfig> suites =
        config.contains("suites") ? rc.suites : rd::default_suites(sc.system.dimension);
    if (!config.contains("suites")) rep["notes"].push_back("no suites configured; default suites run");
    if (suites.empty()) {
      out.exit_code = all_pass ? exit_codes::success : exit_codes::check_failed;
      rep["pass"] = all_pass;
      rep["exit_code"] = out.exit_code;
      return out;
    }

    stage = "problem";
    say("constructing conjugacy problem");
    const ConjugacyProblem problem = sc.problem(rc.options);
    const auto& rs = rc.residual;

    auto record = [&](const std::string& type, const SuiteResult& s, Json extra = Json::object()) {
      Json j = rd::suite_json(type, s);
      for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
      rep["suites"].push_back(j);
      out.suites.push_back(s);
      all_pass = all_pass && s.pass;
      say("  " + s.suite_name + (s.pass ? " pass" : " FAIL"));
    };

    for (std::size_t i = 0; i < suites.size(); ++i) {
      const SuiteConfig& s = suites[i];
      stage = "suites[" + std::to_string(i) + "] (" + s.type + ")";
      say("running " + stage);
      if (s.type == "conjugacy_residual") {
        const auto r = conjugacy_residual_suite(problem, s.initial_conditions, s.times,
                                                {rs.forward, rs.inverse});
        record(s.type, r.forward);
        record(s.type, r.inverse);
      } else if (s.type == "roundtrip") {
        const auto r = roundtrip_suite(problem, s.points(), rs.roundtrip);
        record(s.type, r.forward);
        record(s.type, r.inverse);
      } else if (s.type == "bound") {
        const auto r = bound_suite(problem, s.points(), rs.bound_slack);
        record(s.type, r.forward);
        record(s.type, r.inverse);
      } else if (s.type == "contraction") {
        record(s.type, contraction_suite(problem, s.points(), rs.contraction_slack));
      } else if (s.type == "gronwall") {
        record(s.type, gronwall_suite(problem, s.pairs, s.offsets, rs.gronwall_slack));
      } else if (s.type == "holder") {
        const auto r = holder_suite(problem, s.t, s.base, s.direction, s.scales);
        const auto& c = r.constants;
        const Json constants = {{"p", c.p},
                                {"q", c.q},
                                {"M_tilde", c.M_tilde},
                                {"tau_max", c.tau_max},
                                {"min_separation", c.min_separation},
                                {"lambda", rd::opt(c.lambda)},
                                {"p_prime", rd::opt(c.p_prime)},
                                {"q_prime", rd::opt(c.q_prime)},
                                {"q_prime_log_condition", c.q_prime_log_condition}};
        record(s.type, r.forward.suite,
               {{"fitted_exponent", rd::opt(r.forward.exponent)},
                {"fitted_prefactor", rd::opt(r.forward.prefactor)},
                {"constants", constants}});
        if (r.inverse) {
          record(s.type, r.inverse->suite,
                 {{"fitted_exponent", rd::opt(r.inverse->exponent)},
                  {"fitted_prefactor", rd::opt(r.inverse->prefactor)},
                  {"constants", constants}});
        } else {
          rep["notes"].push_back("holder_G skipped: lambda undefined for these constants");
        }
      } else if (s.type == "no_bounded_solution") {
        SuiteResult agg("no_bounded_solution", 1.0 + 1e-6);
        Json probes = Json::array();
        bool crossed = true;
        for (const auto& v : s.vectors) {
          const auto p = no_bounded_solution_probe(problem.cache(), sc.spec, v, s.horizon,
                                                   s.threshold);
          std::vector<double> inputs(v.data(), v.data() + v.size());
          agg.add(p.observed_crossing.value_or(p.direction * s.horizon), inputs,
                  p.worst_bound_ratio);
          if (!p.observed_crossing) {
            agg.details.back().pass = false;
            crossed = false;
          }
          probes.push_back({{"vector", rd::vec(v)},
                            {"direction", p.direction},
                            {"stable_norm", p.stable_norm},
                            {"unstable_norm", p.unstable_norm},
                            {"observed_crossing", rd::opt(p.observed_crossing)},
                            {"predicted_crossing", rd::opt(p.predicted_crossing)},
                            {"max_norm", p.max_norm},
                            {"worst_bound_ratio", p.worst_bound_ratio},
                            {"pass", p.pass}});
        }
        if (!crossed) {
          agg.pass = false;
          agg.notes.push_back("some solution stayed below the threshold within the horizon");
        }
        record(s.type, agg, {{"horizon", s.horizon}, {"threshold", s.threshold}, {"probes", probes}});
      }
    }
    out.exit_code = all_pass ? exit_codes::success : exit_codes::check_failed;
  } catch (const Error& e) {
    out.exit_code = exit_code_for(e);
    Json f = {{"stage", stage}, {"error", error_kind(e)}, {"message", e.what()}};
    if (const auto* g = dynamic_cast<const GateError*>(&e)) f["gate"] = g->gate();
    rep["failed_at"] = f;
    all_pass = false;
    say(std::string("error at ") + stage + ": " + e.what());
  }
  rep["pass"] = all_pass;
  rep["exit_code"] = out.exit_code;
  return out;
}

/// Reads a JSON config file. Syntax errors become ConfigError.
inline Json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

/// Writes the report (stdout when no path is configured) and the optional CSV.
/// Paths given in opts win over the config's output section.
inline void write_outputs(const RunOutcome& outcome, const RunOptions& opts,
                          std::ostream& stdout_stream = std::cout) {
  std::optional<std::string> report = opts.report_path, csv = opts.csv_path;
  const Json& echo = outcome.report["config_echo"];
  if (echo.is_object() && echo.contains("output") && echo["output"].is_object()) {
    const Json& o = echo["output"];
    if (!report && o.contains("report") && o["report"].is_string())
      report = o["report"].get<std::string>();
    if (!csv && o.contains("csv") && o["csv"].is_string()) csv = o["csv"].get<std::string>();
  }
  const std::string text = outcome.report.dump(2) + "\n";
  if (report) {
    std::ofstream f(*report);
    if (!f) throw ConfigError("cannot write report '" + *report + "'");
    f << text;
  } else {
    stdout_stream << text;
  }
  if (csv) {
    std::ofstream f(*csv);
    if (!f) throw ConfigError("cannot write CSV '" + *csv + "'");
    write_csv(f, outcome.suites);
  }
}

}  // namespace algdich
