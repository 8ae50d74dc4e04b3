#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace trapsim {

using nlohmann::json;
using trapping::Estimator;

namespace {

const std::map<Kind, std::string>& kind_names() {
  static const std::map<Kind, std::string> names{
      {Kind::survival_grid, "survival-grid"},         {Kind::rate_fit, "rate-fit"},
      {Kind::dv_check, "dv-check"},                   {Kind::gibbs_fluctuation, "gibbs-fluctuation"},
      {Kind::pam_crosscheck, "pam-crosscheck"},       {Kind::pascal_suite, "pascal-suite"},
      {Kind::quenched_rate, "quenched-rate"}};
  return names;
}

// Keys beyond the common ones, per kind.
const std::map<std::string, std::set<Kind>>& kind_keys() {
  static const std::map<std::string, std::set<Kind>> keys{
      {"estimators", {Kind::survival_grid, Kind::pascal_suite}},
      {"fit_model", {Kind::rate_fit, Kind::pascal_suite}},
      {"rate_estimator", {Kind::rate_fit}},
      {"p", {Kind::dv_check}},
      {"importance", {Kind::dv_check}},
      {"alpha", {Kind::gibbs_fluctuation}},
      {"epsilon", {Kind::gibbs_fluctuation}},
      {"proposal", {Kind::gibbs_fluctuation}},
      {"integrator", {Kind::survival_grid, Kind::rate_fit, Kind::pam_crosscheck, Kind::quenched_rate}},
      {"field_seeds", {Kind::quenched_rate}},
      {"quenched_walks", {Kind::quenched_rate}},
      {"start_sites", {Kind::quenched_rate}},
      {"snapshots", {Kind::pam_crosscheck, Kind::quenched_rate}}};
  return keys;
}

const std::set<std::string> kCommonKeys{"schema_version", "kind",      "model",  "t",     "budget",
                                        "seed",           "tolerances", "output", "label"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError(where + key, "unknown key");
  }
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

double rate(const json& j, const std::string& field) {
  const double v = number(j, field);
  if (v < 0.0) throw ConfigError(field, "must be >= 0");
  return v;
}

long count(const json& j, const std::string& field, long min) {
  if (!j.is_number_integer()) throw ConfigError(field, "expected an integer");
  const long v = j.get<long>();
  if (v < min) throw ConfigError(field, "must be >= " + std::to_string(min));
  return v;
}

std::uint64_t seed_value(const json& j, const std::string& field) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw ConfigError(field, "expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

std::string text(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field, "expected a string");
  return j.get<std::string>();
}

std::vector<int> steps(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a nonempty array of integers");
  std::vector<int> out;
  for (const auto& s : j) {
    if (!s.is_number_integer()) throw ConfigError(field, "expected integers");
    out.push_back(s.get<int>());
  }
  return out;
}

Estimator parse_estimator(const std::string& name, const std::string& field) {
  for (Estimator e : {Estimator::direct, Estimator::range, Estimator::softrange, Estimator::pde, Estimator::pam,
                      Estimator::pascal_ref}) {
    if (trapping::to_string(e) == name) return e;
  }
  throw ConfigError(field, "unknown estimator '" + name + "'");
}

trapping::KillingRate parse_gamma(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s != "inf") throw ConfigError("model.gamma", "expected a number or \"inf\"");
    return trapping::KillingRate::infinite();
  }
  return trapping::KillingRate(rate(j, "model.gamma"));
}

void parse_model(const json& m, ExperimentConfig& c) {
  if (!m.is_object()) throw ConfigError("model", "expected an object");
  reject_unknown(m, {"d", "gamma", "kappa", "rho", "nu", "walker_steps", "trap_steps"}, "model.");
  if (!m.contains("d")) throw ConfigError("model.d", "missing");
  c.model.dim = static_cast<int>(count(m["d"], "model.d", 1));
  if (c.model.dim > trapping::kMaxDim) throw ConfigError("model.d", "at most " + std::to_string(trapping::kMaxDim));
  if (!m.contains("gamma")) throw ConfigError("model.gamma", "missing");
  c.model.gamma = parse_gamma(m["gamma"]);
  for (const char* key : {"kappa", "rho", "nu"}) {
    if (!m.contains(key)) throw ConfigError(std::string("model.") + key, "missing");
  }
  c.model.kappa = rate(m["kappa"], "model.kappa");
  c.model.rho = rate(m["rho"], "model.rho");
  c.model.nu = rate(m["nu"], "model.nu");
  if (m.contains("walker_steps")) {
    if (c.model.dim != 1) throw ConfigError("model.walker_steps", "only for d = 1");
    c.walker_steps = steps(m["walker_steps"], "model.walker_steps");
    try {
      c.model.walker_shape = trapping::make_kernel(trapping::JumpKernel::uniform_1d(c.walker_steps, 1.0));
    } catch (const std::exception& e) {
      throw ConfigError("model.walker_steps", e.what());
    }
  }
  if (m.contains("trap_steps")) {
    if (c.model.dim != 1) throw ConfigError("model.trap_steps", "only for d = 1");
    c.trap_steps = steps(m["trap_steps"], "model.trap_steps");
    try {
      c.model.trap_shape = trapping::make_kernel(trapping::JumpKernel::uniform_1d(c.trap_steps, 1.0));
    } catch (const std::exception& e) {
      throw ConfigError("model.trap_steps", e.what());
    }
  }
}

void parse_integrator(const json& j, trapping::IntegratorConfig& cfg) {
  if (!j.is_object()) throw ConfigError("integrator", "expected an object");
  reject_unknown(j, {"dt", "scheme", "box_radius"}, "integrator.");
  if (j.contains("dt")) {
    cfg.dt = number(j["dt"], "integrator.dt");
    if (!(cfg.dt > 0.0)) throw ConfigError("integrator.dt", "must be > 0");
  }
  if (j.contains("scheme")) {
    const auto s = text(j["scheme"], "integrator.scheme");
    if (s == "rk4") {
      cfg.scheme = trapping::Scheme::rk4;
    } else if (s == "euler") {
      cfg.scheme = trapping::Scheme::explicit_euler;
    } else {
      throw ConfigError("integrator.scheme", "expected \"rk4\" or \"euler\"");
    }
  }
  if (j.contains("box_radius")) cfg.box_radius = static_cast<int>(count(j["box_radius"], "integrator.box_radius", 0));
}

bool needs_traps(Kind k) { return k == Kind::rate_fit || k == Kind::pascal_suite || k == Kind::quenched_rate; }

std::size_t min_grid(Kind k) {
  switch (k) {
    case Kind::rate_fit:
    case Kind::dv_check:
    case Kind::quenched_rate:
    case Kind::pascal_suite: return 3;
    case Kind::gibbs_fluctuation: return 2;
    default: return 1;
  }
}

void check_estimators(const ExperimentConfig& c) {
  const bool hard = c.model.gamma.is_infinite();
  for (Estimator e : c.estimators) {
    const auto name = trapping::to_string(e);
    if (e == Estimator::range && !hard) throw ConfigError("estimators", "range needs gamma = \"inf\"");
    if ((e == Estimator::softrange || e == Estimator::pde || e == Estimator::pam) && hard) {
      throw ConfigError("estimators", name + " needs a finite gamma");
    }
    if (c.kind == Kind::pascal_suite && e == Estimator::pascal_ref) {
      throw ConfigError("estimators", "pascal-ref is always computed by pascal-suite");
    }
  }
}

}  // namespace

std::string to_string(Kind k) { return kind_names().at(k); }

Kind parse_kind(const std::string& name) {
  for (const auto& [k, n] : kind_names()) {
    if (n == name) return k;
  }
  throw ConfigError("kind", "unknown kind '" + name + "'");
}

const std::vector<Kind>& all_kinds() {
  static const std::vector<Kind> kinds{Kind::survival_grid,  Kind::rate_fit,       Kind::dv_check,
                                       Kind::gibbs_fluctuation, Kind::pam_crosscheck, Kind::pascal_suite,
                                       Kind::quenched_rate};
  return kinds;
}

std::map<std::string, double> default_tolerances(Kind kind, int dim) {
  std::map<std::string, double> t{{"se_multiple", 3.0}};
  switch (kind) {
    case Kind::survival_grid: t["jensen_fraction"] = 0.5; break;
    case Kind::rate_fit: t["ratio_tolerance"] = dim == 1 ? 0.25 : 0.7; break;
    case Kind::pascal_suite: t["ratio_tolerance"] = dim == 1 ? 0.15 : 0.7; break;
    case Kind::dv_check: t["max_exponent"] = 0.5; break;
    case Kind::gibbs_fluctuation:
      t["max_exponent"] = 0.5;
      t["min_effective_size"] = 50.0;
      break;
    case Kind::pam_crosscheck:
    case Kind::quenched_rate: break;
  }
  return t;
}

double ExperimentConfig::tolerance(const std::string& name) const {
  if (auto it = tolerances.find(name); it != tolerances.end()) return it->second;
  return default_tolerances(kind, model.dim).at(name);
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  ExperimentConfig c;
  if (!j.contains("schema_version")) throw ConfigError("schema_version", "missing");
  c.schema_version = static_cast<int>(count(j["schema_version"], "schema_version", 1));
  if (c.schema_version != kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version));
  }
  if (!j.contains("kind")) throw ConfigError("kind", "missing");
  c.kind = parse_kind(text(j["kind"], "kind"));

  std::set<std::string> allowed = kCommonKeys;
  for (const auto& [key, kinds] : kind_keys()) {
    if (kinds.count(c.kind)) allowed.insert(key);
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (allowed.count(key)) continue;
    if (kind_keys().count(key)) throw ConfigError(key, "not used by kind " + to_string(c.kind));
    throw ConfigError(key, "unknown key");
  }

  if (!j.contains("model")) throw ConfigError("model", "missing");
  parse_model(j["model"], c);
  if (needs_traps(c.kind) && !(c.model.nu > 0.0)) throw ConfigError("model.nu", "must be > 0 for this kind");

  if (!j.contains("seed")) throw ConfigError("seed", "missing (runs are never seeded from the clock)");
  c.seed = seed_value(j["seed"], "seed");

  if (!j.contains("t")) throw ConfigError("t", "missing");
  const auto& ts = j["t"];
  if (!ts.is_array() || ts.empty()) throw ConfigError("t", "expected a nonempty array");
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double t = number(ts[i], "t[" + std::to_string(i) + "]");
    if (t < 0.0) throw ConfigError("t[" + std::to_string(i) + "]", "must be >= 0");
    if (!c.ts.empty() && !(t > c.ts.back())) throw ConfigError("t", "grid must be strictly increasing");
    c.ts.push_back(t);
  }
  if (c.ts.size() < min_grid(c.kind)) {
    throw ConfigError("t", "kind " + to_string(c.kind) + " needs at least " + std::to_string(min_grid(c.kind)) +
                               " grid points");
  }

  if (j.contains("budget")) {
    const auto& b = j["budget"];
    if (!b.is_object()) throw ConfigError("budget", "expected an object");
    reject_unknown(b, {"n_outer", "n_inner"}, "budget.");
    if (b.contains("n_outer")) c.n_outer = count(b["n_outer"], "budget.n_outer", 1);
    if (b.contains("n_inner")) c.n_inner = count(b["n_inner"], "budget.n_inner", 1);
  }

  const auto defaults = default_tolerances(c.kind, c.model.dim);
  if (j.contains("tolerances")) {
    const auto& tol = j["tolerances"];
    if (!tol.is_object()) throw ConfigError("tolerances", "expected an object");
    for (const auto& [key, value] : tol.items()) {
      if (!defaults.count(key)) throw ConfigError("tolerances." + key, "unknown tolerance for this kind");
      const double v = number(value, "tolerances." + key);
      if (v < 0.0) throw ConfigError("tolerances." + key, "must be >= 0");
      c.tolerances[key] = v;
    }
  }
  if (j.contains("output")) c.output = text(j["output"], "output");
  if (j.contains("label")) c.label = text(j["label"], "label");

  if (j.contains("estimators")) {
    const auto& es = j["estimators"];
    if (!es.is_array()) throw ConfigError("estimators", "expected an array");
    if (es.empty() && c.kind != Kind::pascal_suite) throw ConfigError("estimators", "expected a nonempty array");
    for (const auto& e : es) c.estimators.push_back(parse_estimator(text(e, "estimators"), "estimators"));
  } else if (c.kind == Kind::survival_grid || c.kind == Kind::pascal_suite) {
    if (c.model.gamma.is_infinite()) {
      c.estimators = {Estimator::direct, Estimator::range};
    } else {
      c.estimators = {Estimator::direct, Estimator::softrange, Estimator::pde};
    }
    if (c.kind == Kind::pascal_suite) c.estimators.erase(c.estimators.begin());
  }
  check_estimators(c);

  if (j.contains("fit_model")) {
    try {
      c.fit_model = trapping::parse_rate_model(text(j["fit_model"], "fit_model"));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("fit_model", e.what());
    }
  }
  if (j.contains("rate_estimator")) {
    c.rate_estimator = parse_estimator(text(j["rate_estimator"], "rate_estimator"), "rate_estimator");
  } else if (c.kind == Kind::rate_fit) {
    c.rate_estimator = c.model.gamma.is_infinite() ? Estimator::range : Estimator::softrange;
  }
  if (c.kind == Kind::rate_fit) {
    const bool hard = c.model.gamma.is_infinite();
    const auto e = c.rate_estimator;
    if (e == Estimator::range && !hard) throw ConfigError("rate_estimator", "range needs gamma = \"inf\"");
    if ((e == Estimator::softrange || e == Estimator::pde || e == Estimator::pam) && hard) {
      throw ConfigError("rate_estimator", "needs a finite gamma");
    }
  }
  if (j.contains("p")) {
    c.p = number(j["p"], "p");
    if (!(c.p > 0.0 && c.p < 1.0)) throw ConfigError("p", "must lie in (0, 1)");
  }
  if (j.contains("importance")) {
    if (!j["importance"].is_boolean()) throw ConfigError("importance", "expected a boolean");
    c.importance = j["importance"].get<bool>();
  }
  if (j.contains("alpha")) c.alpha = rate(j["alpha"], "alpha");
  if (j.contains("epsilon")) c.epsilon = rate(j["epsilon"], "epsilon");
  if (j.contains("proposal")) {
    const auto s = text(j["proposal"], "proposal");
    if (s == "free") {
      c.proposal = trapping::GibbsProposal::free_walk;
    } else if (s == "confined") {
      c.proposal = trapping::GibbsProposal::confined;
    } else {
      throw ConfigError("proposal", "expected \"free\" or \"confined\"");
    }
  }
  if (c.kind == Kind::gibbs_fluctuation && c.model.dim != 1) throw ConfigError("model.d", "gibbs-fluctuation is 1D");
  if (j.contains("integrator")) parse_integrator(j["integrator"], c.integrator);
  if (j.contains("field_seeds")) {
    const auto& fs = j["field_seeds"];
    if (!fs.is_array() || fs.empty()) throw ConfigError("field_seeds", "expected a nonempty array");
    for (const auto& s : fs) c.field_seeds.push_back(seed_value(s, "field_seeds"));
  } else if (c.kind == Kind::quenched_rate) {
    c.field_seeds = {c.seed};
  }
  if (j.contains("snapshots")) {
    if (!j["snapshots"].is_boolean()) throw ConfigError("snapshots", "expected a boolean");
    c.snapshots = j["snapshots"].get<bool>();
  }
  if (j.contains("quenched_walks")) c.quenched_walks = count(j["quenched_walks"], "quenched_walks", 0);
  if (j.contains("start_sites")) {
    c.start_sites = static_cast<int>(count(j["start_sites"], "start_sites", 1));
    if (c.start_sites % 2 == 0) throw ConfigError("start_sites", "must be odd");
    if (c.start_sites > 1 && c.quenched_walks > 0) throw ConfigError("start_sites", "only for the PDE route");
  }
  if (c.kind == Kind::quenched_rate && c.quenched_walks == 0 && c.model.gamma.is_infinite()) {
    throw ConfigError("quenched_walks", "gamma = \"inf\" needs walker Monte Carlo (quenched_walks > 0)");
  }
  try {
    c.model.validate();
  } catch (const std::exception& e) {
    throw ConfigError("model", e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["kind"] = to_string(c.kind);
  json m;
  m["d"] = c.model.dim;
  if (c.model.gamma.is_infinite()) {
    m["gamma"] = "inf";
  } else {
    m["gamma"] = c.model.gamma.value();
  }
  m["kappa"] = c.model.kappa;
  m["rho"] = c.model.rho;
  m["nu"] = c.model.nu;
  if (!c.walker_steps.empty()) m["walker_steps"] = c.walker_steps;
  if (!c.trap_steps.empty()) m["trap_steps"] = c.trap_steps;
  j["model"] = m;
  j["t"] = c.ts;
  j["budget"] = {{"n_outer", c.n_outer}, {"n_inner", c.n_inner}};
  j["seed"] = c.seed;
  auto tol = default_tolerances(c.kind, c.model.dim);
  for (const auto& [k, v] : c.tolerances) tol[k] = v;
  j["tolerances"] = tol;
  if (c.output) j["output"] = *c.output;
  if (!c.label.empty()) j["label"] = c.label;

  const auto& keys = kind_keys();
  auto uses = [&](const std::string& key) { return keys.at(key).count(c.kind) > 0; };
  if (uses("estimators")) {
    json es = json::array();
    for (auto e : c.estimators) es.push_back(trapping::to_string(e));
    j["estimators"] = es;
  }
  if (uses("fit_model") && c.fit_model) j["fit_model"] = trapping::to_string(*c.fit_model);
  if (uses("rate_estimator")) j["rate_estimator"] = trapping::to_string(c.rate_estimator);
  if (uses("p")) j["p"] = c.p;
  if (uses("importance")) j["importance"] = c.importance;
  if (uses("alpha")) {
    j["alpha"] = c.alpha;
    j["epsilon"] = c.epsilon;
    j["proposal"] = c.proposal == trapping::GibbsProposal::free_walk ? "free" : "confined";
  }
  if (uses("integrator")) {
    j["integrator"] = {{"dt", c.integrator.dt},
                       {"scheme", c.integrator.scheme == trapping::Scheme::rk4 ? "rk4" : "euler"},
                       {"box_radius", c.integrator.box_radius}};
  }
  if (uses("snapshots")) j["snapshots"] = c.snapshots;
  if (uses("field_seeds")) {
    j["field_seeds"] = c.field_seeds;
    j["quenched_walks"] = c.quenched_walks;
    j["start_sites"] = c.start_sites;
  }
  return j;
}

}  // namespace trapsim
