#include "cli/runner.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "cli/snapshot.hpp"
#include "trapping/pathmeasure.hpp"
#include "trapping/survival.hpp"

namespace trapsim {

using nlohmann::json;
using trapping::Estimator;
using trapping::RateModel;
using trapping::SurvivalEstimate;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string point(const trapping::ModelParams& m, double t) {
  std::ostringstream s;
  s << "d=" << m.dim << " gamma=" << m.gamma.to_string() << " kappa=" << fmt(m.kappa) << " rho=" << fmt(m.rho)
    << " nu=" << fmt(m.nu) << " t=" << fmt(t);
  return s.str();
}

/// Rethrows estimator failures with the parameter point attached.
template <class Fn>
auto at_point(const std::string& what, const trapping::ModelParams& m, double t, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(what + " failed at " + point(m, t) + ": " + e.what());
  }
}

double combined(double a, double b) { return std::hypot(a, b); }

SurvivalEstimate estimate(const ExperimentConfig& c, Estimator e, double t, const trapping::ExecutionOptions& exec) {
  const trapping::Budget budget{c.n_outer, c.n_inner};
  return at_point(trapping::to_string(e), c.model, t, [&] {
    switch (e) {
      case Estimator::direct: return trapping::annealed_direct(c.model, t, budget, c.seed, exec);
      case Estimator::range: return trapping::annealed_range(c.model, t, budget, c.seed, exec);
      case Estimator::softrange: return trapping::annealed_softrange(c.model, t, budget, c.seed, exec);
      case Estimator::pde: return trapping::annealed_pde(c.model, t, c.n_outer, c.integrator, c.seed, exec);
      case Estimator::pam: return trapping::annealed_pam_average(c.model, t, c.n_outer, c.integrator, c.seed, exec);
      case Estimator::pascal_ref:
        return trapping::pascal_reference(c.model, t, c.n_outer * c.n_inner, c.seed, exec);
      default: break;
    }
    throw std::invalid_argument("estimator not available here");
  });
}

std::string label(const SurvivalEstimate& e) { return trapping::to_string(e.estimator) + "@t=" + fmt(e.t); }

void pairwise(const std::vector<SurvivalEstimate>& es, double k, RunReport& r) {
  for (std::size_t a = 0; a < es.size(); ++a) {
    for (std::size_t b = a + 1; b < es.size(); ++b) {
      const double se = combined(es[a].std_error, es[b].std_error);
      const double diff = std::abs(es[a].value - es[b].value);
      r.checks.push_back({"agree " + label(es[a]) + " vs " + trapping::to_string(es[b].estimator),
                          diff <= k * se, diff, k * se, "|difference| <= k * combined SE"});
    }
  }
}

bool default_shapes(const ExperimentConfig& c) { return c.walker_steps.empty() && c.trap_steps.empty(); }

/// Leading coefficient of -log Z_t in d = 1, 2 against the fit basis.
std::optional<double> law_coefficient(const ExperimentConfig& c, RateModel model) {
  if (!default_shapes(c)) return std::nullopt;
  if (c.model.dim == 1 && model == RateModel::sqrt_t) return trapping::annealed_law_1d(c.model.nu, c.model.rho, 1.0);
  if (c.model.dim == 2 && model == RateModel::t_over_log_t) {
    return c.model.nu * std::numbers::pi * c.model.rho;
  }
  return std::nullopt;
}

RateModel default_model(int dim) {
  if (dim == 1) return RateModel::sqrt_t;
  if (dim == 2) return RateModel::t_over_log_t;
  return RateModel::exponential;
}

/// Ratio of each -log Z_t to the law, within tolerance at the last point
/// and approaching 1 along the grid.
void law_checks(const trapping::RateFit& fit, double law, double tol, RunReport& r, json& report) {
  std::vector<double> ratios;
  for (double q : fit.ratios) ratios.push_back(q / law);
  report["law_coefficient"] = law;
  report["law_ratios"] = ratios;
  const double last = ratios.back();
  r.checks.push_back({"law ratio at t=" + fmt(fit.ts.back()), std::abs(last - 1.0) <= tol, last, tol,
                      "|ratio - 1| <= ratio_tolerance"});
  r.checks.push_back({"law ratio approaches 1", trapping::approaches(ratios, 1.0), last, 1.0,
                      "|ratio - 1| nonincreasing in t"});
}

void survival_grid(const ExperimentConfig& c, const trapping::ExecutionOptions& exec, RunReport& r) {
  const double k = c.tolerance("se_multiple");
  const double jf = c.tolerance("jensen_fraction");
  std::map<Estimator, std::map<double, SurvivalEstimate>> by_estimator;
  for (double t : c.ts) {
    std::vector<SurvivalEstimate> row;
    for (Estimator e : c.estimators) {
      row.push_back(estimate(c, e, t, exec));
      by_estimator[e][t] = row.back();
      const auto& est = row.back();
      if (est.jensen_correction > 0.0) {
        r.checks.push_back({"jensen " + label(est), est.jensen_correction < jf * est.std_error, est.jensen_correction,
                            jf * est.std_error, "plug-in bias < jensen_fraction * SE"});
      }
    }
    pairwise(row, k, r);
    r.estimates.insert(r.estimates.end(), row.begin(), row.end());
  }
  for (const auto& [e, points] : by_estimator) {
    for (const auto& [t, est] : points) {
      auto twice = points.find(2.0 * t);
      if (t <= 0.0 || twice == points.end() || est.log_value == 0.0) continue;
      const auto& d = twice->second;
      const double se = combined(d.log_std_error, 2.0 * est.log_std_error);
      const double gap = d.log_value - 2.0 * est.log_value;
      r.checks.push_back({"super-multiplicative " + trapping::to_string(e) + " t=" + fmt(t), gap >= -k * se, gap,
                          -k * se, "log Z_2t - 2 log Z_t >= -k * combined SE"});
    }
  }
}

void rate_fit(const ExperimentConfig& c, const trapping::ExecutionOptions& exec, RunReport& r) {
  const auto model = c.fit_model.value_or(default_model(c.model.dim));
  for (double t : c.ts) r.estimates.push_back(estimate(c, c.rate_estimator, t, exec));
  const auto fit = at_point("fit", c.model, c.ts.back(), [&] { return trapping::fit_rate(r.estimates, model); });
  json report = to_json(fit);
  if (auto law = law_coefficient(c, model)) {
    law_checks(fit, *law, c.tolerance("ratio_tolerance"), r, report);
  } else if (model == RateModel::exponential && c.model.dim >= 3 && default_shapes(c)) {
    const double bound = trapping::annealed_rate_lower_bound(c.model, trapping::green_function(c.model.dim));
    report["lower_bound"] = bound;
    r.checks.push_back({"rate above annealed lower bound", fit.coefficient + fit.coefficient_error >= bound,
                        fit.coefficient, bound, "coefficient >= bound - fit error"});
  }
  r.fits.push_back(report);
}

void dv_check(const ExperimentConfig& c, const trapping::ExecutionOptions& exec, RunReport& r) {
  for (double t : c.ts) {
    r.estimates.push_back(at_point("bernoulli", c.model, t, [&] {
      return trapping::bernoulli_survival(c.model.dim, c.p, c.model.kappa, t, c.n_outer, c.seed, exec, c.importance);
    }));
  }
  const auto fit = at_point("fit", c.model, c.ts.back(), [&] { return trapping::fit_rate(r.estimates, RateModel::power); });
  json report = to_json(fit);
  report["p"] = c.p;
  const double target = static_cast<double>(c.model.dim) / (c.model.dim + 2.0);
  report["target_exponent"] = target;
  const double max_e = c.tolerance("max_exponent");
  r.checks.push_back({"free exponent below limit", fit.exponent < max_e, fit.exponent, max_e, "fitted exponent"});
  bool decreasing = true;
  for (std::size_t i = 1; i < fit.local_exponents.size(); ++i) {
    decreasing = decreasing && fit.local_exponents[i] < fit.local_exponents[i - 1];
  }
  r.checks.push_back({"local exponents decreasing", decreasing, fit.local_exponents.back(), target, ""});

  std::vector<trapping::RatePoint> synthetic;
  for (double t : c.ts) synthetic.push_back({t, 2.0 * std::pow(t, target), 0.0});
  const auto sfit = trapping::fit_rate(synthetic, RateModel::power);
  report["synthetic_exponent"] = sfit.exponent;
  r.checks.push_back({"synthetic fit recovers d/(d+2)", std::abs(sfit.exponent - target) < 1e-3, sfit.exponent,
                      target, "|exponent - d/(d+2)| < 1e-3"});
  r.fits.push_back(report);
}

void gibbs(const ExperimentConfig& c, const trapping::ExecutionOptions& exec, RunReport& r) {
  trapping::GibbsOptions options;
  options.proposal = c.proposal;
  options.min_effective_size = 1.0;
  std::vector<trapping::FluctuationReport> reports;
  std::ostringstream table;
  table << "t,n,n_eff,q10,q25,q50,q75,q90,alpha,epsilon,window_probability,lower_probability\n";
  const double floor = c.tolerance("min_effective_size");
  for (double t : c.ts) {
    const auto start = std::chrono::steady_clock::now();
    const auto ens = at_point("gibbs ensemble", c.model, t, [&] {
      return trapping::sample_gibbs_ensemble(c.model, t, c.n_outer, c.n_inner, c.seed, options, exec);
    });
    const auto rep = trapping::fluctuation_report(ens, c.alpha, c.epsilon);
    reports.push_back(rep);
    table << fmt(t) << ',' << rep.n << ',' << fmt(rep.effective_size);
    for (double q : rep.quantiles) table << ',' << fmt(q);
    table << ',' << fmt(c.alpha) << ',' << fmt(c.epsilon) << ',' << fmt(rep.window_probability) << ','
          << fmt(rep.lower_probability) << '\n';
    r.checks.push_back({"n_eff at t=" + fmt(t), rep.effective_size >= floor, rep.effective_size, floor,
                        "effective sample size >= min_effective_size"});

    std::vector<double> lws;
    for (const auto& s : ens.samples) lws.push_back(s.log_weight);
    SurvivalEstimate est;
    est.estimator = Estimator::importance;
    est.params = c.model;
    est.t = t;
    est.seed = c.seed;
    est.set_from_logs(lws);
    est.wall_time = seconds_since(start);
    r.estimates.push_back(est);
  }
  r.tables["ensembles.csv"] = table.str();
  const auto growth = trapping::growth_exponent(reports);
  const double max_e = c.tolerance("max_exponent");
  json report{{"model", "median-growth"}, {"exponent", growth.exponent}, {"local_exponents", growth.local_exponents},
              {"ts", c.ts}};
  json medians = json::array();
  for (const auto& rep : reports) medians.push_back(rep.median);
  report["medians"] = medians;
  r.fits.push_back(report);
  r.checks.push_back({"median growth exponent below limit", growth.exponent < max_e, growth.exponent, max_e,
                      "slope of log median sup-norm against log t"});
  bool nonincreasing = true;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    nonincreasing = nonincreasing && reports[i].lower_probability <= reports[i - 1].lower_probability;
  }
  r.checks.push_back({"lower-window probability nonincreasing", nonincreasing, reports.back().lower_probability,
                      reports.front().lower_probability, ""});
}

void pam_crosscheck(const ExperimentConfig& c, const trapping::ExecutionOptions& exec, RunReport& r) {
  const double k = c.tolerance("se_multiple");
  for (double t : c.ts) {
    std::vector<SurvivalEstimate> row{estimate(c, Estimator::pam, t, exec), estimate(c, Estimator::direct, t, exec)};
    if (!c.model.gamma.is_infinite()) row.push_back(estimate(c, Estimator::pde, t, exec));
    pairwise(row, k, r);
    r.estimates.insert(r.estimates.end(), row.begin(), row.end());
  }
  if (c.snapshots && !c.model.gamma.is_infinite()) {
    // One field of the ensemble and its forward solution on the t grid.
    const trapping::FieldSampler sampler(trapping::certified_field_spec(c.model, c.ts.back(), 1));
    trapping::RandomStream rng(c.seed, static_cast<std::uint64_t>(Estimator::pam) + 100);
    const auto field = sampler(rng);
    const auto u = trapping::solve_pam(field, *c.model.walker_kernel(), c.model.gamma.value(), c.integrator, c.ts);
    r.tables["field.json"] = field_to_json(field).dump() + "\n";
    r.tables["u.csv"] = lattice_csv(u);
  }
}

void pascal_suite(const ExperimentConfig& c, const trapping::ExecutionOptions& exec, RunReport& r) {
  const double k = c.tolerance("se_multiple");
  std::vector<SurvivalEstimate> refs;
  for (double t : c.ts) {
    refs.push_back(estimate(c, Estimator::pascal_ref, t, exec));
    r.estimates.push_back(refs.back());
    for (Estimator e : c.estimators) {
      const auto est = estimate(c, e, t, exec);
      r.estimates.push_back(est);
      const double se = combined(est.std_error, refs.back().std_error);
      r.checks.push_back({"pascal bound " + label(est), est.value <= refs.back().value + k * se, est.value,
                          refs.back().value + k * se, "annealed <= reference + k * combined SE"});
    }
  }
  const auto model = c.fit_model.value_or(default_model(c.model.dim));
  const auto fit = at_point("fit", c.model, c.ts.back(), [&] { return trapping::fit_rate(refs, model); });
  json report = to_json(fit);
  report["estimator"] = trapping::to_string(Estimator::pascal_ref);
  if (auto law = law_coefficient(c, model)) law_checks(fit, *law, c.tolerance("ratio_tolerance"), r, report);
  r.fits.push_back(report);
}

void quenched(const ExperimentConfig& c, const trapping::ExecutionOptions& exec, RunReport& r) {
  const double k = c.tolerance("se_multiple");
  trapping::QuenchedRateOptions options;
  options.walks = c.quenched_walks;
  options.config = c.integrator;
  options.start_sites = c.start_sites;
  std::vector<trapping::QuenchedRate> rates;
  for (auto seed : c.field_seeds) {
    rates.push_back(at_point("quenched rate (field seed " + std::to_string(seed) + ")", c.model, c.ts.back(),
                             [&] { return trapping::quenched_rate(c.model, c.ts, seed, options, exec); }));
    const auto& q = rates.back();
    r.estimates.insert(r.estimates.end(), q.estimates.begin(), q.estimates.end());
    json report = to_json(q.fit);
    report["field_seed"] = seed;
    report["upper_bound"] = number_or_null(q.upper_bound);
    report["within_bounds"] = q.within_bounds;
    r.fits.push_back(report);
    r.checks.push_back({"rate in (0, gamma nu + kappa] for field " + std::to_string(seed), q.within_bounds,
                        q.fit.coefficient, q.upper_bound, "fit > 0 and fit - error <= bound"});
    if (c.snapshots && q.field) {
      auto cfg = c.integrator;
      cfg.box_radius = 0;
      cfg.boundary = trapping::Boundary::dirichlet_zero;
      const auto u = trapping::solve_pam(*q.field, *c.model.walker_kernel(), c.model.gamma.value(), cfg,
                                         {c.ts.back()}, true);
      r.tables["field_" + std::to_string(seed) + ".json"] = field_to_json(*q.field).dump() + "\n";
      r.tables["u_" + std::to_string(seed) + ".csv"] = lattice_csv(u);
    }
  }
  for (std::size_t a = 0; a < rates.size(); ++a) {
    for (std::size_t b = a + 1; b < rates.size(); ++b) {
      const double se = combined(rates[a].fit.coefficient_error, rates[b].fit.coefficient_error);
      const double diff = std::abs(rates[a].fit.coefficient - rates[b].fit.coefficient);
      r.checks.push_back({"fields " + std::to_string(c.field_seeds[a]) + " and " + std::to_string(c.field_seeds[b]) +
                              " agree",
                          diff <= k * se, diff, k * se, "|difference| <= k * combined fit error"});
    }
  }
}

}  // namespace

bool RunReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

RunReport execute(const ExperimentConfig& config, const trapping::ExecutionOptions& exec) {
  const auto start = std::chrono::steady_clock::now();
  RunReport r;
  switch (config.kind) {
    case Kind::survival_grid: survival_grid(config, exec, r); break;
    case Kind::rate_fit: rate_fit(config, exec, r); break;
    case Kind::dv_check: dv_check(config, exec, r); break;
    case Kind::gibbs_fluctuation: gibbs(config, exec, r); break;
    case Kind::pam_crosscheck: pam_crosscheck(config, exec, r); break;
    case Kind::pascal_suite: pascal_suite(config, exec, r); break;
    case Kind::quenched_rate: quenched(config, exec, r); break;
  }
  r.wall_time = seconds_since(start);
  return r;
}

std::string results_csv(const std::vector<SurvivalEstimate>& rows, bool strict) {
  std::ostringstream out;
  out << "estimator,d,gamma,kappa,rho,nu,t,value,log_value,std_error,n,seed,wall_time\n";
  for (const auto& e : rows) {
    out << trapping::to_string(e.estimator) << ',' << e.params.dim << ',' << e.params.gamma.to_string() << ','
        << fmt(e.params.kappa) << ',' << fmt(e.params.rho) << ',' << fmt(e.params.nu) << ',' << fmt(e.t) << ','
        << fmt(e.value) << ',' << fmt(e.log_value) << ',' << fmt(e.std_error) << ',' << e.n << ',' << e.seed << ','
        << (strict ? "0" : fmt(e.wall_time)) << '\n';
  }
  return out.str();
}

json to_json(const trapping::RateFit& fit) {
  return json{{"model", trapping::to_string(fit.model)},
              {"coefficient", number_or_null(fit.coefficient)},
              {"coefficient_error", number_or_null(fit.coefficient_error)},
              {"exponent", number_or_null(fit.exponent)},
              {"exponent_error", number_or_null(fit.exponent_error)},
              {"residual_rms", number_or_null(fit.residual_rms)},
              {"weighted", fit.weighted},
              {"ts", fit.ts},
              {"minus_logs", fit.minus_logs},
              {"ratios", fit.ratios},
              {"local_exponents", fit.local_exponents}};
}

json to_json(const Check& check) {
  return json{{"name", check.name},
              {"passed", check.passed},
              {"observed", number_or_null(check.observed)},
              {"limit", number_or_null(check.limit)},
              {"detail", check.detail}};
}

std::string version() { return TRAPPING_VERSION; }

std::filesystem::path output_directory(const ExperimentConfig& config, const RunOptions& options) {
  if (options.out_dir) return *options.out_dir;
  if (config.output) return *config.output;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return "trapsim-out";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void write_artifacts(const ExperimentConfig& config, const RunReport& report, const RunOptions& options,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "results.csv", results_csv(report.estimates, options.strict));

  json checks = json::array();
  for (const auto& c : report.checks) checks.push_back(to_json(c));
  json fits{{"kind", to_string(config.kind)}, {"fits", report.fits}, {"checks", checks}, {"passed", report.passed()}};
  write_file(dir / "fits.json", fits.dump(2) + "\n");

  for (const auto& [name, content] : report.tables) write_file(dir / name, content);

  json files = json::array({"results.csv", "fits.json"});
  for (const auto& [name, content] : report.tables) {
    (void)content;
    files.push_back(name);
  }
  json manifest{{"config", to_json(config)},
                {"seed", config.seed},
                {"versions",
                 {{"trapsim", version()},
                  {"schema_version", kSchemaVersion},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)}}},
                {"workers", options.workers},
                {"strict", options.strict},
                {"wall_time", options.strict ? 0.0 : report.wall_time},
                {"status", report.passed() ? "ok" : "tolerance-failure"},
                {"files", files}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

int run(const std::string& config_path, const RunOptions& options, std::ostream& log) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const std::exception& e) {
    log << "error: invalid config " << config_path << ": " << e.what() << '\n';
    return kExitError;
  }
  try {
    trapping::ExecutionOptions exec;
    exec.workers = options.workers;
    const auto report = execute(config, exec);
    const auto dir = output_directory(config, options);
    write_artifacts(config, report, options, dir);
    for (const auto& c : report.checks) {
      if (!c.passed) log << "tolerance failure: " << c.name << " (observed " << fmt(c.observed) << ", limit "
                         << fmt(c.limit) << ")\n";
    }
    log << to_string(config.kind) << ": " << report.estimates.size() << " estimates, " << report.checks.size()
        << " checks, " << (report.passed() ? "all passed" : "FAILED") << "; wrote " << dir.string() << '\n';
    return report.passed() ? kExitOk : kExitTolerance;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace trapsim
