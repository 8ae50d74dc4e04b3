#include <CLI11.hpp>
#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/oracles.hpp"
#include "cli/catalog.hpp"
#include "trapping/asymptotics.hpp"
#include "trapping/pam.hpp"
#include "trapping/pathmeasure.hpp"
#include "trapping/survival.hpp"
#include "trapping/trapfield.hpp"
#include "trapping/walk.hpp"

using namespace trapping;

namespace {

struct Outcome {
  bool passed = true;
  std::vector<std::string> lines;

  template <class... Args>
  void check(bool ok, const char* format, Args... args) {
    char buf[512];
    if constexpr (sizeof...(Args) == 0) {
      std::snprintf(buf, sizeof buf, "%s", format);
    } else {
      std::snprintf(buf, sizeof buf, format, args...);
    }
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + buf);
    passed = passed && ok;
  }
};

struct Context {
  ExecutionOptions exec;
};

Site at(int x) {
  Site s(1);
  s[0] = x;
  return s;
}

ModelParams model(int d, KillingRate gamma, double kappa, double rho, double nu) {
  ModelParams p;
  p.dim = d;
  p.gamma = gamma;
  p.kappa = kappa;
  p.rho = rho;
  p.nu = nu;
  return p;
}

const KillingRate kHard = KillingRate::infinite();

double z_score(double a, double b, double sa, double sb) {
  const double s = std::hypot(sa, sb);
  return s > 0.0 ? (a - b) / s : (a == b ? 0.0 : INFINITY);
}

// ---------------------------------------------------------------------------
// ac01: 5-site torus, one walker and one trap.

constexpr int kTorus = 5;

Eigen::MatrixXd ring_generator(double rate) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(kTorus, kTorus);
  for (int x = 0; x < kTorus; ++x) {
    q(x, (x + 1) % kTorus) += 0.5 * rate;
    q(x, (x + kTorus - 1) % kTorus) += 0.5 * rate;
    q(x, x) -= rate;
  }
  return q;
}

/// Killing at `site` on top of generator `a`. Hard killing removes every
/// transition into the site and freezes the mass there at zero.
void add_killing(Eigen::MatrixXd& a, int site, const KillingRate& gamma) {
  if (gamma.is_infinite()) {
    a.col(site).setZero();
    a.row(site).setZero();
  } else {
    a(site, site) -= gamma.value();
  }
}

/// Joint chain (walker x, trap y), state x * 5 + y, trap start uniform.
double exact_annealed(const KillingRate& gamma, double kappa, double rho, double t) {
  const int n = kTorus * kTorus;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  const auto w = ring_generator(kappa);
  const auto r = ring_generator(rho);
  for (int x = 0; x < kTorus; ++x) {
    for (int y = 0; y < kTorus; ++y) {
      for (int x2 = 0; x2 < kTorus; ++x2) q(x * kTorus + y, x2 * kTorus + y) += w(x, x2);
      for (int y2 = 0; y2 < kTorus; ++y2) q(x * kTorus + y, x * kTorus + y2) += r(y, y2);
    }
  }
  Eigen::RowVectorXd p0 = Eigen::RowVectorXd::Zero(n);
  for (int y = 0; y < kTorus; ++y) p0(y) = 1.0 / kTorus;
  for (int s = 0; s < kTorus; ++s) {
    const int diag = s * kTorus + s;
    if (gamma.is_infinite()) {
      q.col(diag).setZero();
      q.row(diag).setZero();
      p0(diag) = 0.0;
    } else {
      q(diag, diag) -= gamma.value();
    }
  }
  const Eigen::MatrixXd m = (q * t).exp();
  return (p0 * m).sum();
}

/// Walker among one fixed trap trajectory: product of segment propagators.
double exact_quenched(const WalkPath& trap, const KillingRate& gamma, double kappa, double t) {
  Eigen::RowVectorXd p = Eigen::RowVectorXd::Zero(kTorus);
  p(0) = 1.0;
  for (std::size_t i = 0; i <= trap.jump_count(); ++i) {
    const double s0 = trap.segment_start(i);
    const double s1 = std::min(trap.segment_end(i), t);
    if (s1 <= s0) break;
    const int y = ((trap.positions()(0, static_cast<Eigen::Index>(i)) % kTorus) + kTorus) % kTorus;
    Eigen::MatrixXd a = ring_generator(kappa);
    add_killing(a, y, gamma);
    if (gamma.is_infinite()) p(y) = 0.0;
    p = p * (a * (s1 - s0)).exp();
  }
  return p.sum();
}

Outcome ac01(const Context& ctx) {
  Outcome out;
  const double t = 1.0;
  const long n = 1000000;
  const auto walker = make_kernel(JumpKernel::simple_symmetric(1, 1.0));
  const auto trap = make_kernel(JumpKernel::simple_symmetric(1, 1.0));
  for (const auto& gamma : {KillingRate(1.0), kHard}) {
    const RandomStream root(101, gamma.is_infinite() ? 1 : 0);
    const auto weights = parallel_map<double>(static_cast<std::size_t>(n), ctx.exec, [&](std::size_t i) {
      auto rng = root.substream(i);
      const int y0 = static_cast<int>(rng.below(kTorus));
      const auto y = sample_path(trap, at(y0), t, rng);
      const auto x = sample_path(walker, at(0), t, rng);
      return gamma.survival_weight(collision_time(x, y, 0.0, t, kTorus));
    });
    const auto acc = accumulate(weights);
    const double exact = exact_annealed(gamma, 1.0, 1.0, t);
    const double z = z_score(acc.mean(), exact, acc.std_error(), 0.0);
    out.check(std::abs(z) <= 3.0, "annealed gamma=%s: MC %.6f +- %.6f, matrix exponential %.6f (z = %.2f)",
              gamma.to_string().c_str(), acc.mean(), acc.std_error(), exact, z);

    WalkPath path = WalkPath::constant(trap, at(2), t);
    for (std::uint64_t stream = 0; path.jump_count() < 2; ++stream) {
      RandomStream trng(102, stream);
      path = sample_path(trap, at(2), t, trng);
    }
    TrapFieldSpec spec;
    spec.dim = 1;
    spec.trap_kernel = trap;
    spec.horizon = t;
    spec.torus_period = kTorus;
    const auto field = TrapField::from_trajectories(spec, {path});
    const auto q = quenched_survival(field, gamma, walker, t, n, 103, ctx.exec);
    const double qexact = exact_quenched(path, gamma, 1.0, t);
    const double qz = z_score(q.value, qexact, q.std_error, 0.0);
    out.check(std::abs(qz) <= 3.0, "quenched gamma=%s (%zu trap jumps): MC %.6f +- %.6f, exact %.6f (z = %.2f)",
              gamma.to_string().c_str(), path.jump_count(), q.value, q.std_error, qexact, qz);
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome ac02(const Context& ctx) {
  Outcome out;
  int pairs = 0;
  int bad = 0;
  double worst = 0.0;
  IntegratorConfig cfg;
  cfg.dt = 0.02;
  auto compare = [&](const SurvivalEstimate& a, const SurvivalEstimate& b) {
    const double z = z_score(a.value, b.value, a.std_error, b.std_error);
    ++pairs;
    worst = std::max(worst, std::abs(z));
    if (std::abs(z) > 3.0) {
      ++bad;
      out.check(false, "%s vs %s at nu=%g t=%g: %.5f vs %.5f (z = %.2f)", to_string(a.estimator).c_str(),
                to_string(b.estimator).c_str(), a.params.nu, a.t, a.value, b.value, z);
    }
  };
  auto jensen = [&](const SurvivalEstimate& e) {
    if (!(e.jensen_correction < 0.5 * e.std_error)) {
      out.check(false, "Jensen correction of %s at nu=%g t=%g is %.2e, SE %.2e", to_string(e.estimator).c_str(),
                e.params.nu, e.t, e.jensen_correction, e.std_error);
      ++bad;
    }
  };
  for (double nu : {0.5, 1.0}) {
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
      const auto hard = model(1, kHard, 1, 1, nu);
      const auto soft = model(1, KillingRate(1.0), 1, 1, nu);
      const auto dh = annealed_direct(hard, t, {2000, 10}, 201, ctx.exec);
      const auto r = annealed_range(hard, t, {2000, 400}, 202, ctx.exec);
      const auto ds = annealed_direct(soft, t, {2000, 10}, 203, ctx.exec);
      const auto s = annealed_softrange(soft, t, {2000, 400}, 204, ctx.exec);
      const auto v = annealed_pde(soft, t, 2000, cfg, 205, ctx.exec);
      compare(dh, r);
      compare(ds, s);
      compare(ds, v);
      compare(s, v);
      jensen(r);
      jensen(s);
      out.lines.push_back("     nu=" + std::to_string(nu).substr(0, 3) + " t=" + std::to_string(int(t)) +
                          ": direct(inf) " + std::to_string(dh.value) + " range " + std::to_string(r.value) +
                          " | direct(1) " + std::to_string(ds.value) + " softrange " + std::to_string(s.value) +
                          " pde " + std::to_string(v.value));
    }
  }
  out.check(bad == 0, "%d pairwise comparisons, largest |z| = %.2f, Jensen below 0.5 SE", pairs, worst);
  return out;
}

// ---------------------------------------------------------------------------

Outcome ac03(const Context& ctx) {
  Outcome out;
  const auto hard = model(1, kHard, 1, 1, 1);
  const double t = 8.0;
  const auto ys = sample_trap_paths(hard, t, 2000, RandomStream(301));
  const auto walker = hard.walker_kernel();
  const auto still = WalkPath::constant(walker, at(0), t);
  const auto paired = parallel_map<std::optional<Accumulator>>(100, ctx.exec, [&](std::size_t i) {
    RandomStream rng(302, i);
    const auto x = sample_path(walker, at(0), t, rng);
    std::vector<double> scratch;
    Accumulator d;
    for (const auto& y : ys) d.add(inner_functional(y, x, kHard, scratch) - inner_functional(y, still, kHard, scratch));
    return std::optional<Accumulator>(d);
  });
  int violations = 0;
  double smallest = INFINITY;
  for (const auto& d : paired) {
    if (d->mean() < -3.0 * d->std_error()) ++violations;
    smallest = std::min(smallest, d->mean() / std::max(d->std_error(), 1e-300));
  }
  out.check(violations == 0, "100 walker paths, common Y (2000): E|R(Y-X)| - E|R(Y)| >= -3 SE in every case "
            "(smallest mean/SE = %.2f)", smallest);

  int checked = 0;
  int above = 0;
  for (const auto& gamma : {kHard, KillingRate(1.0)}) {
    const auto p = model(1, gamma, 1, 1, 1);
    for (double tt : {1.0, 2.0, 4.0, 8.0}) {
      const auto ref = pascal_reference(p, tt, 100000, 303, ctx.exec);
      std::vector<SurvivalEstimate> es{annealed_direct(p, tt, {1000, 10}, 304, ctx.exec)};
      es.push_back(gamma.is_infinite() ? annealed_range(p, tt, {1000, 200}, 305, ctx.exec)
                                       : annealed_softrange(p, tt, {1000, 200}, 305, ctx.exec));
      for (const auto& e : es) {
        ++checked;
        const double limit = ref.value + 3.0 * std::hypot(e.std_error, ref.std_error);
        if (e.value > limit) {
          ++above;
          out.check(false, "%s gamma=%s t=%g: %.5f above reference %.5f", to_string(e.estimator).c_str(),
                    gamma.to_string().c_str(), tt, e.value, ref.value);
        }
      }
      out.lines.push_back("     gamma=" + gamma.to_string() + " t=" + std::to_string(int(tt)) + ": reference " +
                          std::to_string(ref.value) + ", direct " + std::to_string(es[0].value) + ", " +
                          to_string(es[1].estimator) + " " + std::to_string(es[1].value));
    }
  }
  out.check(above == 0, "%d annealed estimates all <= Pascal reference + 3 combined SE", checked);
  return out;
}

// ---------------------------------------------------------------------------

Outcome ac04(const Context& ctx) {
  Outcome out;
  const auto p = model(1, kHard, 1, 1, 1);
  std::vector<SurvivalEstimate> es;
  std::vector<double> ratios;
  for (double t : {25.0, 100.0, 400.0}) {
    es.push_back(pascal_reference(p, t, 200000, 401, ctx.exec));
    const auto& e = es.back();
    const double exact = oracle::expected_range_1d(1.0, t);
    const double z = z_score(-e.log_value, exact, e.log_std_error, 0.0);
    out.check(std::abs(z) <= 3.0, "t=%g: -log Z = %.4f +- %.4f, exact E|Range| = %.4f (z = %.2f)", t, -e.log_value,
              e.log_std_error, exact, z);
    ratios.push_back(-e.log_value / annealed_law_1d(1.0, 1.0, t));
  }
  const auto fit = fit_rate(es, RateModel::sqrt_t);
  out.check(std::abs(ratios.back() - 1.0) <= 0.15, "ratio to sqrt(8t/pi): %.4f, %.4f, %.4f; within 15%% at t=400",
            ratios[0], ratios[1], ratios[2]);
  out.check(approaches(ratios, 1.0), "ratios approach 1 monotonically (sqrt-t fit coefficient %.4f vs %.4f)",
            fit.coefficient, std::sqrt(8.0 / std::numbers::pi));
  return out;
}

Outcome ac05(const Context& ctx) {
  Outcome out;
  const auto p = model(2, kHard, 0, 1, 1);
  std::vector<double> ratios;
  for (double t : {25.0, 100.0, 400.0}) {
    const auto e = pascal_reference(p, t, 20000, 501, ctx.exec);
    ratios.push_back(-e.log_value / annealed_law_2d(1.0, 1.0, t));
    out.check(ratios.back() > 0.3 && ratios.back() < 1.7, "t=%g: -log Z = %.3f +- %.3f, ratio to pi t / ln t = %.4f",
              t, -e.log_value, e.log_std_error, ratios.back());
  }
  out.check(approaches(ratios, 1.0), "ratios approach 1 monotonically");
  return out;
}

// ---------------------------------------------------------------------------

Outcome ac06(const Context& ctx) {
  Outcome out;
  const double g = green_function(3);
  const double horizon = 400.0;
  const long walks = 20000;
  const auto k = make_kernel(JumpKernel::simple_symmetric(3, 1.0));
  const auto lt = parallel_map<double>(static_cast<std::size_t>(walks), ctx.exec, [&](std::size_t i) {
    RandomStream rng(601, i);
    return local_time(sample_path(k, origin(3), horizon, rng), origin(3));
  });
  const auto acc = accumulate(lt);
  const double tail = std::pow(3.0 / (2.0 * std::numbers::pi), 1.5) * 2.0 / std::sqrt(horizon);
  const double mc = acc.mean() + tail;
  const double z = z_score(g, mc, 0.0, acc.std_error());
  out.check(std::abs(z) <= 3.0, "G_3(0) quadrature %.10f vs local-time MC %.5f +- %.5f (z = %.2f)", g, mc,
            acc.std_error(), z);
  out.check(std::abs(g - 1.5164) < 1e-4, "G_3(0) = %.6f ~ 1.5164", g);

  const auto p = model(3, KillingRate(1.0), 1, 1, 1);
  std::vector<SurvivalEstimate> es;
  for (double t : {2.0, 4.0, 8.0}) es.push_back(annealed_softrange(p, t, {2000, 200}, 602, ctx.exec));
  const auto fit = fit_rate(es, RateModel::exponential);
  const double bound = annealed_rate_lower_bound(p, g);
  out.check(fit.coefficient >= bound - fit.coefficient_error,
            "fitted rate %.4f +- %.4f (t = 2, 4, 8) >= nu gamma / (1 + gamma G / rho) = %.4f minus fit error",
            fit.coefficient, fit.coefficient_error, bound);
  return out;
}

Outcome ac07(const Context& ctx) {
  Outcome out;
  const auto p = model(1, kHard, 1, 1, 1);
  std::vector<SurvivalEstimate> es;
  for (double t : {1.0, 2.0, 4.0, 8.0}) es.push_back(annealed_range(p, t, {4000, 400}, 701, ctx.exec));
  for (std::size_t i = 0; i + 1 < es.size(); ++i) {
    const double gap = es[i + 1].log_value - 2.0 * es[i].log_value;
    const double se = std::hypot(es[i + 1].log_std_error, 2.0 * es[i].log_std_error);
    out.check(gap >= -3.0 * se, "t=%g: log Z_2t - 2 log Z_t = %.5f (3 SE = %.5f)", es[i].t, gap, 3.0 * se);
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome ac08(const Context& ctx) {
  Outcome out;
  const double p = 0.5;
  std::vector<SurvivalEstimate> es;
  for (double t : {1e2, 1e3, 1e4}) {
    es.push_back(bernoulli_survival(1, p, 1.0, t, 20000, 801, ctx.exec));
    const auto& e = es.back();
    const double exact = std::log(oracle::bernoulli_survival_1d(p, 1.0, t, 400));
    const double z = z_score(e.log_value, exact, e.log_std_error, 0.0);
    out.check(std::abs(z) <= 3.0, "t=%g: log Z = %.4f +- %.4f, exact series %.4f (z = %.2f)", t, e.log_value,
              e.log_std_error, exact, z);
  }
  const auto fit = fit_rate(es, RateModel::power);
  out.check(fit.exponent < 0.5, "free exponent %.4f +- %.4f < 0.5", fit.exponent, fit.exponent_error);
  out.check(fit.local_exponents[1] < fit.local_exponents[0], "local exponents decreasing: %.4f, %.4f",
            fit.local_exponents[0], fit.local_exponents[1]);
  std::vector<RatePoint> synthetic;
  for (double t : {1e2, 1e3, 1e4}) synthetic.push_back({t, 1.7 * std::cbrt(t), 0.0});
  const auto sfit = fit_rate(synthetic, RateModel::power);
  out.check(std::abs(sfit.exponent - 1.0 / 3.0) < 1e-3, "synthetic c t^(1/3) input: exponent %.6f", sfit.exponent);
  return out;
}

Outcome ac09(const Context& ctx) {
  Outcome out;
  const auto p = model(1, kHard, 1, 1, 1);
  GibbsOptions options;
  options.proposal = GibbsProposal::confined;
  std::vector<FluctuationReport> reports;
  for (double t : {64.0, 256.0, 1024.0}) {
    const auto e = sample_gibbs_ensemble(p, t, 4000, 100, 901, options, ctx.exec);
    reports.push_back(fluctuation_report(e, 0.1, 0.0));
    const auto& r = reports.back();
    out.check(r.effective_size >= 50.0, "t=%g: n_eff %.1f, weighted median ||X|| = %g, P(||X|| <= 0.1 t^(1/3)) = %.4f",
              t, r.effective_size, r.median, r.lower_probability);
  }
  const auto g = growth_exponent(reports);
  out.check(g.exponent < 0.5, "median growth exponent %.4f < 0.5 (local %.4f, %.4f)", g.exponent,
            g.local_exponents[0], g.local_exponents[1]);
  bool nonincreasing = true;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    nonincreasing = nonincreasing && reports[i].lower_probability <= reports[i - 1].lower_probability;
  }
  out.check(nonincreasing, "lower-window probability nonincreasing in t");
  return out;
}

// ---------------------------------------------------------------------------

/// Weighted least-squares slope of y against x, and its standard error.
std::pair<double, double> weighted_slope(const std::vector<double>& x, const std::vector<double>& y,
                                         const std::vector<double>& se) {
  double sw = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / (se[i] * se[i]);
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / (se[i] * se[i]);
    sxx += w * (x[i] - mx) * (x[i] - mx);
    sxy += w * (x[i] - mx) * (y[i] - my);
  }
  return {sxy / sxx, 1.0 / std::sqrt(sxx)};
}

Outcome ac10(const Context& ctx) {
  Outcome out;
  const double c = 0.05;
  const long n = 10000;
  const std::vector<double> ts{std::exp(1.0), 10.0, 100.0, 1000.0};
  const auto nn = make_kernel(JumpKernel::simple_symmetric(1, 1.0));
  const auto wide = make_kernel(JumpKernel::uniform_1d({-3, -1, 1, 3}, 1.0));
  struct Harness {
    const char* name;
    std::function<double(RandomStream&, double)> sample;
  };
  const std::vector<Harness> harnesses{
      {"F (thin points, gamma = 1)",
       [&](RandomStream& rng, double t) {
         const auto y = sample_path(nn, at(0), t, rng);
         return thin_point_functional(y, WalkPath::constant(nn, at(0), t), 1.0);
       }},
      {"G (holes, steps +-1, +-3)",
       [&](RandomStream& rng, double t) { return static_cast<double>(hole_functional(sample_path(wide, at(0), t, rng))); }}};
  for (std::size_t h = 0; h < harnesses.size(); ++h) {
    std::vector<double> x;
    std::vector<double> means;
    std::vector<double> ses;
    std::string row;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double t = ts[k];
      const RandomStream root(1001 + h, k);
      const auto v = parallel_map<double>(static_cast<std::size_t>(n), ctx.exec, [&](std::size_t i) {
        auto rng = root.substream(i);
        return std::exp(c * harnesses[h].sample(rng, t) / std::log(t));
      });
      const auto acc = accumulate(v);
      x.push_back(std::log(t));
      means.push_back(acc.mean());
      ses.push_back(acc.std_error());
      char buf[64];
      std::snprintf(buf, sizeof buf, " %.4f", acc.mean());
      row += buf;
    }
    const auto [slope, se] = weighted_slope(x, means, ses);
    out.check(slope <= 2.0 * se, "%s: means%s, slope vs ln t = %.2e (2 SE = %.2e)", harnesses[h].name, row.c_str(),
              slope, 2.0 * se);
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome ac11(const Context& ctx) {
  Outcome out;
  const auto nn = make_kernel(JumpKernel::simple_symmetric(1, 1.0));
  RandomStream xrng(1101);
  const auto x = sample_path(nn, at(0), 10.0, xrng);
  IntegratorConfig fine;
  fine.dt = 1e-3;
  fine.box_radius = 60;
  const auto a = solve_v_x(x, 1.0, *nn, fine);
  IntegratorConfig half = fine;
  half.dt = 5e-4;
  const auto b = solve_v_x(x, 1.0, *nn, half);
  out.check(std::abs(a.residual) < 1e-6, "Sigma_X identity residual %.2e at rk4 dt=1e-3 (dt/2: %.2e, sigma shift %.1e)",
            std::abs(a.residual), std::abs(b.residual), std::abs(a.sigma - b.sigma));

  RandomStream prng(1102);
  const auto pot = sample_static_potential({StaticKind::iid_poisson, 1, 40, 1.0, ""}, prng);
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  const double u0 = solve_pam(pot, *nn, 1.0, cfg, {5.0}).front().at(at(0));
  const RandomStream root(1103);
  const auto w = parallel_map<double>(100000, ctx.exec, [&](std::size_t i) {
    auto rng = root.substream(i);
    const auto path = sample_path(nn, at(0), 5.0, rng);
    double integral = 0.0;
    for (const auto& [site, l] : local_times(path)) integral += pot.box.contains(site) ? pot.at(site) * l : 0.0;
    return std::exp(-integral);
  });
  const auto fk = accumulate(w);
  const double z = z_score(u0, fk.mean(), 0.0, fk.std_error());
  out.check(std::abs(z) <= 3.0, "static field: PDE u(5,0) = %.5f, Feynman-Kac MC %.5f +- %.5f (z = %.2f)", u0,
            fk.mean(), fk.std_error(), z);

  const auto p = model(1, KillingRate(1.0), 1, 1, 0.5);
  const auto pam = annealed_pam_average(p, 5.0, 20000, cfg, 1104, ctx.exec);
  const auto direct = annealed_direct(p, 5.0, {4000, 10}, 1105, ctx.exec);
  const double z2 = z_score(pam.value, direct.value, pam.std_error, direct.std_error);
  out.check(std::abs(z2) <= 3.0, "E over fields of u(5,0) = %.5f +- %.5f vs annealed direct %.5f +- %.5f (z = %.2f)",
            pam.value, pam.std_error, direct.value, direct.std_error, z2);
  return out;
}

Outcome ac12(const Context& ctx) {
  Outcome out;
  const auto p = model(1, KillingRate(1.0), 1, 1, 1);
  QuenchedRateOptions options;
  options.config.dt = 0.01;
  options.start_sites = 1001;
  std::vector<QuenchedRate> rates;
  for (std::uint64_t seed : {1201, 1202}) {
    rates.push_back(quenched_rate(p, {4, 8, 16}, seed, options, ctx.exec));
    const auto& q = rates.back();
    out.check(q.within_bounds, "field %llu: fitted rate %.4f +- %.4f in (0, gamma nu + kappa = %.1f]",
              static_cast<unsigned long long>(seed), q.fit.coefficient, q.fit.coefficient_error, q.upper_bound);
  }
  const double diff = std::abs(rates[0].fit.coefficient - rates[1].fit.coefficient);
  const double err = std::hypot(rates[0].fit.coefficient_error, rates[1].fit.coefficient_error);
  out.check(diff <= err, "fields agree: |difference| %.4f <= combined fit error %.4f", diff, err);
  return out;
}

struct Criterion {
  std::string id;
  std::function<Outcome(const Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<std::string> only;
  unsigned workers = 0;
  bool verbose = false;
  app.add_option("--only", only, "criterion ids to run (default: all)");
  app.add_option("--workers", workers, "worker threads (0: all cores)");
  app.add_flag("-v,--verbose", verbose, "print every check");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{{"ac01", ac01}, {"ac02", ac02}, {"ac03", ac03}, {"ac04", ac04},
                                        {"ac05", ac05}, {"ac06", ac06}, {"ac07", ac07}, {"ac08", ac08},
                                        {"ac09", ac09}, {"ac10", ac10}, {"ac11", ac11}, {"ac12", ac12}};
  const auto& catalog = trapsim::experiment_catalog();
  if (catalog.size() != criteria.size()) {
    std::cerr << "catalog and criteria differ in size\n";
    return 1;
  }
  const std::set<std::string> wanted(only.begin(), only.end());
  Context ctx;
  ctx.exec.workers = workers;
  int failed = 0;
  int ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (catalog[i].id != criteria[i].id) {
      std::cerr << "catalog id " << catalog[i].id << " differs from " << criteria[i].id << '\n';
      return 1;
    }
    if (!wanted.empty() && !wanted.count(criteria[i].id)) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run(ctx);
    } catch (const std::exception& e) {
      o.check(false, "threw: %s", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s %s [%.1f s]\n", o.passed ? "PASS" : "FAIL", criteria[i].id.c_str(), catalog[i].title.c_str(),
                secs);
    for (const auto& line : o.lines) {
      if (verbose || !o.passed || line.rfind("ok", 0) == 0) std::printf("    %s\n", line.c_str());
    }
    std::fflush(stdout);
    failed += o.passed ? 0 : 1;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
