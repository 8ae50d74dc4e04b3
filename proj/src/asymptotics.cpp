#include "trapping/asymptotics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "trapping/confined.hpp"
#include "trapping/survival.hpp"
#include "trapping/trapfield.hpp"
#include "trapping/walk.hpp"

namespace trapping {

std::string to_string(RateModel m) {
  switch (m) {
    case RateModel::exponential: return "exponential";
    case RateModel::sqrt_t: return "sqrt";
    case RateModel::t_over_log_t: return "t-over-log-t";
    case RateModel::power: return "power";
  }
  return "?";
}

RateModel parse_rate_model(const std::string& name) {
  for (auto m : {RateModel::exponential, RateModel::sqrt_t, RateModel::t_over_log_t, RateModel::power}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown rate model '" + name + "'");
}

double rate_basis(RateModel m, double t) {
  switch (m) {
    case RateModel::exponential: return t;
    case RateModel::sqrt_t: return std::sqrt(t);
    case RateModel::t_over_log_t:
      if (!(t > 1.0)) throw std::domain_error("t / ln t needs t > 1");
      return t / std::log(t);
    case RateModel::power: break;
  }
  throw std::invalid_argument("the power model has no fixed basis");
}

RatePoint rate_point(const SurvivalEstimate& est) {
  if (!(est.log_value <= 0.0) || !std::isfinite(est.log_value)) {
    throw std::domain_error("cannot fit an estimate with log value " + std::to_string(est.log_value) +
                            " at t = " + std::to_string(est.t));
  }
  if (est.log_std_error > 0.5) {
    throw std::domain_error("estimate at t = " + std::to_string(est.t) + " too noisy to fit (relative error " +
                            std::to_string(est.log_std_error) + ")");
  }
  return {est.t, -est.log_value, est.log_std_error};
}

RateFit fit_rate(const std::vector<SurvivalEstimate>& estimates, RateModel model) {
  std::vector<RatePoint> pts;
  for (const auto& e : estimates) pts.push_back(rate_point(e));
  return fit_rate(pts, model);
}

RateFit fit_rate(const std::vector<RatePoint>& points, RateModel model) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < 3) throw std::invalid_argument("a rate fit needs at least 3 points");
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    if (!(p.minus_log >= 0.0) || !std::isfinite(p.minus_log)) throw std::domain_error("-log Z must be finite and >= 0");
    if (model == RateModel::power && p.minus_log == 0.0) throw std::domain_error("the power model needs -log Z > 0");
    if (!(p.error >= 0.0)) throw std::invalid_argument("errors must be >= 0");
    if (i > 0 && !(p.t > points[static_cast<std::size_t>(i - 1)].t)) {
      throw std::invalid_argument("t grid must be strictly increasing");
    }
  }
  RateFit fit;
  fit.model = model;
  fit.weighted = std::all_of(points.begin(), points.end(), [](const RatePoint& p) { return p.error > 0.0; });
  for (const auto& p : points) {
    fit.ts.push_back(p.t);
    fit.minus_logs.push_back(p.minus_log);
  }
  for (std::size_t i = 1; i < points.size() && points[0].minus_log > 0.0; ++i) {
    fit.local_exponents.push_back(std::log(points[i].minus_log / points[i - 1].minus_log) /
                                  std::log(points[i].t / points[i - 1].t));
  }

  // Design matrix, response and weights in the fitted scale.
  const Eigen::Index k = model == RateModel::power ? 2 : 1;
  Eigen::MatrixXd a(n, k);
  Eigen::VectorXd y(n);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    if (model == RateModel::power) {
      a(i, 0) = 1.0;
      a(i, 1) = std::log(p.t);
      y[i] = std::log(p.minus_log);
      w[i] = fit.weighted ? 1.0 / std::pow(p.error / p.minus_log, 2) : 1.0;
    } else {
      a(i, 0) = rate_basis(model, p.t);
      y[i] = p.minus_log;
      w[i] = fit.weighted ? 1.0 / (p.error * p.error) : 1.0;
      fit.ratios.push_back(p.minus_log / a(i, 0));
    }
  }
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd aw = sw.asDiagonal() * a;
  const Eigen::MatrixXd normal = aw.transpose() * aw;
  const Eigen::VectorXd beta = normal.ldlt().solve(aw.transpose() * (sw.asDiagonal() * y));
  const Eigen::VectorXd resid = y - a * beta;
  const double chi2 = (sw.asDiagonal() * resid).squaredNorm();
  const double dof = static_cast<double>(n - k);
  const double scale = fit.weighted ? std::max(1.0, chi2 / dof) : chi2 / dof;
  const Eigen::MatrixXd cov = normal.inverse() * scale;
  fit.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  if (model == RateModel::power) {
    fit.coefficient = std::exp(beta[0]);
    fit.coefficient_error = fit.coefficient * std::sqrt(cov(0, 0));
    fit.exponent = beta[1];
    fit.exponent_error = std::sqrt(cov(1, 1));
  } else {
    fit.coefficient = beta[0];
    fit.coefficient_error = std::sqrt(cov(0, 0));
    fit.exponent = model == RateModel::sqrt_t ? 0.5 : 1.0;
  }
  return fit;
}

bool approaches(const std::vector<double>& values, double target) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (std::abs(values[i] - target) > std::abs(values[i - 1] - target)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

/// e^{-s} I_0(s).
double scaled_bessel_i0(double s) {
  if (s < 500.0) return std::exp(-s) * std::cyl_bessel_i(0.0, s);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    term *= (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * s);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * s);
}

struct GaussLegendre {
  std::array<double, 24> nodes{};
  std::array<double, 24> weights{};

  GaussLegendre() {
    constexpr int m = 24;
    for (int i = 0; i < m; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        double p1 = x;
        for (int j = 2; j <= m; ++j) {
          const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        dp = m * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[static_cast<std::size_t>(i)] = x;
      weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(c + h * nodes[i]);
    return h * sum;
  }
};

}  // namespace

double green_function(int d, const JumpKernel& kernel) {
  if (kernel.dim() != d) throw std::invalid_argument("kernel dimension differs from d");
  if (!(kernel.rate() > 0.0)) throw std::invalid_argument("Green function needs a positive rate");
  const auto simple = JumpKernel::simple_symmetric(d, kernel.rate());
  const bool uniform = std::all_of(kernel.probabilities().begin(), kernel.probabilities().end(),
                                   [d](double q) { return std::abs(q - 0.5 / d) < 1e-12; });
  if (kernel.support_size() != simple.support_size() || !kernel.is_nearest_neighbor() || !uniform) {
    throw std::invalid_argument("Green function is implemented for the simple symmetric walk");
  }
  if (d <= 2) return kInfiniteGreen;
  static const GaussLegendre gl;
  const auto f = [d](double s) { return std::pow(scaled_bessel_i0(s), d); };
  double total = gl.integrate(f, 0.0, 1.0);
  double a = 1.0;
  const double top = std::ldexp(1.0, 44);
  while (a < top) {
    total += gl.integrate(f, a, 2.0 * a);
    a *= 2.0;
  }
  // Tail from the asymptotic expansion (2 pi s)^{-d/2} (1 + d / (8 s)).
  const double h = 0.5 * d;
  total += std::pow(2.0 * std::numbers::pi, -h) *
           (std::pow(top, 1.0 - h) / (h - 1.0) + d / 8.0 * std::pow(top, -h) / h);
  return d * total / kernel.rate();
}

double green_function(int d) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  if (d <= 2) return kInfiniteGreen;
  return green_function(d, JumpKernel::simple_symmetric(d, 1.0));
}

double annealed_rate_lower_bound(const ModelParams& params, double green) {
  if (params.gamma.is_infinite()) return params.nu * params.rho / green;
  const double g = params.gamma.value();
  return params.nu * g / (1.0 + g * green / params.rho);
}

double annealed_law_1d(double nu, double rho, double t) { return nu * std::sqrt(8.0 * rho * t / std::numbers::pi); }

double annealed_law_2d(double nu, double rho, double t) { return nu * std::numbers::pi * rho * t / std::log(t); }

// ---------------------------------------------------------------------------

SurvivalEstimate bernoulli_survival(int d, double p, double kappa, double t, long n, std::uint64_t seed,
                                    const ExecutionOptions& exec, bool importance) {
  const auto start = std::chrono::steady_clock::now();
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in (0, 1]");
  if (n <= 0) throw std::invalid_argument("n must be positive");
  if (!(t >= 0.0) || !(kappa >= 0.0)) throw std::invalid_argument("t and kappa must be >= 0");
  SurvivalEstimate est;
  est.estimator = importance && d == 1 ? Estimator::importance : Estimator::range;
  est.params.dim = d;
  est.params.gamma = KillingRate::infinite();
  est.params.kappa = kappa;
  est.params.rho = 0.0;
  est.params.nu = -std::log(p);
  est.t = t;
  est.seed = seed;
  const double log_p = std::log(p);
  const auto walker = make_kernel(JumpKernel::simple_symmetric(d, kappa));
  const RandomStream root(seed, static_cast<std::uint64_t>(est.estimator));
  std::vector<double> logs;
  if (est.estimator == Estimator::importance && kappa > 0.0 && p < 1.0) {
    const double best = std::cbrt(std::numbers::pi * std::numbers::pi * kappa * t / -log_p);
    const int lo = std::max(1, static_cast<int>(best / 4.0));
    const int hi = std::max(lo + 1, static_cast<int>(std::ceil(4.0 * best)));
    const auto mixture = ConfinedMixture::geometric(walker, t, lo, hi, 16, 0.05);
    logs = parallel_map<double>(static_cast<std::size_t>(n), exec, [&](std::size_t i) {
      auto rng = root.substream(i);
      const auto x = mixture.sample(rng);
      const auto [mx, mn] = running_extrema(x);
      return (mx - mn + 1) * log_p - mixture.log_density_ratio(x);
    });
  } else {
    logs = parallel_map<double>(static_cast<std::size_t>(n), exec, [&](std::size_t i) {
      auto rng = root.substream(i);
      const auto x = sample_path(walker, origin(d), t, rng);
      return static_cast<double>(range_size(x)) * log_p;
    });
  }
  est.set_from_logs(logs);
  est.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return est;
}

DvCheck dv_exponent_check(int d, double p, const std::vector<double>& ts, long n, std::uint64_t seed,
                          const ExecutionOptions& exec, bool importance) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
  DvCheck out;
  for (double t : ts) out.estimates.push_back(bernoulli_survival(d, p, 1.0, t, n, seed, exec, importance));
  out.fit = fit_rate(out.estimates, RateModel::power);
  return out;
}

QuenchedRate quenched_rate(const ModelParams& params, const std::vector<double>& ts, std::uint64_t field_seed,
                           const QuenchedRateOptions& options, const ExecutionOptions& exec) {
  params.validate();
  if (ts.empty()) throw std::invalid_argument("empty t grid");
  if (options.walks == 0 && params.gamma.is_infinite()) {
    throw std::invalid_argument("gamma = inf needs the walk route (walks > 0)");
  }
  if (options.start_sites < 1 || options.start_sites % 2 == 0) {
    throw std::invalid_argument("start_sites must be odd and positive");
  }
  if (options.walks > 0 && options.start_sites != 1) {
    throw std::invalid_argument("start-site averaging is a PDE-route option");
  }
  const int blocks = std::min(options.blocks, options.start_sites);
  if (options.start_sites > 1 && blocks < 2) throw std::invalid_argument("need at least two blocks");
  const double tmax = *std::max_element(ts.begin(), ts.end());
  const auto walker = params.walker_kernel();
  const long walks = std::max(1L, options.walks * static_cast<long>(ts.size()));
  const double escape = std::min(1e-16, walker_escape_tolerance(walks));
  const int margin = options.start_sites / 2;
  int reach = escape_radius(*walker, tmax, escape) + margin;
  auto draw = [&] {
    const FieldSampler sampler(TrapFieldSpec::certified(params.dim, params.nu, params.trap_kernel(), tmax, reach));
    RandomStream rng(field_seed, static_cast<std::uint64_t>(Estimator::quenched));
    return sampler(rng);
  };
  auto field = draw();
  auto config = options.config;
  config.box_radius = 0;
  auto bracket = [](const QuenchedProfile& q) {
    double worst = 0.0;
    for (std::size_t k = 0; k < q.lower.size(); ++k) worst = std::max(worst, std::log(q.upper[k] / q.lower[k]));
    return worst;
  };

  QuenchedRate out;
  std::vector<QuenchedProfile> profiles;
  if (options.walks == 0) {
    // Widen the box until absorbing and surviving edges agree at tmax.
    for (int round = 0;; ++round) {
      const double worst = bracket(quenched_profile_pde(field, params.gamma, walker, tmax, config, margin));
      if (worst <= options.max_bracket) break;
      if (round == options.max_enlargements) {
        throw std::domain_error("box bracket " + std::to_string(worst) + " at t = " + std::to_string(tmax) +
                                " still above " + std::to_string(options.max_bracket));
      }
      reach = static_cast<int>(std::ceil(1.5 * reach));
      field = draw();
    }
    out.box_radius = reach;
  }
  std::vector<RatePoint> points;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (options.walks > 0) {
      out.estimates.push_back(
          quenched_survival(field, params.gamma, walker, ts[i], options.walks, field_seed + 1 + i, exec));
      points.push_back(rate_point(out.estimates.back()));
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    const auto prof = quenched_profile_pde(field, params.gamma, walker, ts[i], config, margin);
    SurvivalEstimate est;
    est.estimator = Estimator::quenched_pde;
    est.params = params;
    est.t = ts[i];
    est.seed = field_seed;
    est.n = options.start_sites;
    if (options.start_sites == 1) {
      est.value = prof.lower.front();
      est.log_value = std::log(est.value);
      est.std_error = prof.upper.front() - prof.lower.front();
      est.log_std_error = bracket(prof);
      points.push_back({ts[i], -est.log_value, 0.0});
    } else {
      // Batch means over contiguous blocks of start sites.
      Accumulator batches;
      const std::size_t n = prof.lower.size();
      for (int b = 0; b < blocks; ++b) {
        const std::size_t lo = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(blocks);
        const std::size_t hi = n * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(blocks);
        double sum = 0.0;
        for (std::size_t k = lo; k < hi; ++k) sum += std::log(prof.lower[k]);
        batches.add(sum / static_cast<double>(hi - lo));
      }
      double total = 0.0;
      for (double v : prof.lower) total += std::log(v);
      est.log_value = total / static_cast<double>(n);
      est.log_std_error = batches.std_error();
      est.value = std::exp(est.log_value);
      est.std_error = est.value * est.log_std_error;
      points.push_back({ts[i], -est.log_value, est.log_std_error});
    }
    est.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.estimates.push_back(est);
  }
  out.fit = fit_rate(points, RateModel::exponential);
  out.upper_bound = params.gamma.is_infinite() ? std::numeric_limits<double>::infinity()
                                               : params.gamma.value() * params.nu + params.kappa;
  out.within_bounds = out.fit.coefficient > 0.0 && out.fit.coefficient - out.fit.coefficient_error <= out.upper_bound;
  out.field = std::make_shared<const TrapField>(std::move(field));
  return out;
}

}  // namespace trapping
