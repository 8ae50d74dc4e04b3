#include "trapping/survival.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace trapping {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

SurvivalEstimate blank(Estimator e, const ModelParams& params, double t, std::uint64_t seed) {
  SurvivalEstimate est;
  est.estimator = e;
  est.params = params;
  est.t = t;
  est.seed = seed;
  return est;
}

void require_symmetric_traps(const ModelParams& params) {
  if (!params.trap_kernel()->is_symmetric()) {
    throw std::invalid_argument("this representation requires a symmetric trap kernel");
  }
}

void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("time must be finite and >= 0");
}

bool nearest_neighbour_1d(const WalkPath& p) {
  return p.dim() == 1 && (p.jump_count() == 0 || (p.kernel().is_nearest_neighbor() && !p.kernel().is_composite()));
}

bool at_rest_at_origin(const WalkPath& p) { return p.jump_count() == 0 && (p.origin().array() == 0).all(); }

}  // namespace

double walker_escape_tolerance(long walks) { return std::min(1e-9, 1e-6 / static_cast<double>(std::max(1L, walks))); }

TrapFieldSpec certified_field_spec(const ModelParams& params, double t, long walks) {
  const int reach = escape_radius(*params.walker_kernel(), t, walker_escape_tolerance(walks));
  return TrapFieldSpec::certified(params.dim, params.nu, params.trap_kernel(), t, reach);
}

SurvivalEstimate quenched_survival(const TrapField& field, const KillingRate& gamma, const KernelPtr& walker, double t,
                                   long n_walks, std::uint64_t seed, const ExecutionOptions& exec) {
  const auto start = Clock::now();
  check_time(t);
  if (n_walks <= 0) throw std::invalid_argument("n_walks must be positive");
  if (t > field.spec().horizon) throw std::invalid_argument("field horizon shorter than t");
  if (walker->dim() != field.spec().dim) throw std::invalid_argument("walker dimension differs from field");
  const RandomStream root(seed, static_cast<std::uint64_t>(Estimator::quenched));
  const Site o = origin(walker->dim());
  const auto weights = parallel_map<double>(static_cast<std::size_t>(n_walks), exec, [&](std::size_t i) {
    if (gamma.is_zero()) return 1.0;
    auto rng = root.substream(i);
    const auto x = sample_path(walker, o, t, rng);
    return gamma.survival_weight(interaction_integral(field, x, 0.0, t).integral);
  });
  ModelParams p;
  p.dim = field.spec().dim;
  p.gamma = gamma;
  p.kappa = walker->rate();
  p.rho = field.spec().trap_kernel->rate();
  p.nu = field.spec().density;
  p.walker_shape = walker;
  p.trap_shape = field.spec().trap_kernel;
  auto est = blank(Estimator::quenched, p, t, seed);
  est.set_from(accumulate(weights));
  est.wall_time = seconds_since(start);
  return est;
}

QuenchedProfile quenched_profile_pde(const TrapField& field, const KillingRate& gamma, const KernelPtr& walker,
                                     double t, const IntegratorConfig& config, int margin) {
  check_time(t);
  if (gamma.is_infinite()) throw std::invalid_argument("the PDE route needs a finite killing rate");
  if (margin < 0) throw std::invalid_argument("margin must be >= 0");
  const int radius = config.box_radius > 0 ? config.box_radius : field.spec().walker_reach;
  if (margin > radius) throw std::invalid_argument("margin exceeds the PAM box");
  QuenchedProfile out;
  out.margin = margin;
  auto cfg = config;
  for (Boundary b : {Boundary::dirichlet_zero, Boundary::dirichlet_one}) {
    cfg.boundary = b;
    const auto u = solve_pam(field, *walker, gamma.value(), cfg, {t}, true).front();
    auto& dst = b == Boundary::dirichlet_zero ? out.lower : out.upper;
    Site x = origin(field.spec().dim);
    for (int k = -margin; k <= margin; ++k) {
      x[0] = k;
      dst.push_back(u.at(x));
    }
  }
  return out;
}

SurvivalEstimate quenched_survival_pde(const TrapField& field, const KillingRate& gamma, const KernelPtr& walker,
                                       double t, const IntegratorConfig& config) {
  const auto start = Clock::now();
  ModelParams p;
  p.dim = field.spec().dim;
  p.gamma = gamma;
  p.kappa = walker->rate();
  p.rho = field.spec().trap_kernel->rate();
  p.nu = field.spec().density;
  p.walker_shape = walker;
  p.trap_shape = field.spec().trap_kernel;
  auto est = blank(Estimator::quenched_pde, p, t, 0);
  const auto prof = quenched_profile_pde(field, gamma, walker, t, config, 0);
  const double lower = prof.lower.front();
  const double upper = prof.upper.front();
  est.n = 1;
  est.value = lower;
  est.log_value = std::log(lower);
  est.std_error = upper - lower;
  est.log_std_error = std::log(upper) - std::log(lower);
  est.wall_time = seconds_since(start);
  return est;
}

SurvivalEstimate annealed_direct(const ModelParams& params, double t, const Budget& budget, std::uint64_t seed,
                                 const ExecutionOptions& exec) {
  const auto start = Clock::now();
  params.validate();
  check_time(t);
  if (budget.outer <= 0 || budget.inner <= 0) throw std::invalid_argument("budgets must be positive");
  auto est = blank(Estimator::direct, params, t, seed);
  if (params.nu == 0.0 || t == 0.0 || params.gamma.is_zero()) {
    est.n = budget.outer * budget.inner;
    est.wall_time = seconds_since(start);
    return est;
  }
  const auto walker = params.walker_kernel();
  const FieldSampler sampler(certified_field_spec(params, t, budget.outer * budget.inner));
  const RandomStream root(seed, static_cast<std::uint64_t>(Estimator::direct));
  const Site o = origin(params.dim);
  const auto per_field = parallel_map<Accumulator>(static_cast<std::size_t>(budget.outer), exec, [&](std::size_t i) {
    auto rng = root.substream(i);
    const auto field = sampler(rng);
    Accumulator acc;
    for (long j = 0; j < budget.inner; ++j) {
      auto wr = rng.substream(static_cast<std::uint64_t>(j));
      const auto x = sample_path(walker, o, t, wr);
      acc.add(params.gamma.survival_weight(interaction_integral(field, x).integral));
    }
    return acc;
  });
  Accumulator means;
  Accumulator within;
  for (const auto& acc : per_field) {
    means.add(acc.mean());
    within.add(acc.variance());
  }
  est.set_from(means);
  est.n = budget.outer * budget.inner;
  est.between_variance = means.variance();
  est.within_variance = within.mean();
  est.wall_time = seconds_since(start);
  return est;
}

double inner_functional(const WalkPath& y, const WalkPath& x, const KillingRate& gamma, std::vector<double>& scratch) {
  if (gamma.is_zero()) return 0.0;
  if (gamma.is_infinite()) {
    if (nearest_neighbour_1d(y) && nearest_neighbour_1d(x)) return difference_extent_1d(y, x).width();
    if (at_rest_at_origin(x)) return static_cast<double>(range_size(y));
    return static_cast<double>(range_size(difference_path(y, x)));
  }
  const double g = gamma.value();
  double total = 0.0;
  if (y.dim() == 1) {
    difference_local_times_1d(y, x, scratch);
    for (double l : scratch) total -= l > 0.0 ? std::expm1(-g * l) : 0.0;
    return total;
  }
  const auto lts = at_rest_at_origin(x) ? local_times(y) : local_times(difference_path(y, x));
  for (const auto& [site, l] : lts) total -= std::expm1(-g * l);
  return total;
}

std::vector<double> inner_values(const std::vector<WalkPath>& ys, const WalkPath& x, const KillingRate& gamma) {
  std::vector<double> out;
  out.reserve(ys.size());
  std::vector<double> scratch;
  for (const auto& y : ys) out.push_back(inner_functional(y, x, gamma, scratch));
  return out;
}

std::vector<WalkPath> sample_trap_paths(const ModelParams& params, double t, long n, const RandomStream& root) {
  const auto trap = params.trap_kernel();
  const Site o = origin(params.dim);
  std::vector<WalkPath> ys;
  ys.reserve(static_cast<std::size_t>(n));
  for (long j = 0; j < n; ++j) {
    auto rng = root.substream(static_cast<std::uint64_t>(j));
    ys.push_back(sample_path(trap, o, t, rng));
  }
  return ys;
}

namespace {

SurvivalEstimate annealed_inner_route(Estimator tag, const ModelParams& params, double t, const Budget& budget,
                                      std::uint64_t seed, const ExecutionOptions& exec, bool common_y) {
  const auto start = Clock::now();
  params.validate();
  check_time(t);
  require_symmetric_traps(params);
  if (budget.outer <= 0 || budget.inner <= 0) throw std::invalid_argument("budgets must be positive");
  auto est = blank(tag, params, t, seed);
  if (params.nu == 0.0 || t == 0.0 || params.gamma.is_zero()) {
    est.n = budget.outer;
    est.wall_time = seconds_since(start);
    return est;
  }
  const auto walker = params.walker_kernel();
  const auto trap = params.trap_kernel();
  const RandomStream root(seed, static_cast<std::uint64_t>(tag));
  const Site o = origin(params.dim);
  std::vector<WalkPath> shared;
  if (common_y) shared = sample_trap_paths(params, t, budget.inner, root.substream(~0ULL));

  struct Sample {
    double weight = 1.0;
    double jensen = 0.0;
    double inner_variance = 0.0;
  };
  const auto samples = parallel_map<Sample>(static_cast<std::size_t>(budget.outer), exec, [&](std::size_t i) {
    auto xr = root.substream(i);
    const auto x = sample_path(walker, o, t, xr);
    Accumulator acc;
    std::vector<double> scratch;
    if (common_y) {
      for (const auto& y : shared) acc.add(inner_functional(y, x, params.gamma, scratch));
    } else {
      for (long j = 0; j < budget.inner; ++j) {
        auto yr = xr.substream(static_cast<std::uint64_t>(j));
        acc.add(inner_functional(sample_path(trap, o, t, yr), x, params.gamma, scratch));
      }
    }
    Sample s;
    s.weight = std::exp(-params.nu * acc.mean());
    s.inner_variance = acc.variance() / static_cast<double>(acc.count());
    s.jensen = 0.5 * params.nu * params.nu * s.inner_variance * s.weight;
    return s;
  });
  Accumulator weights;
  Accumulator jensen;
  Accumulator within;
  for (const auto& s : samples) {
    weights.add(s.weight);
    jensen.add(s.jensen);
    within.add(s.inner_variance);
  }
  est.set_from(weights);
  est.jensen_correction = jensen.mean();
  est.between_variance = weights.variance();
  est.within_variance = within.mean();
  est.wall_time = seconds_since(start);
  return est;
}

}  // namespace

SurvivalEstimate annealed_range(const ModelParams& params, double t, const Budget& budget, std::uint64_t seed,
                                const ExecutionOptions& exec, bool common_y) {
  if (!params.gamma.is_infinite()) throw std::invalid_argument("the range representation needs gamma = inf");
  return annealed_inner_route(Estimator::range, params, t, budget, seed, exec, common_y);
}

SurvivalEstimate annealed_softrange(const ModelParams& params, double t, const Budget& budget, std::uint64_t seed,
                                    const ExecutionOptions& exec, bool common_y) {
  if (params.gamma.is_infinite()) throw std::invalid_argument("use the range representation for gamma = inf");
  return annealed_inner_route(Estimator::softrange, params, t, budget, seed, exec, common_y);
}

SurvivalEstimate annealed_pde(const ModelParams& params, double t, long n_x, const IntegratorConfig& config,
                              std::uint64_t seed, const ExecutionOptions& exec) {
  const auto start = Clock::now();
  params.validate();
  check_time(t);
  if (params.gamma.is_infinite()) throw std::invalid_argument("the PDE route needs a finite killing rate");
  if (n_x <= 0) throw std::invalid_argument("n_x must be positive");
  require_symmetric_traps(params);
  auto est = blank(Estimator::pde, params, t, seed);
  if (params.nu == 0.0 || t == 0.0 || params.gamma.is_zero()) {
    est.n = n_x;
    est.wall_time = seconds_since(start);
    return est;
  }
  const auto walker = params.walker_kernel();
  const auto trap = params.trap_kernel();
  const double g = params.gamma.value();
  const RandomStream root(seed, static_cast<std::uint64_t>(Estimator::pde));
  const Site o = origin(params.dim);
  const auto weights = parallel_map<double>(static_cast<std::size_t>(n_x), exec, [&](std::size_t i) {
    auto rng = root.substream(i);
    const auto x = sample_path(walker, o, t, rng);
    return std::exp(-params.nu * g * solve_v_x(x, g, *trap, config).integral);
  });
  est.set_from(accumulate(weights));
  est.wall_time = seconds_since(start);
  return est;
}

SurvivalEstimate pascal_reference(const ModelParams& params, double t, long n_y, std::uint64_t seed,
                                  const ExecutionOptions& exec) {
  const auto start = Clock::now();
  params.validate();
  check_time(t);
  require_symmetric_traps(params);
  if (n_y <= 0) throw std::invalid_argument("n_y must be positive");
  auto est = blank(Estimator::pascal_ref, params, t, seed);
  if (params.nu == 0.0 || t == 0.0 || params.gamma.is_zero()) {
    est.n = n_y;
    est.wall_time = seconds_since(start);
    return est;
  }
  const auto trap = params.trap_kernel();
  const RandomStream root(seed, static_cast<std::uint64_t>(Estimator::pascal_ref));
  const Site o = origin(params.dim);
  const auto still = WalkPath::constant(params.walker_kernel(), o, t);
  const bool extent_only = params.gamma.is_infinite() && params.dim == 1 && trap->is_nearest_neighbor();
  const auto values = parallel_map<double>(static_cast<std::size_t>(n_y), exec, [&](std::size_t j) {
    auto rng = root.substream(j);
    if (extent_only) return static_cast<double>(sample_extent_1d(trap->rate(), t, rng).width());
    std::vector<double> scratch;
    return inner_functional(sample_path(trap, o, t, rng), still, params.gamma, scratch);
  });
  const auto acc = accumulate(values);
  est.n = n_y;
  est.log_value = -params.nu * acc.mean();
  est.log_std_error = params.nu * acc.std_error();
  est.value = std::exp(est.log_value);
  est.std_error = est.value * est.log_std_error;
  est.within_variance = acc.variance();
  est.jensen_correction = 0.5 * params.nu * params.nu * acc.variance() / static_cast<double>(n_y) * est.value;
  est.wall_time = seconds_since(start);
  return est;
}

}  // namespace trapping
