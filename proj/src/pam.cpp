#include "trapping/pam.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace trapping {

double stability_limit(Scheme scheme) { return scheme == Scheme::rk4 ? 2.78 : 2.0; }

LatticeGenerator::LatticeGenerator(const JumpKernel& kernel, const Box& box, Boundary boundary)
    : box_(box), boundary_(boundary), rate_(kernel.rate()) {
  if (kernel.dim() != box.dim) throw std::invalid_argument("generator kernel dimension differs from box");
  const auto n = static_cast<Eigen::Index>(box.volume());
  const int side = box.side();
  for (std::size_t j = 0; j < kernel.support_size(); ++j) {
    const auto step = kernel.displacements().col(static_cast<Eigen::Index>(j));
    Eigen::ArrayXi nb(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Site y = box.site(static_cast<std::size_t>(i)) + step;
      if (boundary == Boundary::periodic) {
        for (Eigen::Index c = 0; c < y.size(); ++c) y[c] = ((y[c] + box.radius) % side + side) % side - box.radius;
      }
      nb[i] = box.contains(y) ? static_cast<int>(box.index(y)) : static_cast<int>(n);
    }
    neighbours_.push_back(std::move(nb));
    weights_.push_back(kernel.rate() * kernel.probabilities()[j]);
  }
}

namespace {

/// Explicit integrator for f' = L f - pot * f on the extended layout, with
/// an optional tracked site whose value is integrated in time.
class LinearStepper {
 public:
  LinearStepper(const LatticeGenerator& gen, const IntegratorConfig& config) : gen_(gen), config_(config) {
    const auto n = static_cast<Eigen::Index>(gen.box().volume());
    for (auto* a : {&k1_, &k2_, &k3_, &k4_}) a->resize(n);
    stage_.resize(n + 1);
    stage_[n] = gen.ghost_value<double>();
  }

  /// Advances `ext` by `duration` with a constant potential. Returns the
  /// number of substeps taken.
  std::size_t advance(Eigen::ArrayXd& ext, const Eigen::ArrayXd& pot, double duration, Eigen::Index tracked = -1,
                      double* integral = nullptr) {
    if (duration <= 0.0) return 0;
    const auto m = static_cast<std::size_t>(std::ceil(duration / config_.dt - 1e-9));
    const double h = duration / static_cast<double>(std::max<std::size_t>(m, 1));
    const double spectral = 2.0 * gen_.rate() + (pot.size() ? pot.maxCoeff() : 0.0);
    if (h * spectral > stability_limit(config_.scheme)) {
      throw std::domain_error("time step " + std::to_string(h) + " violates the stability bound (dt * " +
                              std::to_string(spectral) + " > " + std::to_string(stability_limit(config_.scheme)) + ")");
    }
    const Eigen::Index n = ext.size() - 1;
    for (std::size_t s = 0; s < std::max<std::size_t>(m, 1); ++s) {
      if (config_.scheme == Scheme::explicit_euler) {
        rhs(ext, pot, k1_);
        if (integral) *integral += h * ext[tracked];
        ext.head(n) += h * k1_;
        continue;
      }
      rhs(ext, pot, k1_);
      stage_.head(n) = ext.head(n) + 0.5 * h * k1_;
      rhs(stage_, pot, k2_);
      const double v2 = tracked >= 0 ? stage_[tracked] : 0.0;
      stage_.head(n) = ext.head(n) + 0.5 * h * k2_;
      rhs(stage_, pot, k3_);
      const double v3 = tracked >= 0 ? stage_[tracked] : 0.0;
      stage_.head(n) = ext.head(n) + h * k3_;
      rhs(stage_, pot, k4_);
      const double v4 = tracked >= 0 ? stage_[tracked] : 0.0;
      if (integral) *integral += h / 6.0 * (ext[tracked] + 2.0 * v2 + 2.0 * v3 + v4);
      ext.head(n) += h / 6.0 * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }
    return std::max<std::size_t>(m, 1);
  }

 private:
  void rhs(const Eigen::ArrayXd& ext, const Eigen::ArrayXd& pot, Eigen::ArrayXd& out) {
    gen_.apply_extended(ext, out);
    out -= pot * ext.head(out.size());
  }

  const LatticeGenerator& gen_;
  IntegratorConfig config_;
  Eigen::ArrayXd k1_, k2_, k3_, k4_, stage_;
};

void check_config(const IntegratorConfig& config) {
  if (!(config.dt > 0.0) || !std::isfinite(config.dt)) throw std::invalid_argument("dt must be positive");
  if (config.box_radius < 0) throw std::invalid_argument("box radius must be >= 0");
  if (!(config.box_tolerance > 0.0 && config.box_tolerance < 1.0)) {
    throw std::invalid_argument("box tolerance must lie in (0, 1)");
  }
}

Eigen::ArrayXd initial_state(const Box& box, double ghost) {
  Eigen::ArrayXd ext = Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(box.volume()) + 1);
  ext[ext.size() - 1] = ghost;
  return ext;
}

LatticeField<double> snapshot(const Box& box, const Eigen::ArrayXd& ext, Boundary b, double time) {
  return {box, ext.head(ext.size() - 1), b, time};
}

std::vector<double> sorted_times(std::vector<double> times, double horizon) {
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  for (double s : times) {
    if (!(s >= 0.0) || s > horizon) throw std::invalid_argument("output time outside [0, horizon]");
  }
  return times;
}

}  // namespace

int v_x_box_radius(const WalkPath& x_path, const JumpKernel& trap_kernel, double tolerance) {
  return truncation_radius(x_path.dim(), trap_kernel, 1.0, x_path.horizon(), sup_norm(x_path), tolerance);
}

VxSolution solve_v_x(const WalkPath& x_path, double gamma, const JumpKernel& trap_kernel,
                     const IntegratorConfig& config, const std::vector<double>& snapshot_times) {
  check_config(config);
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("the v_X equation needs a finite killing rate (use the range route for gamma = inf)");
  }
  if (!trap_kernel.is_symmetric()) {
    throw std::invalid_argument("the v_X equation is implemented for symmetric trap kernels only");
  }
  if (trap_kernel.dim() != x_path.dim()) throw std::invalid_argument("trap kernel dimension differs from path");
  const int radius = config.box_radius > 0 ? config.box_radius : v_x_box_radius(x_path, trap_kernel, config.box_tolerance);
  if (sup_norm(x_path) > radius) throw std::out_of_range("walker path leaves the integration box");
  const Box box{x_path.dim(), radius};
  const LatticeGenerator gen(trap_kernel, box, config.boundary);
  LinearStepper stepper(gen, config);

  const double t = x_path.horizon();
  const auto snaps = sorted_times(snapshot_times, t);
  std::vector<double> breaks(x_path.jump_times().begin(), x_path.jump_times().end());
  breaks.insert(breaks.end(), snaps.begin(), snaps.end());
  breaks.push_back(t);
  std::sort(breaks.begin(), breaks.end());

  VxSolution out;
  Eigen::ArrayXd ext = initial_state(box, gen.ghost_value<double>());
  Eigen::ArrayXd pot = Eigen::ArrayXd::Zero(ext.size() - 1);
  double integral = 0.0;
  double cur = 0.0;
  std::size_t next_snap = 0;
  auto take_snapshots = [&] {
    while (next_snap < snaps.size() && snaps[next_snap] <= cur) {
      out.snapshots.push_back(snapshot(box, ext, config.boundary, cur));
      ++next_snap;
    }
  };
  take_snapshots();
  for (double b : breaks) {
    if (b <= cur) continue;
    const auto ix = static_cast<Eigen::Index>(box.index(x_path.position_at(cur)));
    pot[ix] = gamma;
    out.steps += stepper.advance(ext, pot, b - cur, ix, &integral);
    pot[ix] = 0.0;
    cur = b;
    take_snapshots();
  }
  out.v = snapshot(box, ext, config.boundary, t);
  CompensatedSum sigma;
  for (Eigen::Index i = 0; i < ext.size() - 1; ++i) sigma.add(ext[i] - 1.0);
  out.sigma = sigma.value();
  out.integral = integral;
  out.residual = out.sigma + gamma * integral;
  return out;
}

std::vector<LatticeField<double>> solve_pam(const TrapField& field, const JumpKernel& walker, double gamma,
                                            const IntegratorConfig& config, const std::vector<double>& output_times,
                                            bool time_reversed) {
  check_config(config);
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("PAM needs a finite killing rate");
  const auto& spec = field.spec();
  if (spec.torus_period) throw std::invalid_argument("PAM integration on torus fields is not supported");
  if (walker.dim() != spec.dim) throw std::invalid_argument("walker kernel dimension differs from field");
  const int radius = config.box_radius > 0 ? config.box_radius : spec.walker_reach;
  if (radius > spec.walker_reach) {
    throw std::out_of_range("PAM box radius " + std::to_string(radius) + " exceeds the field's certified reach " +
                            std::to_string(spec.walker_reach));
  }
  const auto outs = sorted_times(output_times, spec.horizon);
  if (time_reversed && outs.size() != 1) throw std::invalid_argument("time reversal needs exactly one output time");
  const double reverse_at = time_reversed ? outs.front() : 0.0;

  const Box box{spec.dim, radius};
  const LatticeGenerator gen(walker, box, config.boundary);
  LinearStepper stepper(gen, config);

  struct Event {
    double time;
    int from;
    int to;
  };
  std::vector<Event> events;
  Eigen::ArrayXd xi = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(box.volume()));
  auto slot = [&](const Eigen::Ref<const Eigen::VectorXi>& x) { return box.contains(x) ? static_cast<int>(box.index(x)) : -1; };
  const auto& traps = field.trajectories();
  for (std::size_t j = 0; j < traps.size(); ++j) {
    if ((field.upper(j).array() < -radius).any() || (field.lower(j).array() > radius).any()) continue;
    const auto& y = traps[j];
    const auto& pos = y.positions();
    const auto times = y.jump_times();
    if (!time_reversed) {
      if (const int s = slot(pos.col(0)); s >= 0) xi[s] += 1.0;
      for (std::size_t i = 0; i < times.size(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        const int a = slot(pos.col(c));
        const int b = slot(pos.col(c + 1));
        if (a >= 0 || b >= 0) events.push_back({times[i], a, b});
      }
    } else {
      const auto last = static_cast<Eigen::Index>(y.segment_at(reverse_at));
      if (const int s = slot(pos.col(last)); s >= 0) xi[s] += 1.0;
      for (Eigen::Index c = last - 1; c >= 0; --c) {
        const int a = slot(pos.col(c + 1));
        const int b = slot(pos.col(c));
        if (a >= 0 || b >= 0) events.push_back({reverse_at - times[static_cast<std::size_t>(c)], a, b});
      }
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });

  std::vector<LatticeField<double>> result;
  Eigen::ArrayXd ext = initial_state(box, gen.ghost_value<double>());
  std::size_t next_event = 0;
  double cur = 0.0;
  for (double target : outs) {
    while (true) {
      while (next_event < events.size() && events[next_event].time <= cur) {
        const auto& e = events[next_event++];
        if (e.from >= 0) xi[e.from] -= 1.0;
        if (e.to >= 0) xi[e.to] += 1.0;
      }
      if (cur >= target) break;
      const double next = next_event < events.size() ? std::min(events[next_event].time, target) : target;
      stepper.advance(ext, gamma * xi, next - cur);
      cur = next;
    }
    result.push_back(snapshot(box, ext, config.boundary, target));
  }
  return result;
}

std::vector<LatticeField<double>> solve_pam(const StaticPotential& potential, const JumpKernel& walker, double gamma,
                                            const IntegratorConfig& config, const std::vector<double>& output_times) {
  check_config(config);
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("PAM needs a finite killing rate");
  if (!potential.values.isFinite().all()) {
    throw std::domain_error("potential unbounded in the box (hard traps need the range representation)");
  }
  const auto outs = sorted_times(output_times, std::numeric_limits<double>::max());
  const LatticeGenerator gen(walker, potential.box, config.boundary);
  LinearStepper stepper(gen, config);
  const Eigen::ArrayXd pot = gamma * potential.values;
  Eigen::ArrayXd ext = initial_state(potential.box, gen.ghost_value<double>());
  std::vector<LatticeField<double>> result;
  double cur = 0.0;
  for (double target : outs) {
    stepper.advance(ext, pot, target - cur);
    cur = target;
    result.push_back(snapshot(potential.box, ext, config.boundary, target));
  }
  return result;
}

SurvivalEstimate annealed_pam_average(const ModelParams& params, double t, long n_fields,
                                      const IntegratorConfig& config, std::uint64_t seed,
                                      const ExecutionOptions& exec) {
  const auto start = std::chrono::steady_clock::now();
  params.validate();
  if (params.gamma.is_infinite()) throw std::invalid_argument("PAM route needs a finite killing rate");
  if (n_fields <= 0) throw std::invalid_argument("need at least one field");
  const auto walker = params.walker_kernel();
  const auto trap = params.trap_kernel();
  if (!trap->is_symmetric()) throw std::invalid_argument("PAM average requires a symmetric trap kernel");
  const int reach = config.box_radius > 0 ? config.box_radius : escape_radius(*walker, t, config.box_tolerance);
  const FieldSampler sampler(TrapFieldSpec::certified(params.dim, params.nu, trap, t, reach, config.box_tolerance));
  const double gamma = params.gamma.value();
  IntegratorConfig cfg = config;
  cfg.box_radius = reach;
  const RandomStream root(seed, static_cast<std::uint64_t>(Estimator::pam));
  const auto values = parallel_map<double>(static_cast<std::size_t>(n_fields), exec, [&](std::size_t i) {
    auto rng = root.substream(i);
    const auto field = sampler(rng);
    return solve_pam(field, *walker, gamma, cfg, {t}).front().at(origin(params.dim));
  });
  SurvivalEstimate est;
  est.estimator = Estimator::pam;
  est.params = params;
  est.t = t;
  est.seed = seed;
  const auto acc = accumulate(values);
  est.set_from(acc);
  est.between_variance = acc.variance();
  est.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return est;
}

void write_csv(const LatticeField<double>& field, std::ostream& out) {
  for (int i = 0; i < field.box.dim; ++i) out << 'x' << (i + 1) << ',';
  out << "value\n";
  out.precision(17);
  for (std::size_t k = 0; k < field.box.volume(); ++k) {
    const Site s = field.box.site(k);
    for (int i = 0; i < field.box.dim; ++i) out << s[i] << ',';
    out << field.values[static_cast<Eigen::Index>(k)] << '\n';
  }
}

}  // namespace trapping
