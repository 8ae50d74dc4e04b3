#include "trapping/trapfield.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace trapping {

std::size_t Box::volume() const {
  std::size_t v = 1;
  for (int i = 0; i < dim; ++i) v *= static_cast<std::size_t>(side());
  return v;
}

std::size_t Box::index(const Eigen::Ref<const Eigen::VectorXi>& x) const {
  if (!contains(x)) throw std::out_of_range("site outside box");
  std::size_t idx = 0;
  for (int i = 0; i < dim; ++i) idx = idx * static_cast<std::size_t>(side()) + static_cast<std::size_t>(x[i] + radius);
  return idx;
}

Site Box::site(std::size_t index) const {
  Site s(dim);
  for (int i = dim - 1; i >= 0; --i) {
    s[i] = static_cast<int>(index % static_cast<std::size_t>(side())) - radius;
    index /= static_cast<std::size_t>(side());
  }
  return s;
}

namespace {

const std::vector<double>& lambda_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (double l = 1e-3; l < 40.0; l *= 1.05) g.push_back(l);
    return g;
  }();
  return grid;
}

}  // namespace

double displacement_tail_bound(const JumpKernel& kernel, double horizon, int k) {
  if (k <= 0) return 1.0;
  const double rt = kernel.rate() * horizon;
  if (rt == 0.0) return 0.0;
  double worst = 0.0;
  for (int axis = 0; axis < kernel.dim(); ++axis) {
    for (int sign : {1, -1}) {
      double best = 0.0;
      for (double l : lambda_grid()) {
        // E exp(l * Z_t) = exp(rt (M(l) - 1)) and exp(l Z_s) is a submartingale
        const double log_bound = -l * k + rt * std::expm1(kernel.log_mgf(axis, sign * l));
        best = std::min(best, log_bound);
      }
      worst = std::max(worst, std::exp(best));
    }
  }
  return std::min(worst, 1.0);
}

double intruder_bound(int dim, const JumpKernel& trap_kernel, double density, double horizon, int walker_reach,
                      int radius) {
  if (trap_kernel.rate() == 0.0 || horizon == 0.0) return radius >= walker_reach ? 0.0 : density;
  double total = 0.0;
  for (int r = radius + 1;; ++r) {
    const double shell = std::pow(2.0 * r + 1.0, dim) - std::pow(2.0 * r - 1.0, dim);
    const double term = density * shell * displacement_tail_bound(trap_kernel, horizon, r - walker_reach);
    total += term;
    // terms decay faster than geometrically once past the diffusive scale
    if (r > radius + 8 && term < 1e-18 * std::max(total, 1e-300)) break;
    if (term == 0.0 && r > walker_reach) break;
    if (r > radius + 100000) throw std::runtime_error("intruder bound did not converge");
  }
  return total;
}

int truncation_radius(int dim, const JumpKernel& trap_kernel, double density, double horizon, int walker_reach,
                      double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (walker_reach < 0) throw std::invalid_argument("walker reach must be >= 0");
  if (trap_kernel.rate() == 0.0 || horizon == 0.0 || density == 0.0) return walker_reach;
  int lo = walker_reach;
  if (intruder_bound(dim, trap_kernel, density, horizon, walker_reach, lo) < epsilon) return lo;
  int hi = std::max(1, walker_reach);
  while (intruder_bound(dim, trap_kernel, density, horizon, walker_reach, hi) >= epsilon) hi *= 2;
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (intruder_bound(dim, trap_kernel, density, horizon, walker_reach, mid) < epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

int escape_radius(const JumpKernel& kernel, double horizon, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (kernel.rate() == 0.0 || horizon == 0.0) return 0;
  const double faces = 2.0 * kernel.dim();
  int r = 0;
  while (faces * displacement_tail_bound(kernel, horizon, r + 1) > epsilon) ++r;
  return r;
}

TrapFieldSpec TrapFieldSpec::certified(int dim, double density, KernelPtr trap_kernel, double horizon,
                                       int walker_reach, double epsilon) {
  TrapFieldSpec spec;
  spec.dim = dim;
  spec.density = density;
  spec.horizon = horizon;
  spec.walker_reach = walker_reach;
  spec.epsilon = epsilon;
  spec.window_radius = truncation_radius(dim, *trap_kernel, density, horizon, walker_reach, epsilon);
  spec.trap_kernel = std::move(trap_kernel);
  return spec;
}

void TrapFieldSpec::validate() const {
  if (!trap_kernel) throw std::invalid_argument("trap field needs a trap kernel");
  if (trap_kernel->dim() != dim) throw std::invalid_argument("trap kernel dimension differs from field dimension");
  if (!(density >= 0.0) || !std::isfinite(density)) throw std::invalid_argument("trap density must be finite and >= 0");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be finite and >= 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (torus_period) {
    if (*torus_period < 1) throw std::invalid_argument("torus period must be positive");
    return;
  }
  if (walker_reach < 0) throw std::invalid_argument("walker reach must be >= 0");
  const int needed = truncation_radius(dim, *trap_kernel, density, horizon, walker_reach, epsilon);
  if (window_radius < needed) {
    throw std::invalid_argument("window radius " + std::to_string(window_radius) + " below certified radius " +
                                std::to_string(needed));
  }
}

namespace {

Site reduce(Site x, int period) {
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = ((x[i] % period) + period) % period;
  return x;
}

bool in_window(const TrapFieldSpec& spec, const Site& x) {
  if (spec.torus_period) return true;
  return max_norm(x) <= spec.window_radius;
}

}  // namespace

TrapField TrapField::from_trajectories(TrapFieldSpec spec, std::vector<WalkPath> trajectories) {
  spec.validate();
  return build(std::move(spec), std::move(trajectories));
}

TrapField TrapField::build(TrapFieldSpec spec, std::vector<WalkPath> trajectories) {
  TrapField f;
  std::map<Site, int, SiteLess> counts;
  for (const auto& y : trajectories) {
    if (y.dim() != spec.dim) throw std::invalid_argument("trajectory dimension differs from field");
    if (y.horizon() != spec.horizon) throw std::invalid_argument("trajectory horizon differs from field horizon");
    Site o = y.origin();
    if (spec.torus_period) {
      o = reduce(o, *spec.torus_period);
    } else if (!in_window(spec, o)) {
      throw std::invalid_argument("trajectory starts outside the window");
    }
    ++counts[o];
    f.lower_.emplace_back(y.positions().rowwise().minCoeff());
    f.upper_.emplace_back(y.positions().rowwise().maxCoeff());
  }
  f.counts_.assign(counts.begin(), counts.end());
  f.spec_ = std::move(spec);
  f.trajectories_ = std::move(trajectories);
  return f;
}

int TrapField::occupation(double s, const Site& x) const {
  if (!(s >= 0.0) || s > spec_.horizon) throw std::out_of_range("occupation time outside [0, horizon]");
  if (!in_window(spec_, x)) throw std::out_of_range("occupation queried outside the trap window");
  int n = 0;
  if (spec_.torus_period) {
    const Site target = reduce(x, *spec_.torus_period);
    for (const auto& y : trajectories_) n += reduce(y.position_at(s), *spec_.torus_period) == target;
    return n;
  }
  for (std::size_t j = 0; j < trajectories_.size(); ++j) {
    if ((x.array() < lower_[j].array()).any() || (x.array() > upper_[j].array()).any()) continue;
    n += trajectories_[j].position_at(s) == x;
  }
  return n;
}

FieldSampler::FieldSampler(TrapFieldSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  sites_ = spec_.torus_period ? static_cast<std::size_t>(std::pow(*spec_.torus_period, spec_.dim))
                              : Box{spec_.dim, spec_.window_radius}.volume();
}

TrapField FieldSampler::operator()(RandomStream& rng) const {
  std::vector<WalkPath> traps;
  if (spec_.density > 0.0) {
    std::poisson_distribution<long> total(spec_.density * static_cast<double>(sites_));
    const long n = total(rng);
    std::vector<std::size_t> where(static_cast<std::size_t>(n));
    for (auto& k : where) k = static_cast<std::size_t>(rng.below(sites_));
    std::sort(where.begin(), where.end());
    traps.reserve(where.size());
    const Box box{spec_.dim, spec_.window_radius};
    for (std::size_t k : where) {
      Site x(spec_.dim);
      if (spec_.torus_period) {
        std::size_t rest = k;
        for (int i = spec_.dim - 1; i >= 0; --i) {
          x[i] = static_cast<int>(rest % static_cast<std::size_t>(*spec_.torus_period));
          rest /= static_cast<std::size_t>(*spec_.torus_period);
        }
      } else {
        x = box.site(k);
      }
      traps.push_back(sample_path(spec_.trap_kernel, x, spec_.horizon, rng));
    }
  }
  return TrapField::build(spec_, std::move(traps));
}

TrapField sample_field(const TrapFieldSpec& spec, RandomStream& rng) { return FieldSampler(spec)(rng); }

Interaction interaction_integral(const TrapField& field, const WalkPath& x_path, double from, double to) {
  const auto& spec = field.spec();
  if (to < 0.0) to = spec.horizon;
  if (x_path.dim() != spec.dim) throw std::invalid_argument("path dimension differs from field");
  if (to > spec.horizon || to > x_path.horizon()) throw std::invalid_argument("integration beyond horizon");
  if (!(from >= 0.0 && from <= to)) throw std::invalid_argument("need 0 <= from <= to");
  std::optional<int> period = spec.torus_period;
  Site lo;
  Site hi;
  if (!period) {
    const WalkPath& x = x_path;
    const int reach = sup_norm(to < x.horizon() ? x.restricted(to) : x);
    if (reach > spec.walker_reach) {
      throw std::out_of_range("walker path reaches distance " + std::to_string(reach) +
                              " beyond the certified reach " + std::to_string(spec.walker_reach));
    }
    lo = x.positions().rowwise().minCoeff();
    hi = x.positions().rowwise().maxCoeff();
  }
  CompensatedSum sum;
  const auto& traps = field.trajectories();
  for (std::size_t j = 0; j < traps.size(); ++j) {
    if (!period) {
      if ((field.upper(j).array() < lo.array()).any() || (field.lower(j).array() > hi.array()).any()) continue;
    }
    sum.add(collision_time(traps[j], x_path, from, to, period));
  }
  const double v = sum.value();
  return {v, v > 0.0};
}

// ---------------------------------------------------------------------------

namespace {

struct GeneralSampler {
  std::function<double(double)> quantile;
};

GeneralSampler parse_sampler(const std::string& id) {
  std::vector<std::string> parts;
  std::stringstream in(id);
  for (std::string p; std::getline(in, p, ':');) parts.push_back(p);
  auto number = [&](std::size_t i) {
    std::size_t used = 0;
    const double v = std::stod(parts.at(i), &used);
    if (used != parts[i].size()) throw std::invalid_argument("bad number in sampler id '" + id + "'");
    return v;
  };
  try {
    if (parts.size() == 2 && parts[0] == "exponential") {
      const double mean = number(1);
      if (!(mean > 0.0)) throw std::invalid_argument("exponential mean must be > 0");
      return {[mean](double u) { return -mean * std::log1p(-u); }};
    }
    if (parts.size() == 3 && parts[0] == "uniform") {
      const double a = number(1);
      const double b = number(2);
      if (!(a >= 0.0 && b > a)) throw std::invalid_argument("uniform sampler needs 0 <= A < B");
      return {[a, b](double u) { return a + (b - a) * u; }};
    }
  } catch (const std::out_of_range&) {
  }
  throw std::invalid_argument("unknown sampler id '" + id + "' (expected exponential:MEAN or uniform:A:B)");
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace

void StaticPotentialSpec::validate() const {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension out of range");
  if (radius < 0) throw std::invalid_argument("radius must be >= 0");
  switch (kind) {
    case StaticKind::bernoulli:
      if (!(parameter >= 0.0 && parameter <= 1.0)) throw std::invalid_argument("bernoulli p must lie in [0, 1]");
      break;
    case StaticKind::iid_poisson:
      if (!(parameter >= 0.0) || !std::isfinite(parameter)) throw std::invalid_argument("poisson mean must be >= 0");
      break;
    case StaticKind::iid_general:
      parse_sampler(sampler);
      break;
  }
}

StaticPotential sample_static_potential(const StaticPotentialSpec& spec, RandomStream& rng) {
  spec.validate();
  StaticPotential pot{Box{spec.dim, spec.radius}, {}};
  const auto n = static_cast<Eigen::Index>(pot.box.volume());
  pot.values.resize(n);
  switch (spec.kind) {
    case StaticKind::bernoulli:
      for (Eigen::Index i = 0; i < n; ++i) {
        pot.values[i] = rng.uniform() < spec.parameter ? 0.0 : std::numeric_limits<double>::infinity();
      }
      break;
    case StaticKind::iid_poisson: {
      std::poisson_distribution<int> count(std::max(spec.parameter, 1e-300));
      for (Eigen::Index i = 0; i < n; ++i) pot.values[i] = spec.parameter > 0.0 ? count(rng) : 0;
      break;
    }
    case StaticKind::iid_general: {
      const auto s = parse_sampler(spec.sampler);
      for (Eigen::Index i = 0; i < n; ++i) pot.values[i] = s.quantile(rng.uniform());
      break;
    }
  }
  return pot;
}

double h_functional(const StaticPotentialSpec& spec, double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("H is defined for s >= 0");
  if (s == 0.0) return 0.0;
  switch (spec.kind) {
    case StaticKind::bernoulli:
      return std::log(spec.parameter);
    case StaticKind::iid_poisson:
      return spec.parameter * std::expm1(-s);
    case StaticKind::iid_general: {
      const auto sampler = parse_sampler(spec.sampler);
      const std::function<double(double)> f = [&](double u) {
        return u >= 1.0 ? 0.0 : std::exp(-s * sampler.quantile(u));
      };
      const double fa = f(0.0);
      const double fm = f(0.5);
      const double fb = f(1.0);
      const double whole = (fa + 4.0 * fm + fb) / 6.0;
      return std::log(adaptive_simpson(f, 0.0, 1.0, fa, fm, fb, whole, 1e-13, 40));
    }
  }
  return 0.0;
}

}  // namespace trapping
