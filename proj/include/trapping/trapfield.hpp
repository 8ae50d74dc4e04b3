#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trapping/kernel.hpp"
#include "trapping/random.hpp"
#include "trapping/walk.hpp"

namespace trapping {

/// The cube [-radius, radius]^d of Z^d, sites indexed lexicographically
/// with the first coordinate varying slowest.
struct Box {
  int dim = 1;
  int radius = 0;

  int side() const { return 2 * radius + 1; }
  std::size_t volume() const;
  bool contains(const Eigen::Ref<const Eigen::VectorXi>& x) const { return max_norm(x) <= radius; }
  std::size_t index(const Eigen::Ref<const Eigen::VectorXi>& x) const;
  Site site(std::size_t index) const;
};

/// Upper bound on P(sup_{s<=t} Z_s >= k) for a coordinate Z of the walk,
/// maximised over axes and signs (Doob plus Chernoff on a fixed lambda grid).
double displacement_tail_bound(const JumpKernel& kernel, double horizon, int k);

/// Bound on the expected number of traps started outside radius `radius`
/// that enter the ball of radius `walker_reach` before `horizon`.
double intruder_bound(int dim, const JumpKernel& trap_kernel, double density, double horizon, int walker_reach,
                      int radius);

/// Smallest R >= walker_reach with intruder_bound(R) < epsilon.
int truncation_radius(int dim, const JumpKernel& trap_kernel, double density, double horizon, int walker_reach,
                      double epsilon);

/// Smallest r with P(sup_norm of the walk over [0, horizon] > r) <= epsilon.
int escape_radius(const JumpKernel& kernel, double horizon, double epsilon);

struct TrapFieldSpec {
  int dim = 1;
  double density = 1.0;
  KernelPtr trap_kernel;
  double horizon = 0.0;
  /// Traps start in the box of this radius.
  int window_radius = 0;
  double epsilon = 1e-9;
  /// The walker must keep sup_norm <= walker_reach.
  int walker_reach = 0;
  /// When set, space is the torus (Z mod period)^d and the window is all of it.
  std::optional<int> torus_period;

  /// Fills window_radius from truncation_radius.
  static TrapFieldSpec certified(int dim, double density, KernelPtr trap_kernel, double horizon, int walker_reach,
                                 double epsilon = 1e-9);

  /// Throws unless the spec is usable.
  void validate() const;
};

class TrapField {
 public:
  /// Field made of the given trajectories, which must start inside the window.
  static TrapField from_trajectories(TrapFieldSpec spec, std::vector<WalkPath> trajectories);

  const TrapFieldSpec& spec() const { return spec_; }
  const std::vector<WalkPath>& trajectories() const { return trajectories_; }
  std::size_t trap_count() const { return trajectories_.size(); }

  /// Initial counts at occupied sites, in lexicographic order.
  const std::vector<std::pair<Site, int>>& counts_at_zero() const { return counts_; }

  /// Number of traps at x at time s. Throws outside the window.
  int occupation(double s, const Site& x) const;

  /// Bounding box of trajectory j over its horizon.
  const Site& lower(std::size_t j) const { return lower_[j]; }
  const Site& upper(std::size_t j) const { return upper_[j]; }

 private:
  friend class FieldSampler;
  static TrapField build(TrapFieldSpec spec, std::vector<WalkPath> trajectories);

  TrapFieldSpec spec_;
  std::vector<WalkPath> trajectories_;
  std::vector<std::pair<Site, int>> counts_;
  std::vector<Site> lower_;
  std::vector<Site> upper_;
};

/// Poisson(density) traps per window site, each following an independent
/// walk with the spec's trap kernel. The total count is drawn once and the
/// traps are placed uniformly, which gives i.i.d. Poisson site counts.
class FieldSampler {
 public:
  /// Validates the spec once.
  explicit FieldSampler(TrapFieldSpec spec);
  const TrapFieldSpec& spec() const { return spec_; }
  TrapField operator()(RandomStream& rng) const;

 private:
  TrapFieldSpec spec_;
  std::size_t sites_;
};

TrapField sample_field(const TrapFieldSpec& spec, RandomStream& rng);

struct Interaction {
  double integral = 0.0;
  bool hit = false;
};

/// Exact \int_from^to xi(s, X(s)) ds. `to` defaults to the field horizon.
/// Throws if the path leaves the certified walker region.
Interaction interaction_integral(const TrapField& field, const WalkPath& x_path, double from = 0.0,
                                 double to = -1.0);

// ---------------------------------------------------------------------------
// Static (time-independent) potentials.

enum class StaticKind { bernoulli, iid_poisson, iid_general };

struct StaticPotentialSpec {
  StaticKind kind = StaticKind::iid_poisson;
  int dim = 1;
  int radius = 0;
  /// Probability of a trap-free site for bernoulli, mean for iid_poisson.
  double parameter = 1.0;
  /// For iid_general: "exponential:MEAN" or "uniform:A:B".
  std::string sampler;

  void validate() const;
};

struct StaticPotential {
  Box box;
  /// Per-site values; +inf marks a hard trap.
  Eigen::ArrayXd values;

  double at(const Eigen::Ref<const Eigen::VectorXi>& x) const { return values[static_cast<Eigen::Index>(box.index(x))]; }
};

StaticPotential sample_static_potential(const StaticPotentialSpec& spec, RandomStream& rng);

/// H(s) = ln E[exp(-s xi(0))]. Closed form for bernoulli and iid_poisson;
/// quadrature over the sampler's quantile function otherwise.
double h_functional(const StaticPotentialSpec& spec, double s);

}  // namespace trapping
