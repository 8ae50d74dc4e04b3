#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

#include "trapping/estimate.hpp"
#include "trapping/kernel.hpp"
#include "trapping/random.hpp"
#include "trapping/stats.hpp"
#include "trapping/trapfield.hpp"
#include "trapping/walk.hpp"

namespace trapping {

enum class Boundary { dirichlet_one, dirichlet_zero, periodic };
enum class Scheme { explicit_euler, rk4 };

struct IntegratorConfig {
  double dt = 0.01;
  Scheme scheme = Scheme::rk4;
  /// 0 picks a radius from the tail bounds.
  int box_radius = 0;
  Boundary boundary = Boundary::dirichlet_one;
  /// Target for the neglected mass beyond an automatic box.
  double box_tolerance = 1e-12;
};

/// Largest dt * (spectral radius) for which the scheme is stable on the
/// negative real axis.
double stability_limit(Scheme scheme);

/// Real-valued function on a box with a boundary rule for outside sites.
template <class Scalar = double>
struct LatticeField {
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Box box;
  Values values;
  Boundary boundary = Boundary::dirichlet_one;
  double time = 0.0;

  static LatticeField constant(const Box& box, Scalar value, Boundary boundary) {
    return {box, Values::Constant(static_cast<Eigen::Index>(box.volume()), value), boundary, 0.0};
  }

  Scalar at(const Eigen::Ref<const Eigen::VectorXi>& x) const {
    if (box.contains(x)) return values[static_cast<Eigen::Index>(box.index(x))];
    switch (boundary) {
      case Boundary::dirichlet_one: return Scalar(1);
      case Boundary::dirichlet_zero: return Scalar(0);
      case Boundary::periodic: break;
    }
    Site y = x;
    const int side = box.side();
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = ((y[i] + box.radius) % side + side) % side - box.radius;
    return values[static_cast<Eigen::Index>(box.index(y))];
  }
};

/// Generator (Lf)(x) = sum_z rate p(z) (f(x+z) - f(x)) restricted to a box.
/// Neighbours outside the box read a ghost value fixed by the boundary rule.
class LatticeGenerator {
 public:
  LatticeGenerator(const JumpKernel& kernel, const Box& box, Boundary boundary);

  const Box& box() const { return box_; }
  Boundary boundary() const { return boundary_; }
  double rate() const { return rate_; }

  /// out = L f. `f` has box.volume() entries.
  template <class Scalar>
  void apply(const Eigen::Array<Scalar, Eigen::Dynamic, 1>& f, Eigen::Array<Scalar, Eigen::Dynamic, 1>& out) const {
    const Eigen::Index n = f.size();
    Eigen::Array<Scalar, Eigen::Dynamic, 1> ext(n + 1);
    ext.head(n) = f;
    ext[n] = ghost_value<Scalar>();
    apply_extended(ext, out);
  }

  /// Same, for `ext` holding the box values followed by the ghost value.
  template <class Scalar>
  void apply_extended(const Eigen::Array<Scalar, Eigen::Dynamic, 1>& ext,
                      Eigen::Array<Scalar, Eigen::Dynamic, 1>& out) const {
    const Eigen::Index n = ext.size() - 1;
    out.setZero(n);
    for (std::size_t j = 0; j < neighbours_.size(); ++j) out += Scalar(weights_[j]) * (ext(neighbours_[j]) - ext.head(n));
  }

  template <class Scalar>
  Scalar ghost_value() const {
    return boundary_ == Boundary::dirichlet_one ? Scalar(1) : Scalar(0);
  }

 private:
  Box box_;
  Boundary boundary_;
  double rate_;
  std::vector<Eigen::ArrayXi> neighbours_;
  std::vector<double> weights_;
};

/// Box radius for v_X: the walker's extent plus the trap-motion margin.
int v_x_box_radius(const WalkPath& x_path, const JumpKernel& trap_kernel, double tolerance);

struct VxSolution {
  LatticeField<double> v;
  std::vector<LatticeField<double>> snapshots;
  /// Sigma_X(t) = sum_y (v(t, y) - 1).
  double sigma = 0.0;
  /// \int_0^t v(s, X(s)) ds, integrated alongside v.
  double integral = 0.0;
  /// sigma + gamma * integral; zero for the exact flow on Z^d.
  double residual = 0.0;
  std::size_t steps = 0;
};

/// Integrates dv/dt = L~ v - gamma delta_{X(t)} v, v(0) = 1, with L~ the
/// generator of the reversed trap walk. Steps are aligned with the jumps of
/// X. The trap kernel must be symmetric.
VxSolution solve_v_x(const WalkPath& x_path, double gamma, const JumpKernel& trap_kernel,
                     const IntegratorConfig& config, const std::vector<double>& snapshot_times = {});

/// du/dt = L_X u - gamma xi(t, .) u, u(0) = 1, on a box inside the field's
/// certified walker region. With `time_reversed`, xi(T - s, .) is used where
/// T is the single output time, so u(T, 0) equals the quenched survival
/// probability of the field.
std::vector<LatticeField<double>> solve_pam(const TrapField& field, const JumpKernel& walker, double gamma,
                                            const IntegratorConfig& config, const std::vector<double>& output_times,
                                            bool time_reversed = false);

/// Static potential version; the box is the potential's box.
std::vector<LatticeField<double>> solve_pam(const StaticPotential& potential, const JumpKernel& walker, double gamma,
                                            const IntegratorConfig& config, const std::vector<double>& output_times);

/// Mean of u(t, 0) over independent fields.
SurvivalEstimate annealed_pam_average(const ModelParams& params, double t, long n_fields,
                                      const IntegratorConfig& config, std::uint64_t seed,
                                      const ExecutionOptions& exec = {});

/// "x1,...,xd,value" rows.
void write_csv(const LatticeField<double>& field, std::ostream& out);

}  // namespace trapping
