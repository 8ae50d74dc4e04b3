#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "trapping/kernel.hpp"
#include "trapping/random.hpp"

namespace trapping {

/// Piecewise-constant trajectory of a continuous-time walk on Z^d.
///
/// Position i (column i of `positions()`) is held on [jump_times[i-1],
/// jump_times[i]) with jump_times[-1] = 0 and jump_times[n] = horizon, so
/// the path is right-continuous. Paths are immutable once built.
class WalkPath {
 public:
  /// Validates: strictly increasing times in (0, horizon], n+1 positions,
  /// each step in the kernel support (not enforced for composite kernels,
  /// whose tied events are merged into one step).
  WalkPath(KernelPtr kernel, double horizon, std::vector<double> jump_times, Eigen::MatrixXi positions);

  /// Path that never moves.
  static WalkPath constant(KernelPtr kernel, const Site& at, double horizon);

  /// Builds positions by accumulating `displacements` (d x n) from `origin`.
  static WalkPath from_steps(KernelPtr kernel, const Site& origin, double horizon, std::vector<double> jump_times,
                             const Eigen::MatrixXi& displacements);

  const JumpKernel& kernel() const { return *kernel_; }
  const KernelPtr& kernel_ptr() const { return kernel_; }
  int dim() const { return static_cast<int>(positions_.rows()); }
  double horizon() const { return horizon_; }
  std::size_t jump_count() const { return jump_times_.size(); }
  std::span<const double> jump_times() const { return jump_times_; }
  const Eigen::MatrixXi& positions() const { return positions_; }
  Site origin() const { return positions_.col(0); }
  Site final_position() const { return positions_.col(positions_.cols() - 1); }

  /// Start and end of the holding interval of position i.
  double segment_start(std::size_t i) const { return i == 0 ? 0.0 : jump_times_[i - 1]; }
  double segment_end(std::size_t i) const { return i < jump_times_.size() ? jump_times_[i] : horizon_; }

  /// Index of the position held at time s (right-continuous).
  std::size_t segment_at(double s) const;
  Site position_at(double s) const { return positions_.col(static_cast<Eigen::Index>(segment_at(s))); }

  /// The same path observed on [0, t], t <= horizon.
  WalkPath restricted(double t) const;

 private:
  struct Unchecked {};
  WalkPath(Unchecked, KernelPtr kernel, double horizon, std::vector<double> jump_times, Eigen::MatrixXi positions);

  friend WalkPath sample_path(KernelPtr kernel, const Site& origin, double horizon, RandomStream& rng);
  friend WalkPath difference_path(const WalkPath& a, const WalkPath& b);

  KernelPtr kernel_;
  double horizon_;
  std::vector<double> jump_times_;
  Eigen::MatrixXi positions_;
};

/// Event-driven sampling: exponential spacings at the kernel rate, i.i.d.
/// steps. For a fixed stream, paths at a shorter horizon are prefixes of
/// paths at a longer one.
WalkPath sample_path(KernelPtr kernel, const Site& origin, double horizon, RandomStream& rng);

/// Total time spent at `site`.
double local_time(const WalkPath& path, const Site& site);

/// Local time of every visited site, in lexicographic site order.
std::vector<std::pair<Site, double>> local_times(const WalkPath& path);

/// Distinct visited sites, lexicographically sorted.
std::vector<Site> range(const WalkPath& path);
std::size_t range_size(const WalkPath& path);

/// (max, min) of a one-dimensional path over [0, horizon].
std::pair<int, int> running_extrema(const WalkPath& path);

/// sup over [0, horizon] of the max-norm of the position.
int sup_norm(const WalkPath& path);

/// Pointwise difference a(s) - b(s) on the common horizon. Jumps at equal
/// times (a's applied first) are merged into one event; events that cancel
/// are dropped. The kernel is `JumpKernel::difference`, marked composite.
WalkPath difference_path(const WalkPath& a, const WalkPath& b);

/// Lebesgue measure of {s in [from, to] : a(s) == b(s)}, with coordinates
/// compared modulo `period` when given. `to` defaults to the shorter horizon.
double collision_time(const WalkPath& a, const WalkPath& b, double from = 0.0,
                      double to = std::numeric_limits<double>::infinity(), std::optional<int> period = std::nullopt);

// ---------------------------------------------------------------------------
// One-dimensional fast paths. They evaluate statistics of a - b on the fly,
// without building the difference path.

struct Extent1d {
  int min;
  int max;
  int width() const { return max - min + 1; }
};

/// Running min and max of a(s) - b(s) on [0, min(horizons)].
Extent1d difference_extent_1d(const WalkPath& a, const WalkPath& b);

/// Local times of a(s) - b(s), written densely into `out` indexed by
/// (site - returned offset). `out` is resized and overwritten.
int difference_local_times_1d(const WalkPath& a, const WalkPath& b, std::vector<double>& out);

/// Extent of the embedded jump chain of a rate-`rate` nearest-neighbour
/// walk on Z over [0, horizon]. Same law as running_extrema of a sampled
/// path, at a fraction of the cost.
Extent1d sample_extent_1d(double rate, double horizon, RandomStream& rng);

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace detail {

/// Visits the maximal intervals of [from, to] on which both paths are
/// constant: fn(start, end, index_in_a, index_in_b).
template <class Fn>
void for_each_joint_segment(const WalkPath& a, const WalkPath& b, double from, double to, Fn&& fn) {
  const auto ta = a.jump_times();
  const auto tb = b.jump_times();
  std::size_t ia = a.segment_at(from);
  std::size_t ib = b.segment_at(from);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double cur = from;
  while (cur < to) {
    const double na = ia < ta.size() ? ta[ia] : inf;
    const double nb = ib < tb.size() ? tb[ib] : inf;
    const double end = std::min({na, nb, to});
    if (end > cur) fn(cur, end, ia, ib);
    if (end >= to) break;
    if (na == end) ++ia;
    if (nb == end) ++ib;
    cur = end;
  }
}

}  // namespace detail

}  // namespace trapping
