#pragma once

#include <vector>

#include "trapping/kernel.hpp"
#include "trapping/random.hpp"
#include "trapping/walk.hpp"

namespace trapping {

/// Sites lo, ..., lo + width - 1 of Z.
struct Window {
  int lo = 0;
  int width = 1;
  int hi() const { return lo + width - 1; }
};

/// Decay rate of the probability that a rate-`rate` simple walk stays in a
/// window of `width` sites.
double window_eigenvalue(int width, double rate);

/// Simple walk on Z conditioned to stay in `w` forever (ground-state
/// transform of the walk killed on leaving w). Starts at 0, which must lie
/// in w.
WalkPath sample_confined_path(const KernelPtr& walker, const Window& w, double t, RandomStream& rng);

/// Mixture proposal over confined walks and the free walk, for importance
/// sampling of path functionals that favour small ranges. Windows of each
/// width are placed uniformly among those containing 0.
class ConfinedMixture {
 public:
  ConfinedMixture(KernelPtr walker, double t, std::vector<int> widths, std::vector<double> width_weights,
                  double free_weight);

  /// widths: `count` values spread geometrically over [min_width, max_width],
  /// equally weighted.
  static ConfinedMixture geometric(KernelPtr walker, double t, int min_width, int max_width, int count,
                                   double free_weight);

  WalkPath sample(RandomStream& rng) const;

  /// log of the proposal density relative to the free walk law on [0, t].
  double log_density_ratio(const WalkPath& x) const;

  const std::vector<int>& widths() const { return widths_; }
  const std::vector<double>& width_weights() const { return weights_; }
  double free_weight() const { return free_weight_; }

 private:
  KernelPtr walker_;
  double t_;
  std::vector<int> widths_;
  std::vector<double> weights_;
  double free_weight_;
  std::vector<double> cumulative_;
};

}  // namespace trapping
