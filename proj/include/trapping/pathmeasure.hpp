#pragma once

#include <cstdint>
#include <vector>

#include "trapping/estimate.hpp"
#include "trapping/stats.hpp"
#include "trapping/walk.hpp"

namespace trapping {

struct WeightedPathSample {
  WalkPath path;
  /// log Z^X_t up to a constant common to the ensemble, plus the proposal
  /// correction when the path was not drawn from the free walk.
  double log_weight = 0.0;
  /// Standard error of the inner mean behind log_weight.
  double inner_se = 0.0;
};

enum class GibbsProposal { free_walk, confined };

struct GibbsOptions {
  GibbsProposal proposal = GibbsProposal::free_walk;
  /// Confined proposal: widths spread over [min_width, max_width], 0 picks
  /// t^{1/3} / 2 and 4 sqrt(kappa t).
  int min_width = 0;
  int max_width = 0;
  int width_count = 16;
  double free_weight = 0.1;
  /// Throw when the effective sample size falls below this.
  double min_effective_size = 10.0;
};

struct GibbsEnsemble {
  double t = 0.0;
  std::vector<WeightedPathSample> samples;
  double effective_size = 0.0;
};

/// n walker paths with weights exp(-nu E^Y[inner(Y - X)]); one set of n_y
/// trap paths is shared by all walkers.
GibbsEnsemble sample_gibbs_ensemble(const ModelParams& params, double t, long n, long n_y, std::uint64_t seed,
                                    const GibbsOptions& options = {}, const ExecutionOptions& exec = {});

/// Self-normalised weights, summing to 1.
std::vector<double> normalized_weights(const std::vector<double>& log_weights);
std::vector<double> normalized_weights(const GibbsEnsemble& ensemble);

/// (sum w)^2 / sum w^2.
double effective_sample_size(const std::vector<double>& log_weights);

/// Weighted quantile of `values` (type-1, inverse of the weighted CDF).
double weighted_quantile(const std::vector<double>& values, const std::vector<double>& weights, double q);

struct FluctuationReport {
  double t = 0.0;
  long n = 0;
  double effective_size = 0.0;
  std::vector<double> levels{0.1, 0.25, 0.5, 0.75, 0.9};
  /// Weighted quantiles of sup_{s <= t} |X(s)| at `levels`.
  std::vector<double> quantiles;
  double median = 0.0;
  double alpha = 0.0;
  double epsilon = 0.0;
  /// P(alpha t^{1/3} < ||X||_t < t^{11/24 + epsilon}).
  double window_probability = 0.0;
  /// P(||X||_t <= alpha t^{1/3}).
  double lower_probability = 0.0;
};

FluctuationReport fluctuation_report(const GibbsEnsemble& ensemble, double alpha, double epsilon);

struct GrowthFit {
  double exponent = 0.0;
  std::vector<double> local_exponents;
};

/// Least-squares slope of log median ||X||_t against log t.
GrowthFit growth_exponent(const std::vector<FluctuationReport>& reports);

/// sum over sites with positive local time of exp(-gamma L^{Y-X}_t(x)).
double thin_point_functional(const WalkPath& y, const WalkPath& x, double gamma);

/// Unvisited sites between the running minimum and maximum.
long hole_functional(const WalkPath& y);

}  // namespace trapping
