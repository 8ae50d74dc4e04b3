#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "trapping/estimate.hpp"
#include "trapping/kernel.hpp"
#include "trapping/pam.hpp"
#include "trapping/stats.hpp"

namespace trapping {

/// Shapes of -log Z_t: c t, c sqrt(t), c t / ln t, c t^e with e free.
enum class RateModel { exponential, sqrt_t, t_over_log_t, power };

std::string to_string(RateModel m);
RateModel parse_rate_model(const std::string& name);

/// t -> basis(t) of the one-parameter models.
double rate_basis(RateModel m, double t);

/// (t, -log Z_t) with the standard error of -log Z_t.
struct RatePoint {
  double t = 0.0;
  double minus_log = 0.0;
  double error = 0.0;
};

/// Throws domain_error when the estimate is too noisy to fit (relative
/// error above 50%) or exceeds 1.
RatePoint rate_point(const SurvivalEstimate& est);

struct RateFit {
  RateModel model = RateModel::exponential;
  double coefficient = 0.0;
  double coefficient_error = 0.0;
  double exponent = 1.0;
  double exponent_error = 0.0;
  /// RMS of the unweighted residuals, in the fitted scale (log scale for
  /// the power model).
  double residual_rms = 0.0;
  bool weighted = false;
  std::vector<double> ts;
  std::vector<double> minus_logs;
  /// minus_log / basis(t) per point (one-parameter models).
  std::vector<double> ratios;
  /// Slopes of log(-log Z) between consecutive grid points.
  std::vector<double> local_exponents;
};

/// Inverse-variance weighted least squares; unit weights when any point
/// has zero error. Needs >= 3 points with increasing t.
RateFit fit_rate(const std::vector<RatePoint>& points, RateModel model);
RateFit fit_rate(const std::vector<SurvivalEstimate>& estimates, RateModel model);

/// Sign of the trend of `values` toward `target`: true when |v - target|
/// is nonincreasing along the sequence.
bool approaches(const std::vector<double>& values, double target);

constexpr double kInfiniteGreen = std::numeric_limits<double>::infinity();

/// G_d(0) = \int_0^\infty p_t(0) dt for the simple symmetric walk of the
/// kernel's rate; infinite for d <= 2. Quadrature error below 1e-9.
double green_function(int d, const JumpKernel& kernel);
double green_function(int d);

/// Lower bound nu gamma / (1 + gamma G / rho) on the annealed rate.
double annealed_rate_lower_bound(const ModelParams& params, double green);

/// Leading terms of -log Z_t: nu sqrt(8 rho t / pi) in d = 1 and
/// nu pi rho t / ln t in d = 2.
double annealed_law_1d(double nu, double rho, double t);
double annealed_law_2d(double nu, double rho, double t);

/// E[p^{|Range_t(X)|}] for the walker of rate kappa, i.e. hard Bernoulli
/// traps of density 1 - p. In d = 1 the walker is drawn from a mixture of
/// confined walks and the estimate is importance weighted; otherwise plain.
SurvivalEstimate bernoulli_survival(int d, double p, double kappa, double t, long n, std::uint64_t seed,
                                    const ExecutionOptions& exec = {}, bool importance = true);

struct DvCheck {
  std::vector<SurvivalEstimate> estimates;
  RateFit fit;
};

/// Survival against immobile Bernoulli traps on a t grid and the
/// free-exponent fit of -log Z_t.
DvCheck dv_exponent_check(int d, double p, const std::vector<double>& ts, long n, std::uint64_t seed,
                          const ExecutionOptions& exec = {}, bool importance = true);

struct QuenchedRate {
  std::vector<SurvivalEstimate> estimates;
  RateFit fit;
  /// gamma nu + kappa.
  double upper_bound = 0.0;
  /// fit > 0 and fit - error <= upper_bound.
  bool within_bounds = false;
  /// Walker region of the field used by the PDE route.
  int box_radius = 0;
  /// The field realization behind the estimates.
  std::shared_ptr<const TrapField> field;
};

struct QuenchedRateOptions {
  /// Walks per t; 0 solves the time-reversed PAM instead.
  long walks = 0;
  IntegratorConfig config;
  /// PDE route: the box grows by half until the log-width of the boundary
  /// bracket at the largest t is below max_bracket.
  double max_bracket = 1e-6;
  int max_enlargements = 8;
  /// PDE route: walkers start at the start_sites sites (k, 0, ..., 0) around
  /// the origin of the same field and -log Z is averaged over them, with a
  /// batch-means error over `blocks` contiguous groups. 1 uses the origin.
  int start_sites = 1;
  int blocks = 10;
};

/// One field drawn from `field_seed` at the largest t, then Z^xi_t on every
/// t of the grid and an exponential fit. PDE values enter the fit as exact.
QuenchedRate quenched_rate(const ModelParams& params, const std::vector<double>& ts, std::uint64_t field_seed,
                           const QuenchedRateOptions& options = {}, const ExecutionOptions& exec = {});

}  // namespace trapping
