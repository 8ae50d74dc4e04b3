#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trapping/kernel.hpp"
#include "trapping/killing.hpp"
#include "trapping/stats.hpp"

namespace trapping {

enum class Estimator { direct, range, softrange, pde, pam, pascal_ref, quenched, quenched_pde, importance };

std::string to_string(Estimator e);

/// Model point: dimension, killing rate, walker rate kappa, trap rate rho
/// and trap density nu. Jump shapes default to the simple symmetric kernel;
/// their own rates are ignored.
struct ModelParams {
  int dim = 1;
  KillingRate gamma{1.0};
  double kappa = 1.0;
  double rho = 1.0;
  double nu = 1.0;
  KernelPtr walker_shape;
  KernelPtr trap_shape;

  KernelPtr walker_kernel() const;
  KernelPtr trap_kernel() const;
  void validate() const;
};

struct SurvivalEstimate {
  Estimator estimator = Estimator::direct;
  ModelParams params;
  double t = 0.0;
  double value = 1.0;
  double log_value = 0.0;
  double std_error = 0.0;
  /// Delta-method error of log_value.
  double log_std_error = 0.0;
  long n = 0;
  std::uint64_t seed = 0;
  /// Second-order upward bias from exponentiating an inner mean.
  double jensen_correction = 0.0;
  double between_variance = 0.0;
  double within_variance = 0.0;
  double wall_time = 0.0;

  /// Fills value, errors and n from plain samples.
  void set_from(const Accumulator& acc);

  /// Fills value and errors from log-samples, i.e. the mean of exp(logs),
  /// without leaving the log domain.
  void set_from_logs(const std::vector<double>& logs);
};

/// log(mean(exp(x))) and the relative standard error of that mean.
struct LogMean {
  double log_mean = 0.0;
  double relative_error = 0.0;
};
LogMean log_mean_exp(const std::vector<double>& logs);

}  // namespace trapping
