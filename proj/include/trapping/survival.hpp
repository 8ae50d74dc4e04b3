#pragma once

#include <cstdint>
#include <vector>

#include "trapping/estimate.hpp"
#include "trapping/pam.hpp"
#include "trapping/stats.hpp"
#include "trapping/trapfield.hpp"
#include "trapping/walk.hpp"

namespace trapping {

/// Monte Carlo budget of the nested estimators.
struct Budget {
  long outer = 1000;
  long inner = 100;
};

/// Z^xi_t: mean of exp(-gamma \int xi(s, X_s) ds) over walks in a fixed
/// field. The field must certify the walker region for horizon t.
SurvivalEstimate quenched_survival(const TrapField& field, const KillingRate& gamma, const KernelPtr& walker, double t,
                                   long n_walks, std::uint64_t seed, const ExecutionOptions& exec = {});

/// Z^xi_t from the PAM solved with the time-reversed field (no walker MC).
/// The box edge is solved both absorbing and survived, which brackets the
/// walks that leave it: value is the absorbing solution and std_error,
/// log_std_error the width of the bracket.
SurvivalEstimate quenched_survival_pde(const TrapField& field, const KillingRate& gamma, const KernelPtr& walker,
                                       double t, const IntegratorConfig& config);

/// Z^xi_t for walkers started at (k, 0, ..., 0), |k| <= margin, from one
/// time-reversed PAM solve per boundary rule: absorbing box edge (lower)
/// and surviving box edge (upper).
struct QuenchedProfile {
  int margin = 0;
  std::vector<double> lower;
  std::vector<double> upper;
};
QuenchedProfile quenched_profile_pde(const TrapField& field, const KillingRate& gamma, const KernelPtr& walker,
                                     double t, const IntegratorConfig& config, int margin);

/// Escape probability allowed per walk when certifying windows.
double walker_escape_tolerance(long walks);

/// Field spec certified for `walks` walks of the model up to time t.
TrapFieldSpec certified_field_spec(const ModelParams& params, double t, long walks);

/// Nested MC: budget.outer fields, budget.inner walks per field.
SurvivalEstimate annealed_direct(const ModelParams& params, double t, const Budget& budget, std::uint64_t seed,
                                 const ExecutionOptions& exec = {});

/// |Range(Y - X)| for gamma = inf, the expected soft range
/// sum_x (1 - exp(-gamma L^{Y-X}_t(x))) otherwise.
double inner_functional(const WalkPath& y, const WalkPath& x, const KillingRate& gamma,
                        std::vector<double>& scratch);

/// Values of inner_functional for each y against x.
std::vector<double> inner_values(const std::vector<WalkPath>& ys, const WalkPath& x, const KillingRate& gamma);

/// n trap paths from 0, path j drawn from root.substream(j).
std::vector<WalkPath> sample_trap_paths(const ModelParams& params, double t, long n, const RandomStream& root);

/// E^X[exp(-nu E^Y[inner])] with budget.outer walker paths and budget.inner
/// trap paths per walker. Trap paths are drawn afresh for every walker
/// unless `common_y`, in which case one set is shared by all walkers.
SurvivalEstimate annealed_range(const ModelParams& params, double t, const Budget& budget, std::uint64_t seed,
                                const ExecutionOptions& exec = {}, bool common_y = false);
SurvivalEstimate annealed_softrange(const ModelParams& params, double t, const Budget& budget, std::uint64_t seed,
                                    const ExecutionOptions& exec = {}, bool common_y = false);

/// E^X[exp(-nu gamma \int_0^t v_X(s, X(s)) ds)] with one v_X solve per walker.
SurvivalEstimate annealed_pde(const ModelParams& params, double t, long n_x, const IntegratorConfig& config,
                              std::uint64_t seed, const ExecutionOptions& exec = {});

/// Z^{X = 0}: exp(-nu E^Y[inner]) with X at rest. log_value is exact in the
/// inner mean; value carries the plug-in bias of exponentiating it.
SurvivalEstimate pascal_reference(const ModelParams& params, double t, long n_y, std::uint64_t seed,
                                  const ExecutionOptions& exec = {});

}  // namespace trapping
