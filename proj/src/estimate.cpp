#include "trapping/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace trapping {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::direct: return "direct";
    case Estimator::range: return "range";
    case Estimator::softrange: return "softrange";
    case Estimator::pde: return "pde";
    case Estimator::pam: return "pam";
    case Estimator::pascal_ref: return "pascal-ref";
    case Estimator::quenched: return "quenched";
    case Estimator::quenched_pde: return "quenched-pde";
    case Estimator::importance: return "importance";
  }
  return "unknown";
}

KernelPtr ModelParams::walker_kernel() const {
  const auto shape = walker_shape ? *walker_shape : JumpKernel::simple_symmetric(dim, 1.0);
  return make_kernel(shape.with_rate(kappa));
}

KernelPtr ModelParams::trap_kernel() const {
  const auto shape = trap_shape ? *trap_shape : JumpKernel::simple_symmetric(dim, 1.0);
  return make_kernel(shape.with_rate(rho));
}

void ModelParams::validate() const {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension out of range");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be finite and >= 0");
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw std::invalid_argument("rho must be finite and >= 0");
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw std::invalid_argument("nu must be finite and >= 0");
  if (walker_shape && walker_shape->dim() != dim) throw std::invalid_argument("walker kernel dimension mismatch");
  if (trap_shape && trap_shape->dim() != dim) throw std::invalid_argument("trap kernel dimension mismatch");
}

void SurvivalEstimate::set_from(const Accumulator& acc) {
  n = acc.count();
  value = acc.mean();
  std_error = acc.std_error();
  log_value = value > 0.0 ? std::log(value) : -std::numeric_limits<double>::infinity();
  log_std_error = value > 0.0 ? std_error / value : std::numeric_limits<double>::infinity();
}

LogMean log_mean_exp(const std::vector<double>& logs) {
  if (logs.empty()) throw std::invalid_argument("no samples");
  const double top = *std::max_element(logs.begin(), logs.end());
  if (top == -std::numeric_limits<double>::infinity()) {
    return {top, std::numeric_limits<double>::infinity()};
  }
  Accumulator acc;
  for (double l : logs) acc.add(std::exp(l - top));
  LogMean out;
  out.log_mean = top + std::log(acc.mean());
  out.relative_error = acc.std_error() / acc.mean();
  return out;
}

void SurvivalEstimate::set_from_logs(const std::vector<double>& logs) {
  const auto lm = log_mean_exp(logs);
  n = static_cast<long>(logs.size());
  log_value = lm.log_mean;
  log_std_error = lm.relative_error;
  value = std::exp(log_value);
  std_error = value * lm.relative_error;
  if (!std::isfinite(std_error)) std_error = 0.0;
}

}  // namespace trapping
