#include "trapping/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "trapping/killing.hpp"

namespace trapping {

std::string KillingRate::to_string() const {
  if (infinite_) return "inf";
  std::ostringstream out;
  out << std::setprecision(12) << value_;
  return out.str();
}

JumpKernel::JumpKernel(Eigen::MatrixXi displacements, std::vector<double> probabilities, double rate)
    : displacements_(std::move(displacements)), probabilities_(std::move(probabilities)), rate_(rate) {
  const auto k = displacements_.cols();
  if (displacements_.rows() < 1 || displacements_.rows() > kMaxDim) {
    throw std::invalid_argument("kernel dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (k == 0) throw std::invalid_argument("kernel support is empty");
  if (static_cast<std::size_t>(k) != probabilities_.size()) {
    throw std::invalid_argument("kernel support and probability lists differ in length");
  }
  if (!(rate_ >= 0.0) || !std::isfinite(rate_)) throw std::invalid_argument("kernel rate must be finite and >= 0");
  double total = 0.0;
  for (double p : probabilities_) {
    if (!(p > 0.0)) throw std::invalid_argument("kernel probabilities must be strictly positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("kernel probabilities must sum to 1");
  for (Eigen::Index j = 0; j < k; ++j) {
    if ((displacements_.col(j).array() == 0).all()) throw std::invalid_argument("kernel support contains the zero step");
    for (Eigen::Index i = 0; i < j; ++i) {
      if (displacements_.col(i) == displacements_.col(j)) {
        throw std::invalid_argument("kernel support contains a repeated step");
      }
    }
  }
  classify();
}

void JumpKernel::classify() {
  const auto k = static_cast<Eigen::Index>(probabilities_.size());
  cumulative_.resize(probabilities_.size());
  std::partial_sum(probabilities_.begin(), probabilities_.end(), cumulative_.begin());
  cumulative_.back() = 1.0;
  uniform_ = std::all_of(probabilities_.begin(), probabilities_.end(),
                         [&](double p) { return std::abs(p - probabilities_.front()) < 1e-15; });

  symmetric_ = true;
  for (Eigen::Index j = 0; j < k; ++j) {
    const int m = find(-displacements_.col(j));
    if (m < 0 || std::abs(probabilities_[m] - probabilities_[j]) > 1e-12) {
      symmetric_ = false;
      break;
    }
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim());
  for (Eigen::Index j = 0; j < k; ++j) mean += probabilities_[j] * displacements_.col(j).cast<double>();
  mean_zero_ = mean.cwiseAbs().maxCoeff() < 1e-12;
  nearest_neighbor_ = true;
  reach_ = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const int l1 = displacements_.col(j).cwiseAbs().sum();
    nearest_neighbor_ = nearest_neighbor_ && l1 == 1;
    reach_ = std::max(reach_, displacements_.col(j).cwiseAbs().maxCoeff());
  }
}

JumpKernel JumpKernel::simple_symmetric(int dim, double rate) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("dimension out of range");
  Eigen::MatrixXi steps = Eigen::MatrixXi::Zero(dim, 2 * dim);
  for (int i = 0; i < dim; ++i) {
    steps(i, 2 * i) = 1;
    steps(i, 2 * i + 1) = -1;
  }
  return JumpKernel(std::move(steps), std::vector<double>(2 * dim, 1.0 / (2 * dim)), rate);
}

JumpKernel JumpKernel::uniform_1d(const std::vector<int>& steps, double rate) {
  Eigen::MatrixXi m(1, static_cast<Eigen::Index>(steps.size()));
  for (std::size_t i = 0; i < steps.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = steps[i];
  return JumpKernel(std::move(m), std::vector<double>(steps.size(), 1.0 / static_cast<double>(steps.size())), rate);
}

JumpKernel JumpKernel::difference(const JumpKernel& a, const JumpKernel& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("difference of kernels with different dimensions");
  const double total = a.rate() + b.rate();
  // weights are only meaningful when at least one walk moves
  const double wa = total > 0.0 ? a.rate() / total : 0.5;
  const double wb = 1.0 - wa;
  std::map<std::vector<int>, double> merged;
  auto add = [&](const Eigen::MatrixXi& d, const std::vector<double>& p, double w, int sign) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      std::vector<int> key(d.rows());
      for (Eigen::Index i = 0; i < d.rows(); ++i) key[i] = sign * d(i, j);
      merged[key] += w * p[j];
    }
  };
  add(a.displacements(), a.probabilities(), wa, 1);
  add(b.displacements(), b.probabilities(), wb, -1);
  Eigen::MatrixXi steps(a.dim(), 0);
  std::vector<double> probs;
  for (const auto& [key, p] : merged) {
    if (p <= 0.0) continue;
    steps.conservativeResize(Eigen::NoChange, steps.cols() + 1);
    for (int i = 0; i < a.dim(); ++i) steps(i, steps.cols() - 1) = key[i];
    probs.push_back(p);
  }
  const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= sum;
  JumpKernel k(std::move(steps), std::move(probs), total);
  k.composite_ = true;
  return k;
}

int JumpKernel::find(const Eigen::Ref<const Eigen::VectorXi>& step) const {
  for (Eigen::Index j = 0; j < displacements_.cols(); ++j) {
    if (displacements_.col(j) == step) return static_cast<int>(j);
  }
  return -1;
}

JumpKernel JumpKernel::with_rate(double rate) const {
  JumpKernel k(displacements_, probabilities_, rate);
  k.composite_ = composite_;
  return k;
}

double JumpKernel::log_mgf(int axis, double lambda) const {
  double m = 0.0;
  for (std::size_t j = 0; j < probabilities_.size(); ++j) {
    m += probabilities_[j] * std::exp(lambda * displacements_(axis, static_cast<Eigen::Index>(j)));
  }
  return std::log(m);
}

std::size_t JumpKernel::sample_index(RandomStream& rng) const {
  if (uniform_) return static_cast<std::size_t>(rng.below(probabilities_.size()));
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), probabilities_.size() - 1);
}

}  // namespace trapping
