#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "trapping/random.hpp"

namespace trapping {

inline constexpr int kMaxDim = 6;

/// A site of Z^d. Stack-allocated, dimension fixed at construction.
using Site = Eigen::Matrix<int, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

inline Site origin(int dim) { return Site::Zero(dim); }

inline int max_norm(const Eigen::Ref<const Eigen::VectorXi>& x) {
  return x.size() == 0 ? 0 : x.cwiseAbs().maxCoeff();
}

/// Lexicographic order on sites of equal dimension.
struct SiteLess {
  bool operator()(const Site& a, const Site& b) const {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  }
};

struct SiteHash {
  std::size_t operator()(const Site& s) const {
    std::size_t h = 0x12345;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      h ^= std::hash<int>{}(s[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

/// Jump law of a continuous-time random walk: finite support on Z^d \ {0},
/// probabilities and a total jump rate.
class JumpKernel {
 public:
  /// `displacements` is d x K, one column per support point.
  JumpKernel(Eigen::MatrixXi displacements, std::vector<double> probabilities, double rate);

  /// Nearest-neighbour kernel, 1/(2d) on each unit vector.
  static JumpKernel simple_symmetric(int dim, double rate);

  /// One-dimensional kernel uniform over `steps`.
  static JumpKernel uniform_1d(const std::vector<int>& steps, double rate);

  /// Law of the increments of a - b for independent walks a, b: rates add
  /// and b's support is reflected. Marked composite.
  static JumpKernel difference(const JumpKernel& a, const JumpKernel& b);

  int dim() const { return static_cast<int>(displacements_.rows()); }
  double rate() const { return rate_; }
  std::size_t support_size() const { return probabilities_.size(); }
  const Eigen::MatrixXi& displacements() const { return displacements_; }
  const std::vector<double>& probabilities() const { return probabilities_; }

  bool is_symmetric() const { return symmetric_; }
  bool is_mean_zero() const { return mean_zero_; }
  bool is_nearest_neighbor() const { return nearest_neighbor_; }
  bool is_composite() const { return composite_; }

  /// Largest max-norm of a single jump.
  int reach() const { return reach_; }

  /// Index of `step` in the support, or -1.
  int find(const Eigen::Ref<const Eigen::VectorXi>& step) const;

  JumpKernel with_rate(double rate) const;

  /// log sum_z p(z) exp(lambda * z[axis]).
  double log_mgf(int axis, double lambda) const;

  std::size_t sample_index(RandomStream& rng) const;

 private:
  Eigen::MatrixXi displacements_;
  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
  double rate_;
  bool uniform_ = false;
  bool symmetric_ = false;
  bool mean_zero_ = false;
  bool nearest_neighbor_ = false;
  bool composite_ = false;
  int reach_ = 0;

  void classify();
};

using KernelPtr = std::shared_ptr<const JumpKernel>;

inline KernelPtr make_kernel(JumpKernel k) { return std::make_shared<const JumpKernel>(std::move(k)); }

}  // namespace trapping
