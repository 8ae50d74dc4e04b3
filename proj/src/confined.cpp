#include "trapping/confined.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace trapping {

namespace {

void require_simple_1d(const JumpKernel& k) {
  if (k.dim() != 1 || !k.is_nearest_neighbor() || !k.is_symmetric()) {
    throw std::invalid_argument("confined walks need the simple symmetric walk on Z");
  }
}

/// Ground state of the window, zero outside.
double ground_state(const Window& w, int x) {
  if (x < w.lo || x > w.hi()) return 0.0;
  return std::sin(std::numbers::pi * (x - w.lo + 1) / (w.width + 1));
}

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

double window_eigenvalue(int width, double rate) {
  if (width < 1) throw std::invalid_argument("window width must be >= 1");
  return rate * (1.0 - std::cos(std::numbers::pi / (width + 1)));
}

WalkPath sample_confined_path(const KernelPtr& walker, const Window& w, double t, RandomStream& rng) {
  require_simple_1d(*walker);
  if (w.width < 1 || w.lo > 0 || w.hi() < 0) throw std::invalid_argument("window must contain the origin");
  const double rate = walker->rate() * std::cos(std::numbers::pi / (w.width + 1));
  std::vector<double> times;
  std::vector<int> pos{0};
  if (rate > 1e-300) {
    double s = 0.0;
    int x = 0;
    for (;;) {
      s += rng.exponential(rate);
      if (s > t) break;
      const double up = ground_state(w, x + 1);
      const double down = ground_state(w, x - 1);
      x += rng.uniform() * (up + down) < up ? 1 : -1;
      times.push_back(s);
      pos.push_back(x);
    }
  }
  Eigen::MatrixXi positions = Eigen::Map<const Eigen::RowVectorXi>(pos.data(), static_cast<Eigen::Index>(pos.size()));
  return WalkPath(walker, t, std::move(times), std::move(positions));
}

ConfinedMixture::ConfinedMixture(KernelPtr walker, double t, std::vector<int> widths, std::vector<double> width_weights,
                                 double free_weight)
    : walker_(std::move(walker)), t_(t), widths_(std::move(widths)), weights_(std::move(width_weights)),
      free_weight_(free_weight) {
  require_simple_1d(*walker_);
  if (!(t >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  if (widths_.size() != weights_.size()) throw std::invalid_argument("one weight per width");
  if (!(free_weight_ > 0.0 && free_weight_ <= 1.0)) throw std::invalid_argument("free weight must lie in (0, 1]");
  double total = 0.0;
  for (std::size_t i = 0; i < widths_.size(); ++i) {
    if (widths_[i] < 1) throw std::invalid_argument("window width must be >= 1");
    if (!(weights_[i] >= 0.0)) throw std::invalid_argument("width weights must be >= 0");
    total += weights_[i];
  }
  if (!widths_.empty() && !(total > 0.0)) throw std::invalid_argument("width weights sum to zero");
  if (widths_.empty()) free_weight_ = 1.0;
  double acc = 0.0;
  for (double& w : weights_) {
    w = w / total * (1.0 - free_weight_);
    acc += w;
    cumulative_.push_back(acc);
  }
}

ConfinedMixture ConfinedMixture::geometric(KernelPtr walker, double t, int min_width, int max_width, int count,
                                           double free_weight) {
  if (min_width < 1 || max_width < min_width || count < 1) throw std::invalid_argument("bad width range");
  std::vector<int> widths;
  for (int i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    const int w = static_cast<int>(std::lround(min_width * std::pow(static_cast<double>(max_width) / min_width, f)));
    if (widths.empty() || w != widths.back()) widths.push_back(w);
  }
  std::vector<double> weights(widths.size(), 1.0);
  return ConfinedMixture(std::move(walker), t, std::move(widths), std::move(weights), free_weight);
}

WalkPath ConfinedMixture::sample(RandomStream& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) return sample_path(walker_, origin(1), t_, rng);
  const int width = widths_[static_cast<std::size_t>(it - cumulative_.begin())];
  const int lo = -static_cast<int>(rng.below(static_cast<std::uint64_t>(width)));
  return sample_confined_path(walker_, {lo, width}, t_, rng);
}

double ConfinedMixture::log_density_ratio(const WalkPath& x) const {
  const auto [mx, mn] = running_extrema(x);
  const int end = x.final_position()[0];
  double total = std::log(free_weight_);
  for (std::size_t i = 0; i < widths_.size(); ++i) {
    const int n = widths_[i];
    if (mx - mn + 1 > n || weights_[i] == 0.0) continue;
    const double base = std::log(weights_[i] / n) + window_eigenvalue(n, walker_->rate()) * x.horizon();
    for (int lo = mx - n + 1; lo <= mn; ++lo) {
      const Window w{lo, n};
      total = log_sum_exp(total, base + std::log(ground_state(w, end)) - std::log(ground_state(w, 0)));
    }
  }
  return total;
}

}  // namespace trapping
