#include "trapping/walk.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace trapping {

WalkPath::WalkPath(Unchecked, KernelPtr kernel, double horizon, std::vector<double> jump_times,
                   Eigen::MatrixXi positions)
    : kernel_(std::move(kernel)),
      horizon_(horizon),
      jump_times_(std::move(jump_times)),
      positions_(std::move(positions)) {}

WalkPath::WalkPath(KernelPtr kernel, double horizon, std::vector<double> jump_times, Eigen::MatrixXi positions)
    : WalkPath(Unchecked{}, std::move(kernel), horizon, std::move(jump_times), std::move(positions)) {
  if (!kernel_) throw std::invalid_argument("walk path needs a kernel");
  if (!(horizon_ >= 0.0) || !std::isfinite(horizon_)) throw std::invalid_argument("horizon must be finite and >= 0");
  if (positions_.rows() != kernel_->dim()) throw std::invalid_argument("position dimension differs from kernel");
  if (static_cast<std::size_t>(positions_.cols()) != jump_times_.size() + 1) {
    throw std::invalid_argument("need exactly one more position than jump times");
  }
  if (kernel_->rate() == 0.0 && !jump_times_.empty()) throw std::invalid_argument("rate-0 walk cannot jump");
  double prev = 0.0;
  for (std::size_t i = 0; i < jump_times_.size(); ++i) {
    const double t = jump_times_[i];
    if (!(t > prev) || t > horizon_) {
      throw std::invalid_argument("jump times must be strictly increasing in (0, horizon]");
    }
    prev = t;
    if (!kernel_->is_composite()) {
      const auto i1 = static_cast<Eigen::Index>(i);
      if (kernel_->find(positions_.col(i1 + 1) - positions_.col(i1)) < 0) {
        throw std::invalid_argument("step " + std::to_string(i) + " is not in the kernel support");
      }
    }
  }
}

WalkPath WalkPath::constant(KernelPtr kernel, const Site& at, double horizon) {
  Eigen::MatrixXi pos = at;
  return WalkPath(std::move(kernel), horizon, {}, std::move(pos));
}

WalkPath WalkPath::from_steps(KernelPtr kernel, const Site& origin, double horizon, std::vector<double> jump_times,
                              const Eigen::MatrixXi& displacements) {
  if (displacements.cols() != static_cast<Eigen::Index>(jump_times.size()) || displacements.rows() != origin.size()) {
    throw std::invalid_argument("displacements must be d x (number of jumps)");
  }
  Eigen::MatrixXi pos(origin.size(), displacements.cols() + 1);
  pos.col(0) = origin;
  for (Eigen::Index i = 0; i < displacements.cols(); ++i) pos.col(i + 1) = pos.col(i) + displacements.col(i);
  return WalkPath(std::move(kernel), horizon, std::move(jump_times), std::move(pos));
}

std::size_t WalkPath::segment_at(double s) const {
  return static_cast<std::size_t>(std::upper_bound(jump_times_.begin(), jump_times_.end(), s) - jump_times_.begin());
}

WalkPath WalkPath::restricted(double t) const {
  if (!(t >= 0.0) || t > horizon_) throw std::invalid_argument("restriction time outside [0, horizon]");
  const std::size_t n = segment_at(t);
  std::vector<double> times(jump_times_.begin(), jump_times_.begin() + static_cast<std::ptrdiff_t>(n));
  return WalkPath(Unchecked{}, kernel_, t, std::move(times), positions_.leftCols(static_cast<Eigen::Index>(n) + 1));
}

WalkPath sample_path(KernelPtr kernel, const Site& origin, double horizon, RandomStream& rng) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  if (origin.size() != kernel->dim()) throw std::invalid_argument("origin dimension differs from kernel");
  std::vector<double> times;
  std::vector<std::size_t> steps;
  const double rate = kernel->rate();
  if (rate > 0.0) {
    times.reserve(static_cast<std::size_t>(rate * horizon + 4.0 * std::sqrt(rate * horizon) + 4.0));
    steps.reserve(times.capacity());
    double t = 0.0;
    for (;;) {
      t += rng.exponential(rate);
      if (t > horizon) break;
      times.push_back(t);
      steps.push_back(kernel->sample_index(rng));
    }
  }
  const int d = kernel->dim();
  Eigen::MatrixXi pos(d, static_cast<Eigen::Index>(times.size()) + 1);
  pos.col(0) = origin;
  const Eigen::MatrixXi& disp = kernel->displacements();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    pos.col(c + 1) = pos.col(c) + disp.col(static_cast<Eigen::Index>(steps[i]));
  }
  return WalkPath(WalkPath::Unchecked{}, std::move(kernel), horizon, std::move(times), std::move(pos));
}

double local_time(const WalkPath& path, const Site& site) {
  if (site.size() != path.dim()) throw std::invalid_argument("site dimension differs from path");
  CompensatedSum sum;
  const auto& pos = path.positions();
  for (Eigen::Index i = 0; i < pos.cols(); ++i) {
    if (pos.col(i) == site) {
      const auto k = static_cast<std::size_t>(i);
      sum.add(path.segment_end(k) - path.segment_start(k));
    }
  }
  return sum.value();
}

std::vector<std::pair<Site, double>> local_times(const WalkPath& path) {
  const auto& pos = path.positions();
  std::vector<std::pair<Site, double>> out;
  if (path.dim() == 1) {
    const int lo = pos.minCoeff();
    const int hi = pos.maxCoeff();
    std::vector<CompensatedSum> acc(static_cast<std::size_t>(hi - lo + 1));
    std::vector<bool> seen(acc.size(), false);
    for (Eigen::Index i = 0; i < pos.cols(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      const auto slot = static_cast<std::size_t>(pos(0, i) - lo);
      acc[slot].add(path.segment_end(k) - path.segment_start(k));
      seen[slot] = true;
    }
    for (std::size_t j = 0; j < acc.size(); ++j) {
      if (!seen[j]) continue;
      Site s(1);
      s[0] = lo + static_cast<int>(j);
      out.emplace_back(s, acc[j].value());
    }
    return out;
  }
  std::unordered_map<Site, CompensatedSum, SiteHash> acc;
  for (Eigen::Index i = 0; i < pos.cols(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    acc[pos.col(i)].add(path.segment_end(k) - path.segment_start(k));
  }
  out.reserve(acc.size());
  for (const auto& [s, v] : acc) out.emplace_back(s, v.value());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return SiteLess{}(a.first, b.first); });
  return out;
}

std::vector<Site> range(const WalkPath& path) {
  std::vector<Site> sites;
  sites.reserve(static_cast<std::size_t>(path.positions().cols()));
  for (Eigen::Index i = 0; i < path.positions().cols(); ++i) sites.emplace_back(path.positions().col(i));
  std::sort(sites.begin(), sites.end(), SiteLess{});
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  return sites;
}

std::size_t range_size(const WalkPath& path) {
  const auto& pos = path.positions();
  if (path.dim() == 1) {
    const int lo = pos.minCoeff();
    const int hi = pos.maxCoeff();
    if (path.kernel().is_nearest_neighbor() && !path.kernel().is_composite()) {
      return static_cast<std::size_t>(hi - lo + 1);
    }
    std::vector<char> seen(static_cast<std::size_t>(hi - lo + 1), 0);
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < pos.cols(); ++i) {
      char& s = seen[static_cast<std::size_t>(pos(0, i) - lo)];
      count += s == 0;
      s = 1;
    }
    return count;
  }
  return range(path).size();
}

std::pair<int, int> running_extrema(const WalkPath& path) {
  if (path.dim() != 1) throw std::invalid_argument("running_extrema requires a one-dimensional path");
  return {path.positions().maxCoeff(), path.positions().minCoeff()};
}

int sup_norm(const WalkPath& path) { return path.positions().cwiseAbs().maxCoeff(); }

WalkPath difference_path(const WalkPath& a, const WalkPath& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("difference of paths with different dimensions");
  if (a.horizon() != b.horizon()) throw std::invalid_argument("difference of paths with different horizons");
  auto kernel = make_kernel(JumpKernel::difference(a.kernel(), b.kernel()));
  const auto ta = a.jump_times();
  const auto tb = b.jump_times();
  std::vector<double> times;
  times.reserve(ta.size() + tb.size());
  Eigen::MatrixXi pos(a.dim(), static_cast<Eigen::Index>(ta.size() + tb.size()) + 1);
  Site cur = a.origin() - b.origin();
  pos.col(0) = cur;
  Eigen::Index n = 0;
  std::size_t ia = 0;
  std::size_t ib = 0;
  const auto& pa = a.positions();
  const auto& pb = b.positions();
  while (ia < ta.size() || ib < tb.size()) {
    const double na = ia < ta.size() ? ta[ia] : std::numeric_limits<double>::infinity();
    const double nb = ib < tb.size() ? tb[ib] : std::numeric_limits<double>::infinity();
    const double t = std::min(na, nb);
    // a's event is applied before b's; both land in the same merged event
    if (na == t) ++ia;
    if (nb == t) ++ib;
    Site next = pa.col(static_cast<Eigen::Index>(ia)) - pb.col(static_cast<Eigen::Index>(ib));
    if (next == cur) continue;
    times.push_back(t);
    pos.col(++n) = next;
    cur = next;
  }
  return WalkPath(WalkPath::Unchecked{}, std::move(kernel), a.horizon(), std::move(times), pos.leftCols(n + 1));
}

double collision_time(const WalkPath& a, const WalkPath& b, double from, double to, std::optional<int> period) {
  if (a.dim() != b.dim()) throw std::invalid_argument("collision of paths with different dimensions");
  to = std::min({to, a.horizon(), b.horizon()});
  if (!(to > from)) return 0.0;
  CompensatedSum sum;
  const auto& pa = a.positions();
  const auto& pb = b.positions();
  if (period) {
    const int p = *period;
    detail::for_each_joint_segment(a, b, from, to, [&](double s, double e, std::size_t ia, std::size_t ib) {
      const auto d = (pa.col(static_cast<Eigen::Index>(ia)) - pb.col(static_cast<Eigen::Index>(ib))).eval();
      bool same = true;
      for (Eigen::Index k = 0; k < d.size(); ++k) same = same && (d[k] % p == 0);
      if (same) sum.add(e - s);
    });
  } else if (a.dim() == 1) {
    const int* xa = pa.data();
    const int* xb = pb.data();
    detail::for_each_joint_segment(a, b, from, to, [&](double s, double e, std::size_t ia, std::size_t ib) {
      if (xa[ia] == xb[ib]) sum.add(e - s);
    });
  } else {
    detail::for_each_joint_segment(a, b, from, to, [&](double s, double e, std::size_t ia, std::size_t ib) {
      if (pa.col(static_cast<Eigen::Index>(ia)) == pb.col(static_cast<Eigen::Index>(ib))) sum.add(e - s);
    });
  }
  return sum.value();
}

Extent1d difference_extent_1d(const WalkPath& a, const WalkPath& b) {
  if (a.dim() != 1 || b.dim() != 1) throw std::invalid_argument("difference_extent_1d requires one-dimensional paths");
  const double* ta = a.jump_times().data();
  const double* tb = b.jump_times().data();
  const std::size_t na = a.jump_count();
  const std::size_t nb = b.jump_count();
  const int* xa = a.positions().data();
  const int* xb = b.positions().data();
  const double to = std::min(a.horizon(), b.horizon());
  std::size_t ia = 0;
  std::size_t ib = 0;
  int cur = xa[0] - xb[0];
  Extent1d ext{cur, cur};
  // Every event strictly inside [0, to) starts a segment of positive length.
  for (;;) {
    const double ea = ia < na ? ta[ia] : to;
    const double eb = ib < nb ? tb[ib] : to;
    if (ea >= to && eb >= to) break;
    if (ea <= eb) ++ia;
    if (eb <= ea) ++ib;
    cur = xa[ia] - xb[ib];
    ext.min = std::min(ext.min, cur);
    ext.max = std::max(ext.max, cur);
  }
  return ext;
}

int difference_local_times_1d(const WalkPath& a, const WalkPath& b, std::vector<double>& out) {
  if (a.dim() != 1 || b.dim() != 1) {
    throw std::invalid_argument("difference_local_times_1d requires one-dimensional paths");
  }
  const auto& pa = a.positions();
  const auto& pb = b.positions();
  const int lo = pa.minCoeff() - pb.maxCoeff();
  const int hi = pa.maxCoeff() - pb.minCoeff();
  out.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
  const int* xa = pa.data();
  const int* xb = pb.data();
  detail::for_each_joint_segment(a, b, 0.0, std::min(a.horizon(), b.horizon()),
                                 [&](double s, double e, std::size_t ia, std::size_t ib) {
                                   out[static_cast<std::size_t>(xa[ia] - xb[ib] - lo)] += e - s;
                                 });
  return lo;
}

Extent1d sample_extent_1d(double rate, double horizon, RandomStream& rng) {
  Extent1d ext{0, 0};
  if (!(rate * horizon > 0.0)) return ext;
  std::poisson_distribution<long long> jumps(rate * horizon);
  long long n = jumps(rng);
  int x = 0;
  while (n > 0) {
    std::uint64_t bits = rng();
    const int take = static_cast<int>(std::min<long long>(n, 64));
    for (int k = 0; k < take; ++k) {
      x += static_cast<int>((bits >> k) & 1U) * 2 - 1;
      ext.min = std::min(ext.min, x);
      ext.max = std::max(ext.max, x);
    }
    n -= take;
  }
  return ext;
}

}  // namespace trapping
