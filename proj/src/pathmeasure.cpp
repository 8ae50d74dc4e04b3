#include "trapping/pathmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "trapping/confined.hpp"
#include "trapping/survival.hpp"

namespace trapping {

GibbsEnsemble sample_gibbs_ensemble(const ModelParams& params, double t, long n, long n_y, std::uint64_t seed,
                                    const GibbsOptions& options, const ExecutionOptions& exec) {
  params.validate();
  if (!params.trap_kernel()->is_symmetric()) throw std::invalid_argument("Gibbs weights need a symmetric trap kernel");
  if (n <= 0 || n_y <= 0) throw std::invalid_argument("n and n_y must be positive");
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("t must be finite and >= 0");
  const auto walker = params.walker_kernel();
  std::optional<ConfinedMixture> mixture;
  if (options.proposal == GibbsProposal::confined) {
    if (params.dim != 1) throw std::invalid_argument("the confined proposal is one-dimensional");
    const int lo = options.min_width > 0 ? options.min_width : std::max(1, static_cast<int>(std::cbrt(t) / 2.0));
    const int hi = options.max_width > 0 ? options.max_width
                                         : std::max(lo + 1, static_cast<int>(std::ceil(4.0 * std::sqrt(params.kappa * t))));
    mixture = ConfinedMixture::geometric(walker, t, lo, hi, options.width_count, options.free_weight);
  }
  const RandomStream root(seed, static_cast<std::uint64_t>(Estimator::importance));
  const auto ys = sample_trap_paths(params, t, n_y, root.substream(~0ULL));
  const Site o = origin(params.dim);
  auto drawn = parallel_map<std::optional<WeightedPathSample>>(static_cast<std::size_t>(n), exec, [&](std::size_t i) {
    auto rng = root.substream(i);
    WalkPath x = mixture ? mixture->sample(rng) : sample_path(walker, o, t, rng);
    Accumulator acc;
    std::vector<double> scratch;
    if (params.nu > 0.0) {
      for (const auto& y : ys) acc.add(inner_functional(y, x, params.gamma, scratch));
    }
    double lw = -params.nu * acc.mean();
    if (mixture) lw -= mixture->log_density_ratio(x);
    return std::optional<WeightedPathSample>(WeightedPathSample{std::move(x), lw, acc.std_error()});
  });
  GibbsEnsemble out;
  out.t = t;
  out.samples.reserve(drawn.size());
  std::vector<double> lws;
  for (auto& s : drawn) {
    lws.push_back(s->log_weight);
    out.samples.push_back(std::move(*s));
  }
  out.effective_size = effective_sample_size(lws);
  if (out.effective_size < options.min_effective_size) {
    throw std::domain_error("effective sample size " + std::to_string(out.effective_size) + " below " +
                            std::to_string(options.min_effective_size) + " at t = " + std::to_string(t) +
                            " (raise n or lower t)");
  }
  return out;
}

std::vector<double> normalized_weights(const std::vector<double>& log_weights) {
  if (log_weights.empty()) throw std::invalid_argument("no weights");
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(top)) throw std::domain_error("all weights vanish");
  std::vector<double> w;
  w.reserve(log_weights.size());
  double total = 0.0;
  for (double l : log_weights) {
    w.push_back(std::exp(l - top));
    total += w.back();
  }
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> normalized_weights(const GibbsEnsemble& ensemble) {
  std::vector<double> lws;
  for (const auto& s : ensemble.samples) lws.push_back(s.log_weight);
  return normalized_weights(lws);
}

double effective_sample_size(const std::vector<double>& log_weights) {
  const auto w = normalized_weights(log_weights);
  double sq = 0.0;
  for (double v : w) sq += v * v;
  return 1.0 / sq;
}

double weighted_quantile(const std::vector<double>& values, const std::vector<double>& weights, double q) {
  if (values.size() != weights.size() || values.empty()) throw std::invalid_argument("need matching nonempty inputs");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double cum = 0.0;
  for (std::size_t i : order) {
    cum += weights[i];
    if (cum >= q * total * (1.0 - 1e-12)) return values[i];
  }
  return values[order.back()];
}

FluctuationReport fluctuation_report(const GibbsEnsemble& ensemble, double alpha, double epsilon) {
  if (ensemble.samples.empty()) throw std::invalid_argument("empty ensemble");
  if (ensemble.samples.front().path.dim() != 1) throw std::invalid_argument("fluctuation reports are one-dimensional");
  const auto w = normalized_weights(ensemble);
  std::vector<double> norms;
  for (const auto& s : ensemble.samples) norms.push_back(sup_norm(s.path));
  FluctuationReport r;
  r.t = ensemble.t;
  r.n = static_cast<long>(norms.size());
  r.effective_size = ensemble.effective_size;
  r.alpha = alpha;
  r.epsilon = epsilon;
  for (double q : r.levels) r.quantiles.push_back(weighted_quantile(norms, w, q));
  r.median = weighted_quantile(norms, w, 0.5);
  const double lower = alpha * std::cbrt(ensemble.t);
  const double upper = std::pow(ensemble.t, 11.0 / 24.0 + epsilon);
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (norms[i] > lower && norms[i] < upper) r.window_probability += w[i];
    if (norms[i] <= lower) r.lower_probability += w[i];
  }
  return r;
}

GrowthFit growth_exponent(const std::vector<FluctuationReport>& reports) {
  if (reports.size() < 2) throw std::invalid_argument("need at least two reports");
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& r : reports) {
    if (!(r.median > 0.0) || !(r.t > 0.0)) throw std::domain_error("median of ||X||_t must be positive");
    x.push_back(std::log(r.t));
    y.push_back(std::log(r.median));
  }
  GrowthFit g;
  for (std::size_t i = 1; i < x.size(); ++i) g.local_exponents.push_back((y[i] - y[i - 1]) / (x[i] - x[i - 1]));
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  g.exponent = sxy / sxx;
  return g;
}

double thin_point_functional(const WalkPath& y, const WalkPath& x, double gamma) {
  if (y.dim() != 1) throw std::invalid_argument("thin points are one-dimensional");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  std::vector<double> lt;
  difference_local_times_1d(y, x, lt);
  double total = 0.0;
  for (double l : lt) {
    if (l > 0.0) total += std::isinf(gamma) ? 0.0 : std::exp(-gamma * l);
  }
  return total;
}

long hole_functional(const WalkPath& y) {
  const auto [mx, mn] = running_extrema(y);
  return static_cast<long>(mx - mn + 1) - static_cast<long>(range_size(y));
}

}  // namespace trapping
