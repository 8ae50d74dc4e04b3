#include <gtest/gtest.h>

#include <cmath>

#include "trapping/pathmeasure.hpp"
#include "trapping/survival.hpp"

using namespace trapping;

namespace {

ModelParams hard(double nu) {
  ModelParams p;
  p.gamma = KillingRate::infinite();
  p.nu = nu;
  return p;
}

Site at(int x) {
  Site s(1);
  s[0] = x;
  return s;
}

}  // namespace

TEST(Weights, ShiftInvariantAndNormalised) {
  const std::vector<double> lw{-3.0, -1.0, -2.5, 0.0};
  auto shifted = lw;
  for (double& v : shifted) v += 1234.5;
  const auto a = normalized_weights(lw);
  const auto b = normalized_weights(shifted);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i], b[i], 1e-15);
    total += a[i];
  }
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_NEAR(effective_sample_size({0.0, 0.0, 0.0}), 3.0, 1e-12);
  EXPECT_NEAR(effective_sample_size({0.0, -1000.0}), 1.0, 1e-12);
}

TEST(Weights, WeightedQuantile) {
  const std::vector<double> v{5, 1, 3};
  EXPECT_EQ(weighted_quantile(v, {1, 1, 1}, 0.5), 3);
  EXPECT_EQ(weighted_quantile(v, {10, 1, 1}, 0.5), 5);
  EXPECT_EQ(weighted_quantile(v, {1, 1, 1}, 0.0), 1);
  EXPECT_EQ(weighted_quantile(v, {1, 1, 1}, 1.0), 5);
  EXPECT_THROW(weighted_quantile(v, {1, 1}, 0.5), std::invalid_argument);
}

TEST(GibbsEnsemble, NoTrapsGivesFreeLaw) {
  const auto e = sample_gibbs_ensemble(hard(0.0), 30.0, 500, 10, 3);
  EXPECT_NEAR(e.effective_size, 500.0, 1e-9);
  for (const auto& s : e.samples) EXPECT_EQ(s.log_weight, 0.0);
  const auto r = fluctuation_report(e, 0.5, 0.0);
  double direct = 0.0;
  const double lower = 0.5 * std::cbrt(30.0);
  const double upper = std::pow(30.0, 11.0 / 24.0);
  for (const auto& s : e.samples) {
    const int m = sup_norm(s.path);
    if (m > lower && m < upper) direct += 1.0 / 500.0;
  }
  EXPECT_NEAR(r.window_probability, direct, 1e-12);
}

TEST(GibbsEnsemble, HardLimitOfSoftWeights) {
  auto p = hard(1.0);
  const auto a = sample_gibbs_ensemble(p, 20.0, 200, 50, 8);
  p.gamma = KillingRate(1e6);
  const auto b = sample_gibbs_ensemble(p, 20.0, 200, 50, 8);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_NEAR(b.samples[i].log_weight, a.samples[i].log_weight, 1e-3 * std::abs(a.samples[i].log_weight));
  }
}

TEST(GibbsEnsemble, SmallDensityIsPerturbative) {
  const auto e = sample_gibbs_ensemble(hard(0.01), 25.0, 4000, 50, 5);
  const auto w = normalized_weights(e);
  double weighted = 0.0;
  Accumulator free;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double f = sup_norm(e.samples[i].path) <= 4 ? 1.0 : 0.0;
    weighted += w[i] * f;
    free.add(f);
  }
  EXPECT_NEAR(weighted, free.mean(), 3.0 * free.std_error());
}

TEST(GibbsEnsemble, ConfinedProposalAgreesWithFreeWalk) {
  const auto p = hard(1.0);
  GibbsOptions confined;
  confined.proposal = GibbsProposal::confined;
  const auto a = fluctuation_report(sample_gibbs_ensemble(p, 64.0, 3000, 100, 2), 0.1, 0.0);
  const auto b = fluctuation_report(sample_gibbs_ensemble(p, 64.0, 3000, 100, 2, confined), 0.1, 0.0);
  EXPECT_LE(std::abs(a.median - b.median), 1.0);
  EXPECT_NEAR(a.window_probability, b.window_probability, 0.08);
}

TEST(GibbsEnsemble, ConditioningShrinksPaths) {
  const auto free = fluctuation_report(sample_gibbs_ensemble(hard(0.0), 256.0, 1000, 20, 4), 0.1, 0.0);
  GibbsOptions confined;
  confined.proposal = GibbsProposal::confined;
  const auto cond = fluctuation_report(sample_gibbs_ensemble(hard(1.0), 256.0, 1000, 50, 4, confined), 0.1, 0.0);
  EXPECT_LT(cond.median, free.median);
  for (std::size_t i = 1; i < cond.quantiles.size(); ++i) EXPECT_LE(cond.quantiles[i - 1], cond.quantiles[i]);
  EXPECT_GT(cond.effective_size, 0.0);
  EXPECT_LE(cond.effective_size, 1000.0);
}

TEST(GibbsEnsemble, DegenerateWindowSpansSupport) {
  GibbsOptions confined;
  confined.proposal = GibbsProposal::confined;
  const auto e = sample_gibbs_ensemble(hard(1.0), 64.0, 1000, 50, 6, confined);
  const auto r = fluctuation_report(e, 0.0, 10.0);
  const auto w = normalized_weights(e);
  double moved = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) moved += sup_norm(e.samples[i].path) > 0 ? w[i] : 0.0;
  EXPECT_NEAR(r.window_probability, moved, 1e-12);
  EXPECT_GT(r.window_probability, 0.99);
}

TEST(GibbsEnsemble, TooFewEffectiveSamplesIsAnError) {
  GibbsOptions strict;
  strict.min_effective_size = 1e9;
  EXPECT_THROW(sample_gibbs_ensemble(hard(1.0), 10.0, 50, 10, 1, strict), std::domain_error);
  auto drift = hard(1.0);
  drift.trap_shape = make_kernel(JumpKernel::uniform_1d({1, 2}, 1.0));
  EXPECT_THROW(sample_gibbs_ensemble(drift, 10.0, 50, 10, 1), std::invalid_argument);
}

TEST(GrowthExponent, Synthetic) {
  std::vector<FluctuationReport> rs(3);
  const double ts[] = {64, 256, 1024};
  for (int i = 0; i < 3; ++i) {
    rs[static_cast<std::size_t>(i)].t = ts[i];
    rs[static_cast<std::size_t>(i)].median = 2.0 * std::pow(ts[i], 0.4);
  }
  const auto g = growth_exponent(rs);
  EXPECT_NEAR(g.exponent, 0.4, 1e-12);
  for (double e : g.local_exponents) EXPECT_NEAR(e, 0.4, 1e-12);
}

TEST(ThinPoints, Limits) {
  RandomStream rng(3);
  const auto k = make_kernel(JumpKernel::simple_symmetric(1, 1.0));
  const auto still = WalkPath::constant(k, at(0), 4.0);
  EXPECT_NEAR(thin_point_functional(still, WalkPath::constant(k, at(0), 4.0), 0.7), std::exp(-2.8), 1e-15);
  for (int i = 0; i < 20; ++i) {
    const auto y = sample_path(k, at(0), 10.0, rng);
    const auto x = sample_path(k, at(0), 10.0, rng);
    EXPECT_NEAR(thin_point_functional(y, x, 0.0), static_cast<double>(range_size(difference_path(y, x))), 1e-12);
    double prev = thin_point_functional(y, x, 0.0);
    for (double g : {0.1, 1.0, 10.0, 100.0, 1e4}) {
      const double f = thin_point_functional(y, x, g);
      EXPECT_LE(f, prev);
      prev = f;
    }
    EXPECT_EQ(thin_point_functional(y, x, std::numeric_limits<double>::infinity()), 0.0);
  }
}

TEST(Holes, Counts) {
  RandomStream rng(4);
  const auto nn = make_kernel(JumpKernel::simple_symmetric(1, 1.0));
  for (int i = 0; i < 20; ++i) EXPECT_EQ(hole_functional(sample_path(nn, at(0), 20.0, rng)), 0);
  const auto two = make_kernel(JumpKernel::uniform_1d({-2, 2}, 1.0));
  Eigen::MatrixXi pos(1, 3);
  pos << 0, 2, 0;
  const WalkPath y(two, 3.0, {1.0, 2.0}, pos);
  EXPECT_EQ(hole_functional(y), 1);
}

TEST(RangeWeights, ExtremaIdentityForNearestNeighbour) {
  RandomStream rng(12);
  const auto k = make_kernel(JumpKernel::simple_symmetric(1, 1.0));
  std::vector<double> scratch;
  for (int i = 0; i < 50; ++i) {
    const auto y = sample_path(k, at(0), 15.0, rng);
    const auto x = sample_path(k, at(0), 15.0, rng);
    const auto [mx, mn] = running_extrema(difference_path(y, x));
    EXPECT_EQ(inner_functional(y, x, KillingRate::infinite(), scratch), static_cast<double>(mx - mn + 1));
  }
}
