#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "trapping/pam.hpp"

using namespace trapping;

namespace {

Site at(int x) {
  Site s(1);
  s[0] = x;
  return s;
}

KernelPtr ssrw(int d = 1, double rate = 1.0) { return make_kernel(JumpKernel::simple_symmetric(d, rate)); }

IntegratorConfig rk4(double dt, int radius = 0) {
  IntegratorConfig c;
  c.dt = dt;
  c.scheme = Scheme::rk4;
  c.box_radius = radius;
  return c;
}

}  // namespace

// =============================================================================
// Generator
// =============================================================================

TEST(LatticeGenerator, AnnihilatesConstantsUnderDirichletOne) {
  const Box box{2, 4};
  const LatticeGenerator gen(JumpKernel::simple_symmetric(2, 3.0), box, Boundary::dirichlet_one);
  Eigen::ArrayXd f = Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(box.volume()));
  Eigen::ArrayXd out;
  gen.apply(f, out);
  EXPECT_EQ(out.abs().maxCoeff(), 0.0);
}

TEST(LatticeGenerator, DiscreteLaplacianAndBoundaries) {
  const Box box{1, 2};
  Eigen::ArrayXd f(5);
  f << 0.0, 1.0, 4.0, 9.0, 16.0;
  Eigen::ArrayXd out;
  LatticeGenerator(JumpKernel::simple_symmetric(1, 2.0), box, Boundary::dirichlet_zero).apply(f, out);
  // rate 2, p = 1/2: (Lf)(x) = f(x+1) + f(x-1) - 2 f(x)
  EXPECT_DOUBLE_EQ(out[2], 2.0);
  EXPECT_DOUBLE_EQ(out[0], 1.0);
  EXPECT_DOUBLE_EQ(out[4], -23.0);
  LatticeGenerator(JumpKernel::simple_symmetric(1, 2.0), box, Boundary::periodic).apply(f, out);
  EXPECT_DOUBLE_EQ(out[0], 17.0);
  EXPECT_NEAR(out.sum(), 0.0, 1e-12);
}

TEST(LatticeGenerator, TemplatedOnScalar) {
  const Box box{1, 3};
  const LatticeGenerator gen(JumpKernel::simple_symmetric(1, 1.0), box, Boundary::dirichlet_one);
  Eigen::Array<long double, Eigen::Dynamic, 1> f = Eigen::Array<long double, Eigen::Dynamic, 1>::Ones(7);
  f[3] = 0.5L;
  Eigen::Array<long double, Eigen::Dynamic, 1> out;
  gen.apply(f, out);
  EXPECT_EQ(out[3], 0.5L);
  EXPECT_EQ(out[2], -0.25L);
}

// =============================================================================
// v_X
// =============================================================================

TEST(SolveVx, NoKillingLeavesOne) {
  RandomStream rng(1);
  const auto x = sample_path(ssrw(), at(0), 5.0, rng);
  const auto sol = solve_v_x(x, 0.0, JumpKernel::simple_symmetric(1, 1.0), rk4(0.01));
  EXPECT_EQ((sol.v.values - 1.0).abs().maxCoeff(), 0.0);
  EXPECT_EQ(sol.sigma, 0.0);
}

TEST(SolveVx, ImmobileTrapsDecoupleSites) {
  const auto x = WalkPath::constant(ssrw(1, 0.0), at(0), 3.0);
  const auto sol = solve_v_x(x, 0.7, JumpKernel::simple_symmetric(1, 0.0), rk4(0.01, 3));
  EXPECT_NEAR(sol.v.at(at(0)), std::exp(-0.7 * 3.0), 1e-10);
  EXPECT_EQ(sol.v.at(at(1)), 1.0);
  EXPECT_EQ(sol.v.at(at(-3)), 1.0);
}

TEST(SolveVx, SigmaIdentity) {
  RandomStream rng(2);
  const auto x = sample_path(ssrw(), at(0), 10.0, rng);
  const auto fine = solve_v_x(x, 1.0, JumpKernel::simple_symmetric(1, 1.0), rk4(1e-3, 60));
  EXPECT_LT(std::abs(fine.residual), 1e-6);
  const auto half = solve_v_x(x, 1.0, JumpKernel::simple_symmetric(1, 1.0), rk4(5e-4, 60));
  EXPECT_LT(std::abs(half.residual), 1e-6);
  EXPECT_NEAR(fine.sigma, half.sigma, 1e-9);
  EXPECT_NEAR(fine.integral, half.integral, 1e-9);
}

TEST(SolveVx, ConvergenceOrder) {
  const auto x = WalkPath::constant(ssrw(1, 0.0), at(0), 2.0);
  const auto trap = JumpKernel::simple_symmetric(1, 1.0);
  auto sigma = [&](Scheme s, double dt) {
    auto c = rk4(dt, 30);
    c.scheme = s;
    return solve_v_x(x, 1.0, trap, c).sigma;
  };
  const double ref = sigma(Scheme::rk4, 1e-3);
  const double e1 = std::abs(sigma(Scheme::explicit_euler, 0.04) - ref);
  const double e2 = std::abs(sigma(Scheme::explicit_euler, 0.02) - ref);
  EXPECT_GE(std::log2(e1 / e2), 0.9);
  const double r1 = std::abs(sigma(Scheme::rk4, 0.2) - ref);
  const double r2 = std::abs(sigma(Scheme::rk4, 0.1) - ref);
  EXPECT_GE(std::log2(r1 / r2), 3.5);
}

TEST(SolveVx, MaximumPrinciple) {
  RandomStream rng(3);
  const auto x = sample_path(ssrw(), at(0), 6.0, rng);
  std::vector<double> times;
  for (int i = 0; i <= 12; ++i) times.push_back(0.5 * i);
  const auto sol = solve_v_x(x, 2.0, JumpKernel::simple_symmetric(1, 1.0), rk4(0.01), times);
  ASSERT_EQ(sol.snapshots.size(), times.size());
  for (const auto& s : sol.snapshots) {
    EXPECT_GT(s.values.minCoeff(), 0.0);
    EXPECT_LE(s.values.maxCoeff(), 1.0);
  }
}

TEST(SolveVx, BoundaryInsensitive) {
  RandomStream rng(4);
  const auto x = sample_path(ssrw(), at(0), 4.0, rng);
  const auto trap = JumpKernel::simple_symmetric(1, 1.0);
  const auto a = solve_v_x(x, 1.0, trap, rk4(0.01));
  auto c = rk4(0.01, 2 * a.v.box.radius);
  const auto b = solve_v_x(x, 1.0, trap, c);
  EXPECT_LT(std::abs(a.integral - b.integral), 1e-8);
}

TEST(SolveVx, Errors) {
  const auto x = WalkPath::constant(ssrw(1, 0.0), at(0), 1.0);
  const auto trap = JumpKernel::simple_symmetric(1, 1.0);
  EXPECT_THROW(solve_v_x(x, std::numeric_limits<double>::infinity(), trap, rk4(0.01)), std::invalid_argument);
  EXPECT_THROW(solve_v_x(x, 1.0, JumpKernel((Eigen::MatrixXi(1, 2) << 1, -1).finished(), {0.7, 0.3}, 1.0), rk4(0.01)),
               std::invalid_argument);
  EXPECT_THROW(solve_v_x(x, 100.0, trap, rk4(0.5)), std::domain_error);
  const WalkPath far(ssrw(), 1.0, {0.2, 0.4, 0.6}, (Eigen::MatrixXi(1, 4) << 0, 1, 2, 3).finished());
  EXPECT_THROW(solve_v_x(far, 1.0, trap, rk4(0.01, 2)), std::out_of_range);
}

// =============================================================================
// PAM
// =============================================================================

TEST(SolvePam, ZeroPotential) {
  const StaticPotential pot{Box{2, 5}, Eigen::ArrayXd::Zero(121)};
  const auto u = solve_pam(pot, JumpKernel::simple_symmetric(2, 1.0), 1.0, rk4(0.05), {1.0, 3.0});
  for (const auto& f : u) EXPECT_EQ((f.values - 1.0).abs().maxCoeff(), 0.0);
}

TEST(SolvePam, ImmobileWalkerDecouples) {
  RandomStream rng(5);
  const auto pot = sample_static_potential({StaticKind::iid_poisson, 1, 10, 1.0, ""}, rng);
  const auto u = solve_pam(pot, JumpKernel::simple_symmetric(1, 0.0), 0.5, rk4(0.01), {2.0}).front();
  EXPECT_LT((u.values - (-0.5 * 2.0 * pot.values).exp()).abs().maxCoeff(), 1e-10);
}

TEST(SolvePam, FeynmanKacStaticPotential) {
  RandomStream prng(6);
  const auto pot = sample_static_potential({StaticKind::iid_poisson, 1, 40, 1.0, ""}, prng);
  const auto walker = ssrw();
  const double u0 = solve_pam(pot, *walker, 1.0, rk4(0.01), {5.0}).front().at(at(0));
  const RandomStream root(7);
  Accumulator acc;
  for (int i = 0; i < 100000; ++i) {
    auto rng = root.substream(i);
    const auto x = sample_path(walker, at(0), 5.0, rng);
    double integral = 0.0;
    for (const auto& [site, l] : local_times(x)) integral += pot.box.contains(site) ? pot.at(site) * l : 0.0;
    acc.add(std::exp(-integral));
  }
  EXPECT_NEAR(u0, acc.mean(), 3.0 * acc.std_error());
}

TEST(SolvePam, TimeReversedFieldGivesQuenchedSurvival) {
  const auto walker = ssrw();
  const int reach = escape_radius(*walker, 3.0, 1e-10);
  RandomStream frng(8);
  const auto field = sample_field(TrapFieldSpec::certified(1, 0.5, ssrw(), 3.0, reach), frng);
  const double u0 = solve_pam(field, *walker, 1.0, rk4(0.01), {3.0}, true).front().at(at(0));
  const RandomStream root(9);
  Accumulator acc;
  for (int i = 0; i < 40000; ++i) {
    auto rng = root.substream(i);
    acc.add(std::exp(-interaction_integral(field, sample_path(walker, at(0), 3.0, rng)).integral));
  }
  EXPECT_NEAR(u0, acc.mean(), 3.0 * acc.std_error());
}

TEST(SolvePam, MonotoneInGammaWithSharedField) {
  const auto walker = ssrw();
  const int reach = escape_radius(*walker, 4.0, 1e-10);
  RandomStream frng(10);
  const auto field = sample_field(TrapFieldSpec::certified(1, 1.0, ssrw(), 4.0, reach), frng);
  Eigen::ArrayXd previous;
  for (double g : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    const auto u = solve_pam(field, *walker, g, rk4(0.01), {4.0}).front();
    EXPECT_GT(u.values.minCoeff(), 0.0);
    EXPECT_LE(u.values.maxCoeff(), 1.0 + 1e-15);
    if (previous.size()) EXPECT_TRUE((u.values <= previous + 1e-14).all());
    previous = u.values;
  }
}

TEST(SolvePam, RejectsUncertifiedBoxAndUnboundedPotential) {
  const auto walker = ssrw();
  RandomStream rng(11);
  const auto field = sample_field(TrapFieldSpec::certified(1, 1.0, ssrw(), 2.0, 5), rng);
  EXPECT_THROW(solve_pam(field, *walker, 1.0, rk4(0.01, 6), {1.0}), std::out_of_range);
  const auto hard = sample_static_potential({StaticKind::bernoulli, 1, 5, 0.5, ""}, rng);
  EXPECT_THROW(solve_pam(hard, *walker, 1.0, rk4(0.01), {1.0}), std::domain_error);
}

TEST(AnnealedPamAverage, TrivialParameters) {
  ModelParams p;
  p.nu = 0.0;
  const auto none = annealed_pam_average(p, 2.0, 20, rk4(0.02), 1);
  EXPECT_EQ(none.value, 1.0);
  EXPECT_EQ(none.std_error, 0.0);
  p.nu = 1.0;
  p.gamma = KillingRate(0.0);
  EXPECT_EQ(annealed_pam_average(p, 2.0, 20, rk4(0.02), 1).value, 1.0);
}

TEST(WriteCsv, Rows) {
  const auto f = LatticeField<double>::constant(Box{1, 1}, 0.5, Boundary::dirichlet_one);
  std::ostringstream out;
  write_csv(f, out);
  EXPECT_EQ(out.str(), "x1,value\n-1,0.5\n0,0.5\n1,0.5\n");
}
