#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "linksched/gp.hpp"
#include "oracles.hpp"

using namespace linksched;

namespace {

LinkProblem two_link(double cross, Eigen::Vector2d w) {
  LinkProblem p;
  p.gain.resize(2, 2);
  p.gain << 1.0, cross, cross, 1.0;
  p.weights = w;
  p.downlink = Eigen::Vector2i(1, 1);
  p.noise_w = Eigen::Vector2d(0.1, 0.1);
  p.p_max_w = Eigen::Vector2d(1.0, 1.0);
  p.bandwidth_hz = 1.0;
  return p;
}

}  // namespace

TEST(Condense, Weights) {
  const Eigen::VectorXd a = condense_posynomial(Eigen::Vector2d(1.0, 1.0));
  EXPECT_DOUBLE_EQ(a(0), 0.5);
  EXPECT_DOUBLE_EQ(a(1), 0.5);
  const Eigen::VectorXd b = condense_posynomial(Eigen::Vector2d(3.0, 1.0));
  EXPECT_DOUBLE_EQ(b(0), 0.75);
  EXPECT_DOUBLE_EQ(b(1), 0.25);
}

TEST(Condense, RejectsNonPositiveTerms) {
  EXPECT_THROW(condense_posynomial(Eigen::Vector2d(1.0, 0.0)), std::invalid_argument);
  EXPECT_THROW(condense_posynomial(Eigen::Vector2d(-1.0, 2.0)), std::invalid_argument);
  EXPECT_THROW(condense_posynomial(Eigen::VectorXd()), std::invalid_argument);
}

TEST(Condense, TightAtExpansionAndLowerBoundElsewhere) {
  std::mt19937_64 rng(5);
  std::lognormal_distribution<double> term(0.0, 3.0);
  std::uniform_int_distribution<int> count(1, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = count(rng);
    Eigen::VectorXd at_k(n);
    for (int t = 0; t < n; ++t) at_k(t) = term(rng);
    const Eigen::VectorXd theta = condense_posynomial(at_k);
    EXPECT_NEAR(theta.sum(), 1.0, 1e-12);
    EXPECT_NEAR(condensed_monomial(theta, at_k) / at_k.sum(), 1.0, 1e-12);
    for (int s = 0; s < 5; ++s) {
      Eigen::VectorXd elsewhere(n);
      for (int t = 0; t < n; ++t) elsewhere(t) = term(rng);
      EXPECT_LE(condensed_monomial(theta, elsewhere), elsewhere.sum() * (1 + 1e-12));
    }
  }
}

TEST(InnerSolve, QuadraticInteriorMinimum) {
  // f(x) = (x - 0.3)^2 on [-1, 1].
  const SmoothObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2 * (x.array() - 0.3).matrix();
    return (x.array() - 0.3).square().sum();
  };
  const auto r = inner_solve(f, Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0),
                             Eigen::VectorXd::Constant(1, -0.9), 1000, 1e-10);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), 0.3, 1e-9);
  // Interior optimum: the projected gradient is the plain gradient.
  Eigen::VectorXd g;
  f(r.x, g);
  const Eigen::VectorXd pg = projected_gradient(r.x, g, Eigen::VectorXd::Constant(1, -1.0),
                                                Eigen::VectorXd::Constant(1, 1.0));
  EXPECT_NEAR(pg(0), g(0), 1e-15);
}

TEST(InnerSolve, BoundaryMinimumHasOutwardGradient) {
  // Minimizer of (x - 3)^2 restricted to [-1, 1] is the upper bound.
  const SmoothObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2 * (x.array() - 3.0).matrix();
    return (x.array() - 3.0).square().sum();
  };
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(1, -1.0);
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(1, 1.0);
  const auto r = inner_solve(f, lo, hi, Eigen::VectorXd::Zero(1), 1000, 1e-10);
  EXPECT_TRUE(r.converged);
  EXPECT_DOUBLE_EQ(r.x(0), 1.0);
  Eigen::VectorXd g;
  f(r.x, g);
  EXPECT_LT(g(0), 0.0);  // descent direction points out of the box
  EXPECT_NEAR(projected_gradient(r.x, g, lo, hi).norm(), 0.0, 1e-15);
}

TEST(InnerSolve, ObjectiveNeverIncreases) {
  // Ill-conditioned convex quadratic in 4-D with mixed active bounds.
  Eigen::Vector4d scale(1.0, 10.0, 100.0, 1000.0);
  Eigen::Vector4d center(0.5, -2.0, 0.1, 3.0);
  std::vector<double> values;
  const SmoothObjective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const Eigen::VectorXd d = x - center;
    g = 2 * scale.cwiseProduct(d);
    const double v = d.cwiseProduct(d).dot(scale);
    values.push_back(v);
    return v;
  };
  const auto r = inner_solve(f, Eigen::VectorXd::Constant(4, -1.0), Eigen::VectorXd::Constant(4, 1.0),
                             Eigen::VectorXd::Constant(4, -0.5), 5000, 1e-9);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x(0), 0.5, 1e-8);
  EXPECT_DOUBLE_EQ(r.x(1), -1.0);
  EXPECT_NEAR(r.x(2), 0.1, 1e-8);
  EXPECT_DOUBLE_EQ(r.x(3), 1.0);
  EXPECT_LE(r.projected_grad_norm, 1e-9);
  EXPECT_LE(r.value, values.front());
}

TEST(InnerSolve, IterationLimitReturnsFlag) {
  const SmoothObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 4 * x.array().cube().matrix();
    return x.array().pow(4).sum();
  };
  const auto r = inner_solve(f, Eigen::VectorXd::Constant(2, -5.0), Eigen::VectorXd::Constant(2, 5.0),
                             Eigen::Vector2d(4.0, -3.0), 1, 1e-300);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(InnerSolve, RejectsBadBounds) {
  const SmoothObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = x;
    return 0.5 * x.squaredNorm();
  };
  EXPECT_THROW(inner_solve(f, Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 0.0),
                           Eigen::VectorXd::Zero(1), 10, 1e-8),
               std::invalid_argument);
  EXPECT_THROW(inner_solve(f, Eigen::VectorXd::Constant(1, -std::numeric_limits<double>::infinity()),
                           Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Zero(1), 10, 1e-8),
               std::invalid_argument);
}

TEST(GpConfigTest, Validation) {
  EXPECT_NO_THROW(GpConfig{}.validate());
  GpConfig c;
  c.trust_factor = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.p_floor_frac = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.outer_tol = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.trust_factor = std::numeric_limits<double>::infinity();
  EXPECT_NO_THROW(c.validate());
}

TEST(WsrMaximize, SingleLinkGoesToFullPower) {
  LinkProblem p;
  p.gain = Eigen::MatrixXd::Constant(1, 1, 1e-7);
  p.weights = Eigen::VectorXd::Constant(1, 0.7);
  p.downlink = Eigen::VectorXi::Ones(1);
  p.noise_w = Eigen::VectorXd::Constant(1, 1e-13);
  p.p_max_w = Eigen::VectorXd::Constant(1, 0.25);
  const GpResult r = wsr_maximize(p);
  EXPECT_DOUBLE_EQ(r.alloc.powers_w(0), 0.25);
  EXPECT_TRUE(r.converged);
}

TEST(WsrMaximize, SymmetricTwoLinkFullPowerIsLocalMaximum) {
  // With cross gain 0.5 both partial derivatives of the WSR are positive at
  // p = (1, 1), so full power is a KKT point of the box problem. An ascent
  // method started there stays; the global optimum switches one link off.
  const LinkProblem p = two_link(0.5, Eigen::Vector2d(1.0, 1.0));
  const double grid = oracle::grid_best_wsr(p, 201, GpConfig{}.p_floor_frac);
  const auto f = [&](const Eigen::VectorXd& x) { return oracle::wsr_uncapped(p, {x(0), x(1)}); };
  const Eigen::VectorXd grad = oracle::finite_difference(f, Eigen::Vector2d(1.0, 1.0), 1e-6);
  EXPECT_GT(grad(0), 0.0);
  EXPECT_GT(grad(1), 0.0);

  const GpResult from_full = wsr_maximize(p);
  EXPECT_EQ(from_full.alloc.powers_w, Eigen::Vector2d(1.0, 1.0));
  EXPECT_NEAR(uncapped_wsr(p, from_full.alloc.powers_w), 2.0 * std::log2(1.0 + 1.0 / 0.6), 1e-12);

  GpConfig given;
  given.init = GpInit::kGiven;
  const GpResult from_corner = wsr_maximize(p, given, Eigen::VectorXd(Eigen::Vector2d(1.0, 0.01)));
  EXPECT_GE(uncapped_wsr(p, from_corner.alloc.powers_w), 0.99 * grid);
}

TEST(WsrMaximize, ModerateInterferenceTwoLinkMatchesGridOracle) {
  const LinkProblem p = two_link(0.1, Eigen::Vector2d(1.0, 0.6));
  const double grid = oracle::grid_best_wsr(p, 201, GpConfig{}.p_floor_frac);
  EXPECT_GE(uncapped_wsr(p, wsr_maximize(p).alloc.powers_w), 0.99 * grid);
}

TEST(WsrMaximize, StrongInterferenceSwitchesWeakLinkOff) {
  LinkProblem p;
  p.gain.resize(2, 2);
  p.gain << 1.0, 5.0, 5.0, 0.05;
  p.weights = Eigen::Vector2d(1.0, 0.01);
  p.downlink = Eigen::Vector2i(1, 0);
  p.noise_w = Eigen::Vector2d(0.01, 0.01);
  p.p_max_w = Eigen::Vector2d(1.0, 1.0);
  p.bandwidth_hz = 1.0;
  const GpResult r = wsr_maximize(p);
  const double grid = oracle::grid_best_wsr(p, 201, GpConfig{}.p_floor_frac);
  EXPECT_GE(uncapped_wsr(p, r.alloc.powers_w), 0.99 * grid);
  EXPECT_LT(r.alloc.powers_w(1), 1e-4);
  EXPECT_DOUBLE_EQ(r.alloc.powers_w(0), 1.0);
}

TEST(WsrMaximize, TraceAscendsAndOutputsFeasible) {
  std::mt19937_64 rng(17);
  int converged = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const LinkProblem p = oracle::random_problem(4, rng);
    const GpResult r = wsr_maximize(p);
    ASSERT_FALSE(r.objective_trace.empty());
    for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
      ASSERT_GE(r.objective_trace[k], r.objective_trace[k - 1] * (1 - 1e-9));
    }
    const double floor = 1e-8;
    for (Eigen::Index i = 0; i < 4; ++i) {
      ASSERT_GE(r.alloc.powers_w(i), floor * p.p_max_w(i) - 1e-12);
      ASSERT_LE(r.alloc.powers_w(i), p.p_max_w(i) + 1e-12);
    }
    // The returned point is never worse than the full-power start.
    ASSERT_GE(uncapped_wsr(p, r.alloc.powers_w), uncapped_wsr(p, p.p_max_w) * (1 - 1e-9));
    converged += r.converged ? 1 : 0;
  }
  EXPECT_GE(converged, 190);
}

TEST(WsrMaximize, GivenInitialPointIsUsed) {
  const LinkProblem p = two_link(0.5, Eigen::Vector2d(1.0, 1.0));
  GpConfig cfg;
  cfg.init = GpInit::kGiven;
  cfg.outer_max_iters = 1;
  const Eigen::Vector2d start(0.5, 0.01);
  const GpResult r = wsr_maximize(p, cfg, Eigen::VectorXd(start));
  EXPECT_NEAR(r.objective_trace.front(), uncapped_wsr(p, start), 1e-12);
  EXPECT_THROW(wsr_maximize(p, cfg), std::invalid_argument);
}

TEST(WsrMaximize, ReceiverScalingLeavesPowersUnchanged) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const LinkProblem p = oracle::random_problem(3, rng);
    LinkProblem scaled = p;
    const double c = 37.0;
    scaled.gain.row(1) *= c;
    scaled.noise_w(1) *= c;
    const GpResult a = wsr_maximize(p);
    const GpResult b = wsr_maximize(scaled);
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(b.alloc.powers_w(i) / a.alloc.powers_w(i), 1.0, 1e-6);
  }
}

TEST(WsrMaximize, ErrorPaths) {
  LinkProblem empty;
  EXPECT_THROW(wsr_maximize(empty), std::invalid_argument);
  LinkProblem bad = two_link(0.5, Eigen::Vector2d(1.0, 1.0));
  bad.gain(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(wsr_maximize(bad), std::invalid_argument);
}

TEST(WsrMaximize, MaxIterationsReturnsBestWithoutThrowing) {
  std::mt19937_64 rng(29);
  const LinkProblem p = oracle::random_problem(4, rng);
  GpConfig cfg;
  cfg.outer_max_iters = 1;
  cfg.outer_tol = 1e-300;
  const GpResult r = wsr_maximize(p, cfg);
  EXPECT_EQ(r.outer_iters, 1);
  EXPECT_FALSE(r.converged);
  EXPECT_GE(r.alloc.wsr_bps, 0.0);
}
