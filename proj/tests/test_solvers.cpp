#include "optneq/solvers.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

#include <cmath>
#include <random>

using namespace optneq;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

ScheduleParams sched(double a, double b, double offset = 10.0, double gamma_hat = 1.0) {
  ScheduleParams p;
  p.gamma_hat = gamma_hat;
  p.offset = offset;
  p.a = a;
  p.b = b;
  return p;
}

MixingMatrix one_by_one() { return MixingMatrix(Eigen::MatrixXd::Ones(1, 1), Stochasticity::Doubly); }

Matrix uniform_start(const CournotParams& p, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix x(m, p.players());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < p.players(); ++j) x(i, j) = std::uniform_real_distribution<double>(0.0, p.caps(j))(rng);
  }
  return x;
}

CournotSpec cournot(int m, BSpec b = GaussianB{}) {
  CournotSpec s;
  s.m = m;
  s.rank = m / 2;
  s.b = b;
  return s;
}

double rel(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace

// ---------------------------------------------------------------------------
// Push-Pull

TEST(IrPushPull, SingleAgentInitIsCentralizedMap) {
  const auto one = one_by_one();
  const auto toy = make_skew_toy(1, vec2(1.0, 1.0));
  IrPushPull solo(toy, sched(0.5, 0.3), one, one);
  Matrix x0(1, 2);
  x0 << 2.0, -1.0;
  const auto s = solo.init(x0);
  const double l0 = std::pow(10.0, -0.3);
  const Vector want = vec2(-1.0, -2.0) + l0 * vec2(1.0, -2.0);  // A x + lambda_0 (x - c)
  EXPECT_LE((s.y.row(0).transpose() - want).norm(), 1e-15);
  EXPECT_EQ(s.y, s.last_g);
  EXPECT_EQ(s.k, 0);
}

TEST(IrPushPull, ZeroMapAtOriginGivesZeroTracker) {
  auto spec = cournot(4);
  spec.b = GaussianB{0.0, 0.0};
  const auto prob = build_cournot(spec);
  const auto t = build_topology(TopologyKind::StarDigraph, 4, std::nullopt, 1);
  const auto r = build_pull_matrix(t, {1, 1, 1, 1});
  const auto c = build_push_matrix(t, {1, 1, 1, 1});
  IrPushPull pp(prob.instance, sched(0.5, 0.3), r, c);
  EXPECT_EQ(pp.init(Matrix::Zero(4, 4)).y, Matrix::Zero(4, 4));
}

TEST(IrPushPull, SingleAgentReducesToCentralizedIteration) {
  const auto toy = make_skew_toy(1, vec2(1.0, 1.0));
  const auto one = one_by_one();
  const auto p = sched(0.5, 0.3, 10.0);
  IrPushPull pp(toy, p, one, one);
  Matrix x0(1, 2);
  x0 << 3.0, -2.0;
  auto s = pp.init(x0);
  Vector z = x0.row(0).transpose();
  Eigen::Matrix2d a;
  a << 0.0, 1.0, -1.0, 0.0;
  for (int k = 0; k < 2000; ++k) {
    const double gamma = 1.0 / std::pow(k + 10.0, 0.5);
    const double lambda = 1.0 / std::pow(k + 10.0, 0.3);
    z = z - gamma * (a * z + lambda * (z - vec2(1.0, 1.0)));
    pp.step(s);
    ASSERT_LE(rel(s.x.row(0).transpose(), z), 1e-12) << k;
  }
}

TEST(IrPushPull, TwoAgentHandStep) {
  const auto toy = make_skew_toy(2, vec2(1.0, 1.0));
  const MixingMatrix half(Eigen::MatrixXd::Constant(2, 2, 0.5), Stochasticity::Doubly);
  IrPushPull pp(toy, sched(0.5, 0.3, 1.0), half, half);
  Matrix x0(2, 2);
  x0 << 1.0, 1.0, 0.0, 2.0;
  auto s = pp.init(x0);
  // G_i(x) = (A x + lambda (x - c)) / 2 at lambda_0 = 1.
  EXPECT_LE((s.y.row(0).transpose() - vec2(0.5, -0.5)).norm(), 1e-15);
  EXPECT_LE((s.y.row(1).transpose() - vec2(0.5, 0.5)).norm(), 1e-15);
  pp.step(s);
  // gamma_0 = 1: rows become (0.5, 1.5) and (-0.5, 1.5), averaged to (0, 1.5).
  for (int i = 0; i < 2; ++i) EXPECT_LE((s.x.row(i).transpose() - vec2(0.0, 1.5)).norm(), 1e-15);
  const double l1 = std::pow(2.0, -0.3);
  const Vector g1 = 0.5 * vec2(1.5 - l1, 0.5 * l1);
  EXPECT_LE((s.y.row(0).transpose() - (vec2(0.5, 0.0) + g1 - vec2(0.5, -0.5))).norm(), 1e-15);
  EXPECT_LE((s.y.row(1).transpose() - (vec2(0.5, 0.0) + g1 - vec2(0.5, 0.5))).norm(), 1e-15);
}

TEST(IrPushPull, ZeroStepReducesToMixing) {
  const auto prob = build_cournot(cournot(6));
  const auto t = build_topology(TopologyKind::StarDigraph, 6, std::nullopt, 1);
  const auto r = build_pull_matrix(t, std::vector<double>(6, 1.0));
  const auto c = build_push_matrix(t, std::vector<double>(6, 1.0));
  // Tiny multipliers push the step to rounding level.
  IrPushPull pp(prob.instance, sched(0.5, 0.3), r, c, std::vector<double>(6, 1e-300));
  auto s = pp.init(uniform_start(*prob.params, 6, 2));
  const Matrix x_before = s.x;
  pp.step(s);
  EXPECT_LE((s.x - r.weights() * x_before).cwiseAbs().maxCoeff(), 1e-12 * x_before.cwiseAbs().maxCoeff());
}

TEST(IrPushPull, TrackingAndWeightedAverageIdentities) {
  const auto prob = build_cournot(cournot(10));
  const auto t = build_topology(TopologyKind::StarDigraph, 10, std::nullopt, 1);
  const auto r = build_pull_matrix(t, std::vector<double>(10, 1.0));
  const auto c = build_push_matrix(t, std::vector<double>(10, 1.0));
  const Vector u = *spectral_report(&r, &c, nullptr).u;
  const auto p = sched(0.5, 0.3, 100.0);
  IrPushPull pp(prob.instance, p, r, c);
  auto s = pp.init(uniform_start(*prob.params, 10, 1));
  double worst_tracking = 0.0, worst_weighted = 0.0;
  for (int k = 0; k < 5000; ++k) {
    const double gamma = schedule_at(p, k).gamma;
    const Vector predicted = (u.transpose() * (s.x - gamma * s.y)).transpose() / 10.0;
    pp.step(s);
    const Vector got = (u.transpose() * s.x).transpose() / 10.0;
    worst_weighted = std::max(worst_weighted, (got - predicted).norm() / std::max(1.0, predicted.norm()));
    worst_tracking = std::max(worst_tracking, tracking_deviation(s));
  }
  EXPECT_LE(worst_tracking, 1e-8);
  EXPECT_LE(worst_weighted, 1e-10);
}

TEST(IrPushPull, RejectsInvalidSetups) {
  const auto prob = build_cournot(cournot(3));
  Topology chain(3, true, {{0, 1}, {1, 2}});
  const auto r = build_pull_matrix(chain, {1, 1, 1});
  const auto c = build_push_matrix(chain, {1, 1, 1});  // G_{C^T} roots {2}, G_R roots {0}
  const auto star = build_topology(TopologyKind::StarDigraph, 3, std::nullopt, 1);
  const auto rs = build_pull_matrix(star, {1, 1, 1});
  const auto cs = build_push_matrix(star, {1, 1, 1});
  EXPECT_THROW(IrPushPull(prob.instance, sched(0.5, 0.3), r, c), ConfigError);
  EXPECT_THROW(IrPushPull(prob.instance, sched(0.5, 0.3), cs, cs), ConfigError);
  EXPECT_THROW(IrPushPull(prob.instance, sched(0.5, 0.3), rs, rs), ConfigError);
  EXPECT_THROW(IrPushPull(prob.instance, sched(0.5, 0.4), rs, cs), ConfigError);
  EXPECT_THROW(IrPushPull(prob.instance, sched(0.5, 0.3), rs, cs, {1.0, 0.0, 1.0}), ConfigError);
  EXPECT_THROW(IrPushPull(prob.instance, sched(0.5, 0.3), rs, cs, {1.0, 1.0}), ConfigError);
  EXPECT_NO_THROW(IrPushPull(prob.instance, sched(0.5, 0.3), rs, cs, {1.0, 0.5, 0.25}));
  IrPushPull ok(prob.instance, sched(0.5, 0.3), rs, cs);
  EXPECT_THROW(ok.init(Matrix::Zero(3, 2)), ConfigError);
}

TEST(IrPushPull, OverflowRaisesDivergence) {
  const auto prob = build_cournot(cournot(4));
  const auto t = build_topology(TopologyKind::StarDigraph, 4, std::nullopt, 1);
  const auto r = build_pull_matrix(t, std::vector<double>(4, 1.0));
  const auto c = build_push_matrix(t, std::vector<double>(4, 1.0));
  IrPushPull pp(prob.instance, sched(0.5, 0.3, 10.0, 1e3), r, c);
  auto s = pp.init(uniform_start(*prob.params, 4, 3));
  try {
    for (int k = 0; k < 10000; ++k) pp.step(s);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.iteration(), 0);
    EXPECT_LE(e.iteration(), 10000);
  }
}

// ---------------------------------------------------------------------------
// DSGT

namespace {

struct DsgtSetup {
  CournotProblem prob;
  MixingMatrix w;
};

DsgtSetup petersen(BSpec b) {
  return {build_cournot(cournot(10, b)),
          build_gossip_matrix(build_topology(TopologyKind::Petersen, 10, std::nullopt, 1))};
}

}  // namespace

TEST(IrDsgt, TrackingAndAveragedIdentities) {
  const auto d = petersen(UniformNoise{1.0, 10.0});
  const auto p = sched(0.5, 0.4, 100.0);
  IrDsgt alg(d.prob.instance, p, d.w, 1, 0);
  auto s = alg.init(uniform_start(*d.prob.params, 10, 1));
  double worst_tracking = 0.0, worst_avg = 0.0;
  for (int k = 0; k < 5000; ++k) {
    const double gamma = schedule_at(p, k).gamma;
    const Vector predicted = column_mean(s.x) - gamma * column_mean(s.y);
    alg.step(s);
    worst_avg = std::max(worst_avg, rel(column_mean(s.x), predicted));
    worst_tracking = std::max(worst_tracking, tracking_deviation(s));
  }
  EXPECT_LE(worst_tracking, 1e-8);
  EXPECT_LE(worst_avg, 1e-12);
}

TEST(IrDsgt, DegenerateNoiseMatchesPushPullWithSameMatrix) {
  const auto d = petersen(UniformNoise{5.5, 5.5});
  IrDsgt dsgt(d.prob.instance, sched(0.5, 0.3), d.w, 1, 0);
  IrPushPull pp(d.prob.instance, sched(0.5, 0.3), d.w, d.w);
  const Matrix x0 = uniform_start(*d.prob.params, 10, 5);
  auto a = dsgt.init(x0);
  auto b = pp.init(x0);
  EXPECT_EQ(a.y, b.y);
  for (int k = 0; k < 500; ++k) {
    dsgt.step(a);
    pp.step(b);
    ASSERT_LE((a.x - b.x).norm(), 1e-12 * std::max(1.0, b.x.norm())) << k;
    ASSERT_LE((a.y - b.y).norm(), 1e-12 * std::max(1.0, b.y.norm())) << k;
  }
}

TEST(IrDsgt, PathsAreReproducibleAndDistinct) {
  const auto d = petersen(UniformNoise{1.0, 10.0});
  const Matrix x0 = uniform_start(*d.prob.params, 10, 5);
  IrDsgt p0(d.prob.instance, sched(0.5, 0.4), d.w, 3, 0);
  IrDsgt p0_again(d.prob.instance, sched(0.5, 0.4), d.w, 3, 0);
  IrDsgt p1(d.prob.instance, sched(0.5, 0.4), d.w, 3, 1);
  auto a = p0.init(x0), b = p0_again.init(x0), c = p1.init(x0);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.y, c.y);
  for (int k = 0; k < 50; ++k) {
    p0.step(a);
    p0_again.step(b);
    p1.step(c);
  }
  EXPECT_EQ(a.x, b.x);
  EXPECT_NE(a.x, c.x);
}

TEST(IrDsgt, SingleAgentReducesToCentralizedIteration) {
  const auto toy = make_skew_toy(1, vec2(1.0, 2.0));
  const auto one = one_by_one();
  IrDsgt alg(toy, sched(0.5, 0.4), one, 1, 0);
  Matrix x0(1, 2);
  x0 << -1.0, 4.0;
  auto s = alg.init(x0);
  Vector z = x0.row(0).transpose();
  Eigen::Matrix2d a;
  a << 0.0, 1.0, -1.0, 0.0;
  for (int k = 0; k < 2000; ++k) {
    z = z - std::pow(k + 10.0, -0.5) * (a * z + std::pow(k + 10.0, -0.4) * (z - vec2(1.0, 2.0)));
    alg.step(s);
    ASSERT_LE(rel(s.x.row(0).transpose(), z), 1e-12);
  }
}

TEST(IrDsgt, RejectsInvalidSetups) {
  const auto d = petersen(UniformNoise{1.0, 10.0});
  const auto t = build_topology(TopologyKind::StarDigraph, 10, std::nullopt, 1);
  const auto r = build_pull_matrix(t, std::vector<double>(10, 1.0));
  EXPECT_THROW(IrDsgt(d.prob.instance, sched(0.5, 0.4), r, 1, 0), ConfigError);
  const MixingMatrix isolated(Eigen::MatrixXd::Identity(10, 10), Stochasticity::Doubly);
  EXPECT_THROW(IrDsgt(d.prob.instance, sched(0.5, 0.4), isolated, 1, 0), ConfigError);
  EXPECT_THROW(IrDsgt(d.prob.instance, sched(0.6, 0.3), d.w, 1, 0), ConfigError);
  EXPECT_NO_THROW(IrDsgt(d.prob.instance, sched(0.6, 0.175), d.w, 1, 0));
}

// ---------------------------------------------------------------------------
// Tikhonov oracle

TEST(Tikhonov, SkewToyHasClosedFormSolution) {
  const auto toy = make_skew_toy(3, vec2(1.0, 1.0));
  for (auto method : {TikhonovMethod::Newton, TikhonovMethod::Forward}) {
    TikhonovOptions o;
    o.method = method;
    o.tolerance = 1e-10;
    const auto r = tikhonov_solve(toy, 1.0, o);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.residual, 1e-9);
    EXPECT_LE((r.x - vec2(0.0, 1.0)).norm(), 1e-8);
  }
}

TEST(Tikhonov, ZeroTargetGivesOrigin) {
  const auto toy = make_skew_toy(2, Vector::Zero(2));
  TikhonovOptions o;
  o.start = vec2(3.0, -4.0);
  for (double lambda : {1.0, 1e-3, 1e-6}) {
    const auto r = tikhonov_solve(toy, lambda, o);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.x.norm(), 1e-9);
  }
}

TEST(Tikhonov, ForwardReportsBestIterateWhenBudgetRunsOut) {
  const auto toy = make_skew_toy(1, vec2(1.0, 1.0));
  TikhonovOptions o;
  o.method = TikhonovMethod::Forward;
  o.max_iterations = 3;
  o.start = vec2(10.0, 10.0);
  const auto r = tikhonov_solve(toy, 1.0, o);
  EXPECT_FALSE(r.converged);
  EXPECT_NEAR(r.residual, toy.regularized_map(r.x, 1.0).norm(), 1e-14);
  EXPECT_LT(r.residual, toy.regularized_map(*o.start, 1.0).norm());
}

TEST(Tikhonov, RejectsBadInput) {
  const auto toy = make_skew_toy(1, vec2(1.0, 1.0));
  EXPECT_THROW(tikhonov_solve(toy, 0.0), ConfigError);
  TikhonovOptions o;
  o.start = Vector::Zero(3);
  EXPECT_THROW(tikhonov_solve(toy, 1.0, o), ConfigError);
}

TEST(SequentialRegularization, SkewSweepFollowsClosedForm) {
  const auto toy = make_skew_toy(2, vec2(1.0, 1.0));
  const std::vector<double> lambdas{1.0, 0.1, 0.01, 0.001};
  const auto sol = sequential_regularization(toy, lambdas, std::vector<double>(4, 1e-12));
  EXPECT_TRUE(sol.converged());
  // |x*_lambda| = sqrt(2) lambda / sqrt(1 + lambda^2), about 1.414e-3 at the endpoint.
  EXPECT_NEAR(sol.x_star.norm(), std::sqrt(2.0) * 1e-3 / std::sqrt(1.0 + 1e-6), 1e-12);
  Eigen::Matrix2d a;
  a << 0.0, 1.0, -1.0, 0.0;
  for (const auto& pt : sol.trajectory) {
    const Vector closed = pt.lambda * (a + pt.lambda * Eigen::Matrix2d::Identity()).inverse() * vec2(1.0, 1.0);
    EXPECT_LE((pt.x - closed).norm(), 1e-10);
    EXPECT_LE(pt.residual, 1e-12);
  }
  const double first_gap = (sol.trajectory[1].x - sol.trajectory[0].x).norm();
  const double last_gap = (sol.trajectory[3].x - sol.trajectory[2].x).norm();
  EXPECT_LT(last_gap, first_gap);
}

TEST(SequentialRegularization, ZeroTargetStaysAtOrigin) {
  const auto toy = make_skew_toy(2, Vector::Zero(2));
  const auto sol = sequential_regularization(toy, {1.0, 0.1, 0.01}, {1e-12, 1e-12, 1e-12});
  for (const auto& pt : sol.trajectory) EXPECT_EQ(pt.x, Vector::Zero(2));
}

TEST(SequentialRegularization, RejectsNonDecreasingGrid) {
  const auto toy = make_skew_toy(1, vec2(1.0, 1.0));
  EXPECT_THROW(sequential_regularization(toy, {0.1, 1.0}, {1e-9, 1e-9}), ConfigError);
  EXPECT_THROW(sequential_regularization(toy, {1.0, 0.1}, {1e-9}), ConfigError);
}

TEST(SequentialRegularization, CournotSpotCheck) {
  const auto prob = build_cournot(cournot(5));
  const auto& inst = prob.instance;
  const auto lambdas = geometric_lambdas(1.0, 1e-10, 21);
  const auto sol = sequential_regularization(inst, lambdas, std::vector<double>(21, 1e-10));
  ASSERT_TRUE(sol.converged());
  EXPECT_LE(inst.total_map(sol.x_star).norm(), 1e-6);

  const double first_gap = (sol.trajectory[1].x - sol.trajectory[0].x).norm();
  const double last_gap = (sol.trajectory[20].x - sol.trajectory[19].x).norm();
  EXPECT_LT(last_gap, first_gap);

  // Other equilibria near x*: move along the null space of the map's Jacobian.
  const Eigen::MatrixXd jac = inst.regularized_jacobian(sol.x_star, 0.0);
  const Eigen::MatrixXd null = Eigen::FullPivLU<Eigen::MatrixXd>(jac).kernel();
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double f_star = inst.total_objective(sol.x_star);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    Vector coeff(null.cols());
    for (Eigen::Index j = 0; j < coeff.size(); ++j) coeff(j) = gauss(rng);
    const Vector z = sol.x_star + 1e-2 * null * coeff;
    if (inst.total_map(z).norm() > 1e-6) continue;
    ++checked;
    EXPECT_LE(f_star, inst.total_objective(z) + 1e-8);
  }
  EXPECT_GT(checked, 0);
}

TEST(GeometricLambdas, EndpointsAndRatio) {
  const auto g = geometric_lambdas(1.0, 1e-10, 21);
  ASSERT_EQ(g.size(), 21u);
  EXPECT_EQ(g.front(), 1.0);
  EXPECT_EQ(g.back(), 1e-10);
  for (std::size_t j = 1; j < g.size(); ++j) EXPECT_NEAR(g[j] / g[j - 1], std::pow(10.0, -0.5), 1e-12);
  EXPECT_THROW(geometric_lambdas(1.0, 0.0, 3), ConfigError);
}
