#include "optneq/solvers.hpp"

#include "optneq/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace optneq {

Vector column_mean(const Matrix& a) {
  return a.colwise().mean().transpose();
}

double tracking_deviation(const SolverState& s) {
  const double gap = (column_mean(s.y) - column_mean(s.last_g)).norm();
  const double scale = s.last_g.norm() / std::sqrt(static_cast<double>(s.last_g.rows()));
  return scale > 0.0 ? gap / scale : gap;
}

namespace {

void check_finite(const SolverState& s) {
  const double worst = std::max(kernels::max_abs_or_inf(s.x), kernels::max_abs_or_inf(s.y));
  if (!std::isfinite(worst)) throw DivergenceError(s.k, worst);
}

void check_start(const ProblemInstance& inst, const Matrix& x0) {
  if (x0.rows() != inst.agents() || x0.cols() != inst.dimension())
    throw ConfigError("initial point must be agents x dimension");
}

}  // namespace

// ---------------------------------------------------------------------------

IrPushPull::IrPushPull(const ProblemInstance& inst, ScheduleParams sched, const MixingMatrix& r,
                       const MixingMatrix& c, std::vector<double> step_multipliers)
    : inst_(inst), sched_(sched), r_(r), c_(c), multipliers_(std::move(step_multipliers)) {
  const int m = inst.agents();
  if (r.kind() != Stochasticity::Row && r.kind() != Stochasticity::Doubly)
    throw ConfigError("pull matrix R must be row-stochastic");
  if (c.kind() != Stochasticity::Column && c.kind() != Stochasticity::Doubly)
    throw ConfigError("push matrix C must be column-stochastic");
  if (r.size() != m || c.size() != m) throw ConfigError("mixing matrices must be agents x agents");
  if (!check_root_intersection(r, c))
    throw ConfigError("root sets of G_R and G_{C^T} do not intersect");
  sched_.mode = ScheduleMode::PushPull;
  if (!validate_schedule(sched_).pass())
    throw ConfigError("schedule violates the Push-Pull exponent conditions");
  if (multipliers_.empty()) multipliers_.assign(m, 1.0);
  if (static_cast<int>(multipliers_.size()) != m) throw ConfigError("one step multiplier per agent");
  for (double t : multipliers_) {
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("step multipliers must lie in (0, 1]");
  }
}

SolverState IrPushPull::init(const Matrix& x0) const {
  check_start(inst_, x0);
  SolverState s;
  s.x = x0;
  kernels::regularized_rows(inst_, s.x, schedule_at(sched_, 0).lambda, s.last_g);
  s.y = s.last_g;
  s.k = 0;
  check_finite(s);
  return s;
}

void IrPushPull::step(SolverState& s) const {
  const auto now = schedule_at(sched_, s.k);
  const auto next = schedule_at(sched_, s.k + 1);
  std::vector<double> steps(multipliers_.size());
  for (std::size_t i = 0; i < steps.size(); ++i) steps[i] = multipliers_[i] * now.gamma;

  Matrix z, g_next, cy;
  kernels::axpy_rows(s.x, steps, s.y, z);
  kernels::mix(r_, z, s.x);
  kernels::regularized_rows(inst_, s.x, next.lambda, g_next);
  kernels::mix(c_, s.y, cy);
  s.y = cy + g_next - s.last_g;
  s.last_g = std::move(g_next);
  ++s.k;
  check_finite(s);
}

// ---------------------------------------------------------------------------

IrDsgt::IrDsgt(const ProblemInstance& inst, ScheduleParams sched, const MixingMatrix& w,
               std::uint64_t seed, std::uint64_t path)
    : inst_(inst), sched_(sched), w_(w), seed_(seed), path_(path) {
  if (w.kind() != Stochasticity::Doubly) throw ConfigError("W must be doubly stochastic");
  if (w.size() != inst.agents()) throw ConfigError("W must be agents x agents");
  if (!induced_digraph(w.weights()).weakly_connected())
    throw ConfigError("communication graph of W is not connected");
  sched_.mode = ScheduleMode::Dsgt;
  if (!validate_schedule(sched_).pass())
    throw ConfigError("schedule violates the DSGT exponent conditions");
}

SolverState IrDsgt::init(const Matrix& x0) const {
  check_start(inst_, x0);
  SolverState s;
  s.x = x0;
  kernels::sampled_regularized_rows(inst_, s.x, schedule_at(sched_, 0).lambda, key(0), s.last_g);
  s.y = s.last_g;
  s.k = 0;
  check_finite(s);
  return s;
}

void IrDsgt::step(SolverState& s) const {
  const auto now = schedule_at(sched_, s.k);
  const auto next = schedule_at(sched_, s.k + 1);
  const std::vector<double> steps(inst_.agents(), now.gamma);

  Matrix z, g_next, wy;
  kernels::axpy_rows(s.x, steps, s.y, z);
  kernels::mix(w_, z, s.x);
  kernels::sampled_regularized_rows(inst_, s.x, next.lambda, key(s.k + 1), g_next);
  kernels::mix(w_, s.y, wy);
  s.y = wy + g_next - s.last_g;
  s.last_g = std::move(g_next);
  ++s.k;
  check_finite(s);
}

// ---------------------------------------------------------------------------

namespace {

double estimate_lipschitz(const ProblemInstance& inst, double lambda, const Vector& center,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto n = center.size();
  const double radius = std::max(1.0, center.norm());
  double best = 0.0;
  for (int trial = 0; trial < 32; ++trial) {
    Vector dx(n), dy(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      dx(j) = gauss(rng);
      dy(j) = gauss(rng);
    }
    const Vector x = center + radius * dx;
    const Vector y = center + radius * dy;
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    best = std::max(best, (inst.regularized_map(x, lambda) - inst.regularized_map(y, lambda)).norm() / dist);
  }
  return best;
}

TikhonovResult forward_solve(const ProblemInstance& inst, double lambda, const TikhonovOptions& opts,
                             Vector z) {
  double s;
  if (opts.stepsize) {
    s = *opts.stepsize;
  } else {
    const double mu = lambda * inst.strong_convexity();
    const double lip = 2.0 * estimate_lipschitz(inst, lambda, z, opts.seed);
    if (!(mu > 0.0) || !(lip > 0.0)) throw ConfigError("cannot estimate a forward stepsize");
    s = mu / (lip * lip);
  }
  TikhonovResult best{z, inst.regularized_map(z, lambda).norm(), false, 0};
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Vector g = inst.regularized_map(z, lambda);
    const double res = g.norm();
    if (!std::isfinite(res)) break;
    if (res < best.residual) best = {z, res, false, it};
    if (res <= opts.tolerance) return {z, res, true, it};
    z -= s * g;
  }
  best.iterations = opts.max_iterations;
  return best;
}

TikhonovResult newton_solve(const ProblemInstance& inst, double lambda, const TikhonovOptions& opts,
                            Vector z) {
  Vector g = inst.regularized_map(z, lambda);
  double res = g.norm();
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (res <= opts.tolerance) return {z, res, true, it};
    // At a kink of a piecewise smooth map the Jacobian at z may belong to the
    // wrong piece. Retry with the Jacobian one small step along the previous
    // direction, which picks the piece the direction actually enters.
    Eigen::MatrixXd jac = inst.regularized_jacobian(z, lambda);
    Vector trial, g_trial;
    bool accepted = false;
    for (int probe = 0; probe < 4 && !accepted; ++probe) {
      const Vector d = -jac.partialPivLu().solve(g);
      double t = 1.0;
      trial = z + d;
      g_trial = inst.regularized_map(trial, lambda);
      for (int halvings = 0; !(g_trial.norm() <= (1.0 - 1e-4 * t) * res) && halvings < 40; ++halvings) {
        t *= 0.5;
        trial = z + t * d;
        g_trial = inst.regularized_map(trial, lambda);
      }
      accepted = g_trial.norm() <= (1.0 - 1e-4 * t) * res;
      if (!accepted) {
        const double dn = d.norm();
        if (!(dn > 0.0) || !std::isfinite(dn)) break;
        const double h = std::pow(10.0, -10 + 2 * probe) * std::max(1.0, z.norm());
        jac = inst.regularized_jacobian(z + (h / dn) * d, lambda);
      }
    }
    if (!accepted) return {z, res, false, it};  // stalled at rounding level
    z = std::move(trial);
    g = std::move(g_trial);
    res = g.norm();
  }
  return {z, res, res <= opts.tolerance, opts.max_iterations};
}

}  // namespace

TikhonovResult tikhonov_solve(const ProblemInstance& inst, double lambda, const TikhonovOptions& opts) {
  if (!(lambda > 0.0)) throw ConfigError("regularization parameter must be positive");
  Vector z = opts.start ? *opts.start : Vector::Zero(inst.dimension());
  if (z.size() != inst.dimension()) throw ConfigError("start point has wrong dimension");
  return opts.method == TikhonovMethod::Forward ? forward_solve(inst, lambda, opts, std::move(z))
                                                : newton_solve(inst, lambda, opts, std::move(z));
}

bool OracleSolution::converged() const {
  return std::all_of(trajectory.begin(), trajectory.end(), [](const auto& p) { return p.converged; });
}

OracleSolution sequential_regularization(const ProblemInstance& inst, const std::vector<double>& lambdas,
                                         const std::vector<double>& tolerances, TikhonovOptions opts) {
  if (lambdas.empty() || lambdas.size() != tolerances.size())
    throw ConfigError("need one tolerance per lambda");
  for (std::size_t j = 1; j < lambdas.size(); ++j) {
    if (!(lambdas[j] < lambdas[j - 1])) throw ConfigError("lambda sequence must be strictly decreasing");
  }
  OracleSolution sol;
  sol.tolerances = tolerances;
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    opts.tolerance = tolerances[j];
    auto r = tikhonov_solve(inst, lambdas[j], opts);
    opts.start = r.x;
    sol.trajectory.push_back({lambdas[j], r.x, r.residual, r.converged});
  }
  sol.x_star = sol.trajectory.back().x;
  return sol;
}

std::vector<double> geometric_lambdas(double first, double last, int count) {
  if (count < 1 || !(first > 0.0) || !(last > 0.0)) throw ConfigError("bad lambda grid");
  std::vector<double> out;
  if (count == 1) return {first};
  const double ratio = std::pow(last / first, 1.0 / (count - 1));
  for (int j = 0; j < count; ++j) out.push_back(first * std::pow(ratio, j));
  out.back() = last;
  return out;
}

}  // namespace optneq
