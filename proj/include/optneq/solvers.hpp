#pragma once

#include "optneq/common.hpp"
#include "optneq/graph.hpp"
#include "optneq/problem.hpp"
#include "optneq/schedule.hpp"

#include <optional>
#include <vector>

namespace optneq {

/// Stacked iterates of all agents. Row i of `x` is agent i's copy of the
/// decision vector, row i of `y` its tracker, and `last_g` the regularized map
/// evaluated at the current iterate (sampled, for the stochastic method).
/// Invariant: column means of `y` and `last_g` agree.
struct SolverState {
  Matrix x;
  Matrix y;
  Matrix last_g;
  long k = 0;
};

/// Column mean of a stacked matrix.
Vector column_mean(const Matrix& a);

/// Relative gap |mean(y) - mean(last_g)| / rms row norm of last_g.
double tracking_deviation(const SolverState& s);

/// Iteratively regularized Push-Pull over a directed network:
///   x_{k+1} = R (x_k - diag(gamma_k) y_k)
///   y_{k+1} = C y_k + G_{k+1}(x_{k+1}) - G_k(x_k),  G_k = F + lambda_k grad f
class IrPushPull {
 public:
  /// Throws ConfigError when R, C, the schedule or the per-agent step
  /// multipliers violate their assumptions.
  IrPushPull(const ProblemInstance& inst, ScheduleParams sched, const MixingMatrix& r,
             const MixingMatrix& c, std::vector<double> step_multipliers = {});

  SolverState init(const Matrix& x0) const;
  /// Advances one iteration; throws DivergenceError on non-finite iterates.
  void step(SolverState& s) const;

  const ScheduleParams& schedule() const { return sched_; }

 private:
  const ProblemInstance& inst_;
  ScheduleParams sched_;
  const MixingMatrix& r_;
  const MixingMatrix& c_;
  std::vector<double> multipliers_;
};

/// Iteratively regularized distributed stochastic gradient tracking over an
/// undirected network with doubly stochastic W. Sample path `path` draws its
/// noise from keys {seed, path, k, agent}.
class IrDsgt {
 public:
  IrDsgt(const ProblemInstance& inst, ScheduleParams sched, const MixingMatrix& w,
         std::uint64_t seed, std::uint64_t path);

  SolverState init(const Matrix& x0) const;
  void step(SolverState& s) const;

  const ScheduleParams& schedule() const { return sched_; }

 private:
  NoiseKey key(long k) const { return {seed_, path_, static_cast<std::uint64_t>(k), 0}; }

  const ProblemInstance& inst_;
  ScheduleParams sched_;
  const MixingMatrix& w_;
  std::uint64_t seed_;
  std::uint64_t path_;
};

// ---------------------------------------------------------------------------
// Regularized subproblem oracle

enum class TikhonovMethod {
  Forward,  ///< z <- z - s (F(z) + lambda grad f(z))
  Newton    ///< Newton on F + lambda grad f with Armijo backtracking on the residual
};

struct TikhonovOptions {
  double tolerance = 1e-10;
  int max_iterations = 100000;
  /// Forward stepsize; estimated from the strong monotonicity bound and sampled
  /// Lipschitz quotients when empty.
  std::optional<double> stepsize;
  TikhonovMethod method = TikhonovMethod::Newton;
  std::optional<Vector> start;
  std::uint64_t seed = 17;
};

struct TikhonovResult {
  Vector x;
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Solves F(x) + lambda grad f(x) = 0. When the iteration budget runs out the
/// best iterate is returned with `converged == false`.
TikhonovResult tikhonov_solve(const ProblemInstance& inst, double lambda,
                              const TikhonovOptions& opts = {});

struct TrajectoryPoint {
  double lambda;
  Vector x;
  double residual;
  bool converged;
};

struct OracleSolution {
  Vector x_star;
  std::vector<TrajectoryPoint> trajectory;
  std::vector<double> tolerances;
  bool converged() const;
};

/// Warm-started sweep of regularized solves along a decreasing lambda sequence.
OracleSolution sequential_regularization(const ProblemInstance& inst,
                                         const std::vector<double>& lambdas,
                                         const std::vector<double>& tolerances,
                                         TikhonovOptions opts = {});

/// Geometric lambda grid from `first` down to `last` with `count` points.
std::vector<double> geometric_lambdas(double first, double last, int count);

}  // namespace optneq
