#pragma once

#include "optneq/common.hpp"
#include "optneq/problem.hpp"
#include "optneq/schedule.hpp"
#include "optneq/solvers.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace optneq {

/// One logged checkpoint. `upper` needs the next iterate and is filled in by
/// the caller; oracle distances are empty when no oracle was supplied.
struct MetricRow {
  long k = 0;
  double lower = 0.0;
  std::optional<double> upper;
  double consensus_x = 0.0;
  double consensus_y = 0.0;
  std::optional<double> dist_tikhonov;
  std::optional<double> dist_opt;

  bool operator==(const MetricRow&) const = default;
};

inline constexpr std::string_view kMetricsHeader =
    "k,lower,upper,consensus_x,consensus_y,dist_tikhonov,dist_opt";

/// Which average defines x-bar for a Push-Pull run. DSGT always uses the
/// uniform average.
enum class Averaging { Weighted, Uniform };

struct MetricContext {
  const ProblemInstance* inst = nullptr;
  ScheduleParams schedule;
  /// Left Perron vector of R (sums to m). Empty means uniform weights.
  std::optional<Vector> u;
  /// Right Perron vector of C (sums to m). Empty means the all-ones vector.
  std::optional<Vector> v;
  /// Ground truth x*; enables dist_opt.
  const OracleSolution* oracle = nullptr;
  /// Solve x*_{lambda_k} at each checkpoint for dist_tikhonov.
  bool tikhonov = false;
  TikhonovOptions tikhonov_options = {.tolerance = 1e-9, .max_iterations = 200, .stepsize = {}, .start = {}};
};

/// x-bar = u^T X / m, or the plain column mean when `u` is empty.
Vector weighted_average(const Matrix& x, const std::optional<Vector>& u);

MetricRow compute_metrics(const SolverState& s, const MetricContext& ctx);

/// Numeric value of a named CSV column; throws ConfigError on an unknown name
/// or a missing optional entry.
double field_value(const MetricRow& row, std::string_view field);

struct RateFit {
  long k_lo = 0;
  long k_hi = 0;
  std::size_t points = 0;
  double slope = 0.0;
  double bound_const = 0.0;
};

/// Least-squares slope of log e_k against log(k + offset) over [k_lo, k_hi]
/// and the bound constant max e_k (k + offset)^p. Throws NumericalError on
/// nonpositive values and ConfigError on an empty window.
RateFit fit_decay(const std::vector<MetricRow>& rows, std::string_view field, long k_lo, long k_hi,
                  double exponent, double offset);
RateFit fit_decay(const std::vector<long>& ks, const std::vector<double>& values, long k_lo, long k_hi,
                  double exponent, double offset);

/// Bound constants on the two arithmetic halves of a window. `ratio` is
/// second / first; a value <= 1 means the scaled error is not growing.
struct BoundGrowth {
  RateFit first;
  RateFit second;
  double ratio = 0.0;
};

BoundGrowth bound_growth(const std::vector<long>& ks, const std::vector<double>& values, long k_lo,
                         long k_hi, double exponent, double offset);

struct PathAggregate {
  std::vector<MetricRow> mean;
  std::vector<MetricRow> min;
  std::vector<MetricRow> max;
};

/// Per-checkpoint mean, min and max across sample paths. An optional field is
/// aggregated only when every path has it. Throws ConfigError on misaligned logs.
PathAggregate aggregate_paths(const std::vector<std::vector<MetricRow>>& runs);

std::string metrics_csv(const std::vector<MetricRow>& rows);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

}  // namespace optneq
