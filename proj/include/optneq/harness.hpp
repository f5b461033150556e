#pragma once

// Experiment configuration, validation and the run driver behind the CLI.

#include "optneq/graph.hpp"
#include "optneq/metrics.hpp"
#include "optneq/problem.hpp"
#include "optneq/schedule.hpp"
#include "optneq/solvers.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace optneq {

enum class Algorithm { IrPushPull, IrDsgt };
enum class PresetName { StarPP, RandomDigraphPP, PetersenDSGT, RandomUndirectedDSGT };

std::string to_string(Algorithm a);
std::string to_string(PresetName p);
PresetName preset_from_string(const std::string& name);

struct TopologySpec {
  TopologyKind kind = TopologyKind::StarDigraph;
  int m = 10;
  std::optional<int> edges;
  std::uint64_t seed = 1;
  bool operator==(const TopologySpec&) const = default;
};

/// One (a, b) exponent pair run under the shared schedule coefficients.
struct Variant {
  double a = 0.5;
  double b = 0.3;
  bool operator==(const Variant&) const = default;
};

/// Ground-truth x* by a warm-started geometric lambda sweep.
struct OracleSettings {
  bool enabled = true;
  double lambda_first = 1.0;
  double lambda_last = 1e-10;
  int count = 21;
  double tolerance = 1e-10;
  bool operator==(const OracleSettings&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  Algorithm algorithm = Algorithm::IrPushPull;
  TopologySpec topology;
  /// r_i = c_i for every node (Push-Pull only).
  double self_weight = 1.0;
  /// Coefficients gamma_hat, lambda, Gamma; a and b come from each variant.
  ScheduleParams schedule;
  std::vector<Variant> variants;
  CournotSpec problem;
  long iterations = 100000;
  long log_every = 100;
  int paths = 1;
  std::uint64_t noise_seed = 1;
  std::uint64_t init_seed = 1;
  Averaging averaging = Averaging::Weighted;
  OracleSettings oracle;
  /// Solve x*_{lambda_k} at every checkpoint for the dist_tikhonov column.
  bool tikhonov_metric = false;
  std::string output_dir;
  /// OpenMP workers; 0 keeps the runtime default. Never changes results.
  int threads = 0;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig preset(PresetName name);

std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);
/// Throws ConfigError on malformed or incomplete input.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Reads the config echo of a run manifest.
ExperimentConfig config_from_manifest(const std::filesystem::path& manifest);

// ---------------------------------------------------------------------------

struct ValidationCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
  /// Soft checks are reported but never fail the setup.
  bool hard = true;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool pass() const;
  const ValidationCheck* find(const std::string& name) const;
  std::string text() const;
  std::string json() const;
};

/// Builds every object of the setup and runs each checkable assumption.
/// Construction failures become failed checks rather than exceptions.
ValidationReport validate_setup(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------

/// Objects shared by every variant and path of one experiment.
struct ExperimentSetup {
  Topology topology;
  CournotProblem problem;
  std::optional<MixingMatrix> r, c, w;
  SpectralReport spectral;
  Matrix x0;
};

ExperimentSetup build_setup(const ExperimentConfig& cfg);

/// x_{i,0} drawn per coordinate from U[0, cap_j] with the init seed.
Matrix initial_point(const CournotParams& p, int agents, std::uint64_t seed);

OracleSolution solve_oracle(const ExperimentConfig& cfg, const ProblemInstance& inst);

struct RunResult {
  std::vector<MetricRow> rows;
  std::optional<DivergenceError> divergence;
};

/// Runs one variant (one sample path for DSGT) and logs every `log_every`
/// iterations plus the last one.
RunResult run_variant(const ExperimentConfig& cfg, const ExperimentSetup& setup, const Variant& v,
                      int path, const OracleSolution* oracle);

struct VariantOutcome {
  Variant variant;
  std::vector<std::filesystem::path> files;
  bool diverged = false;
  std::string detail;
};

struct ExperimentOutcome {
  std::filesystem::path directory;
  std::vector<VariantOutcome> variants;
  bool any_diverged() const;
};

/// Output directory: explicit override, else cfg.output_dir, else $OPTNEQ_OUT,
/// else "optneq_out"; the experiment name is appended.
std::filesystem::path output_directory(const ExperimentConfig& cfg,
                                       const std::optional<std::filesystem::path>& override_dir);

std::string variant_tag(const Variant& v);

/// Writes one CSV per variant (per path for DSGT plus a path-mean CSV) and
/// manifest.json. Throws IoError when the directory cannot be written.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir);

}  // namespace optneq
