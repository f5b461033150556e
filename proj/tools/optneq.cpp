// optneq command line: check, run, oracle, rates, preset.
//
// Exit codes: 0 ok, 1 validation failure, 2 divergence, 3 I/O.

#include "optneq/harness.hpp"
#include "optneq/kernels.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kDiverged = 2;
constexpr int kIo = 3;

struct WindowArg {
  long lo = 0;
  long hi = 0;
};

WindowArg parse_window(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw optneq::ConfigError("window must be KLO:KHI");
  try {
    return {std::stol(s.substr(0, colon)), std::stol(s.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw optneq::ConfigError("window must be KLO:KHI");
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace optneq;
  CLI::App app{"Distributed optimal-equilibrium seeking simulator"};
  app.require_subcommand(1);

  std::string cfg_path;
  auto* check = app.add_subcommand("check", "Validate every checkable assumption of a setup");
  bool check_json = false;
  check->add_option("config", cfg_path, "experiment JSON")->required();
  check->add_flag("--json", check_json, "machine-readable report");

  auto* run = app.add_subcommand("run", "Run all variants and write metric CSVs and a manifest");
  std::string out_dir;
  bool force = false;
  int threads = -1;
  run->add_option("config", cfg_path, "experiment JSON")->required();
  run->add_option("--out", out_dir, "output root (default: config, then $OPTNEQ_OUT)");
  run->add_flag("--force", force, "run even if validation fails");
  run->add_option("--threads", threads, "OpenMP workers (results do not depend on it)");

  auto* oracle = app.add_subcommand("oracle", "Compute x* by sequential regularization");
  oracle->add_option("config", cfg_path, "experiment JSON")->required();

  auto* rates = app.add_subcommand("rates", "Fit a decay exponent to a metric column");
  std::string csv_path, field = "consensus_x", window;
  double exponent = 0.0, gamma = 0.0;
  rates->add_option("csv", csv_path, "metrics CSV")->required();
  rates->add_option("--field", field, "column name");
  rates->add_option("--exponent", exponent, "target exponent p")->required();
  rates->add_option("--gamma", gamma, "offset added to k")->required();
  rates->add_option("--window", window, "KLO:KHI")->required();

  auto* pre = app.add_subcommand("preset", "Print a preset configuration");
  std::string preset_name;
  bool dump = false;
  pre->add_option("name", preset_name, "StarPP | RandomDigraphPP | PetersenDSGT | RandomUndirectedDSGT")->required();
  pre->add_flag("--dump", dump, "print the JSON config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) {
      const auto cfg = load_config(cfg_path);
      const auto rep = validate_setup(cfg);
      std::cout << (check_json ? rep.json() + "\n" : rep.text());
      return rep.pass() ? kOk : kInvalid;
    }
    if (*run) {
      auto cfg = load_config(cfg_path);
      if (threads >= 0) cfg.threads = threads;
      const auto rep = validate_setup(cfg);
      if (!rep.pass()) {
        std::cerr << rep.text();
        if (!force) return kInvalid;
        std::cerr << "continuing because of --force\n";
      }
      const auto dir = output_directory(cfg, out_dir.empty() ? std::nullopt
                                                             : std::optional<std::filesystem::path>(out_dir));
      const auto outcome = run_experiment(cfg, dir);
      for (const auto& v : outcome.variants) {
        std::cout << variant_tag(v.variant) << ": " << (v.diverged ? "diverged, " + v.detail : "ok") << " ("
                  << v.files.size() << " files)\n";
      }
      std::cout << "wrote " << outcome.directory.string() << "\n";
      return outcome.any_diverged() ? kDiverged : kOk;
    }
    if (*oracle) {
      const auto cfg = load_config(cfg_path);
      const auto setup = build_setup(cfg);
      const auto sol = solve_oracle(cfg, setup.problem.instance);
      std::printf("%-12s %-12s %-10s %s\n", "lambda", "residual", "converged", "step");
      for (std::size_t j = 0; j < sol.trajectory.size(); ++j) {
        const auto& t = sol.trajectory[j];
        const double gap = j ? (t.x - sol.trajectory[j - 1].x).norm() : 0.0;
        std::printf("%-12.4g %-12.4g %-10s %.4g\n", t.lambda, t.residual, t.converged ? "yes" : "no", gap);
      }
      std::printf("|F(x*)| = %.6g\nx* =", setup.problem.instance.total_map(sol.x_star).norm());
      for (Eigen::Index i = 0; i < sol.x_star.size(); ++i) std::printf(" %.10g", sol.x_star(i));
      std::printf("\n");
      return sol.converged() ? kOk : kInvalid;
    }
    if (*rates) {
      const auto rows = read_metrics_csv(csv_path);
      const auto w = parse_window(window);
      std::vector<long> ks;
      std::vector<double> vals;
      for (const auto& r : rows) {
        if (r.k < w.lo || r.k > w.hi) continue;
        ks.push_back(r.k);
        vals.push_back(field_value(r, field));
      }
      const auto fit = fit_decay(ks, vals, w.lo, w.hi, exponent, gamma);
      const auto growth = bound_growth(ks, vals, w.lo, w.hi, exponent, gamma);
      std::printf("field        %s\nwindow       [%ld, %ld] (%zu points)\nslope        %.6g\n", field.c_str(),
                  fit.k_lo, fit.k_hi, fit.points, fit.slope);
      std::printf("bound_const  %.6g\nfirst_half   %.6g\nsecond_half  %.6g\nratio        %.6g\n", fit.bound_const,
                  growth.first.bound_const, growth.second.bound_const, growth.ratio);
      return kOk;
    }
    if (*pre) {
      const auto cfg = preset(preset_from_string(preset_name));
      if (dump) {
        std::cout << config_to_json(cfg) << "\n";
      } else {
        std::cout << cfg.name << ": " << to_string(cfg.algorithm) << " on " << to_string(cfg.topology.kind)
                  << " (m = " << cfg.topology.m << "), " << cfg.variants.size() << " variants, " << cfg.paths
                  << " path(s), " << cfg.iterations << " iterations\n";
      }
      return kOk;
    }
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const DivergenceError& e) {
    std::cerr << e.what() << "\n";
    return kDiverged;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kOk;
}
