#include "optneq/harness.hpp"

#include "optneq/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

namespace optneq {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

// Above this many mean-z standard errors the sampled oracle counts as biased.
constexpr double kUnbiasedZ = 4.5;
constexpr int kUnbiasedSamples = 2000;

ScheduleMode mode_of(Algorithm a) {
  return a == Algorithm::IrPushPull ? ScheduleMode::PushPull : ScheduleMode::Dsgt;
}

}  // namespace

std::string to_string(Algorithm a) { return a == Algorithm::IrPushPull ? "IrPushPull" : "IrDsgt"; }

std::string to_string(PresetName p) {
  switch (p) {
    case PresetName::StarPP: return "StarPP";
    case PresetName::RandomDigraphPP: return "RandomDigraphPP";
    case PresetName::PetersenDSGT: return "PetersenDSGT";
    case PresetName::RandomUndirectedDSGT: return "RandomUndirectedDSGT";
  }
  return "?";
}

PresetName preset_from_string(const std::string& name) {
  for (auto p : {PresetName::StarPP, PresetName::RandomDigraphPP, PresetName::PetersenDSGT,
                 PresetName::RandomUndirectedDSGT}) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown preset '" + name +
                    "' (expected StarPP, RandomDigraphPP, PetersenDSGT or RandomUndirectedDSGT)");
}

ExperimentConfig preset(PresetName name) {
  ExperimentConfig cfg;
  cfg.name = to_string(name);
  const bool pp = name == PresetName::StarPP || name == PresetName::RandomDigraphPP;
  cfg.algorithm = pp ? Algorithm::IrPushPull : Algorithm::IrDsgt;
  cfg.schedule.mode = mode_of(cfg.algorithm);
  switch (name) {
    case PresetName::StarPP: cfg.topology = {TopologyKind::StarDigraph, 10, std::nullopt, 1}; break;
    case PresetName::RandomDigraphPP: cfg.topology = {TopologyKind::RandomDigraph, 100, 460, 1}; break;
    case PresetName::PetersenDSGT: cfg.topology = {TopologyKind::Petersen, 10, std::nullopt, 1}; break;
    case PresetName::RandomUndirectedDSGT:
      cfg.topology = {TopologyKind::RandomUndirected, 100, 460, 1};
      break;
  }
  if (pp) {
    cfg.variants = {{0.5, 0.3}, {0.6, 0.25}, {0.675, 0.2}};
    cfg.iterations = 100000;
    cfg.paths = 1;
    cfg.problem.b = GaussianB{0.0, 10.0};
  } else {
    cfg.variants = {{0.5, 0.4}, {0.55, 0.3}, {0.6, 0.175}};
    cfg.iterations = 10000;
    cfg.paths = 10;
    cfg.problem.b = UniformNoise{1.0, 10.0};
  }
  cfg.problem.m = cfg.topology.m;
  cfg.problem.rank = cfg.topology.m / 2;
  // Gamma = 10 lets early iterates overshoot by up to 1e12 before settling.
  cfg.schedule.offset = 100.0;
  // theta grows with m; gamma_hat = 1 diverges on both 100-agent instances.
  if (cfg.topology.m == 100) cfg.schedule.gamma_hat = 0.1;
  cfg.log_every = 100;
  return cfg;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json topology_json(const TopologySpec& t) {
  json j;
  j["kind"] = to_string(t.kind);
  j["m"] = t.m;
  if (t.edges) j["edges"] = *t.edges;
  j["seed"] = t.seed;
  return j;
}

json problem_json(const CournotSpec& p) {
  json j;
  j["rank"] = p.rank;
  j["seed"] = p.seed;
  j["eta"] = p.eta;
  j["cap_lo"] = p.cap_lo;
  j["cap_hi"] = p.cap_hi;
  j["factor_std"] = p.factor_std;
  if (const auto* g = std::get_if<GaussianB>(&p.b)) {
    j["b"] = {{"kind", "gaussian"}, {"mean", g->mean}, {"variance", g->variance}};
  } else {
    const auto& u = std::get<UniformNoise>(p.b);
    j["b"] = {{"kind", "uniform"}, {"lo", u.lo}, {"hi", u.hi}};
  }
  return j;
}

json config_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["algorithm"] = to_string(c.algorithm);
  j["topology"] = topology_json(c.topology);
  j["self_weight"] = c.self_weight;
  j["schedule"] = {{"gamma_hat", c.schedule.gamma_hat},
                   {"lambda", c.schedule.lambda},
                   {"Gamma", c.schedule.offset}};
  json vs = json::array();
  for (const auto& v : c.variants) vs.push_back({{"a", v.a}, {"b", v.b}});
  j["variants"] = vs;
  j["problem"] = problem_json(c.problem);
  j["iterations"] = c.iterations;
  j["log_every"] = c.log_every;
  j["paths"] = c.paths;
  j["noise_seed"] = c.noise_seed;
  j["init_seed"] = c.init_seed;
  j["averaging"] = c.averaging == Averaging::Weighted ? "weighted" : "uniform";
  j["oracle"] = {{"enabled", c.oracle.enabled},
                 {"lambda_first", c.oracle.lambda_first},
                 {"lambda_last", c.oracle.lambda_last},
                 {"count", c.oracle.count},
                 {"tolerance", c.oracle.tolerance}};
  j["tikhonov_metric"] = c.tikhonov_metric;
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  return j;
}

ExperimentConfig config_from(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  const std::string alg = j.value("algorithm", to_string(c.algorithm));
  if (alg == "IrPushPull") c.algorithm = Algorithm::IrPushPull;
  else if (alg == "IrDsgt") c.algorithm = Algorithm::IrDsgt;
  else throw ConfigError("unknown algorithm '" + alg + "'");

  if (j.contains("topology")) {
    const auto& t = j.at("topology");
    c.topology.kind = topology_kind_from_string(t.value("kind", to_string(c.topology.kind)));
    c.topology.m = t.value("m", c.topology.m);
    if (t.contains("edges") && !t.at("edges").is_null()) c.topology.edges = t.at("edges").get<int>();
    c.topology.seed = t.value("seed", c.topology.seed);
  }
  c.self_weight = j.value("self_weight", c.self_weight);
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    c.schedule.gamma_hat = s.value("gamma_hat", c.schedule.gamma_hat);
    c.schedule.lambda = s.value("lambda", c.schedule.lambda);
    c.schedule.offset = s.value("Gamma", c.schedule.offset);
  }
  c.schedule.mode = mode_of(c.algorithm);
  if (j.contains("variants")) {
    for (const auto& v : j.at("variants")) c.variants.push_back({v.at("a").get<double>(), v.at("b").get<double>()});
  }
  if (j.contains("problem")) {
    const auto& p = j.at("problem");
    c.problem.rank = p.value("rank", c.topology.m / 2);
    c.problem.seed = p.value("seed", c.problem.seed);
    c.problem.eta = p.value("eta", c.problem.eta);
    c.problem.cap_lo = p.value("cap_lo", c.problem.cap_lo);
    c.problem.cap_hi = p.value("cap_hi", c.problem.cap_hi);
    c.problem.factor_std = p.value("factor_std", c.problem.factor_std);
    if (p.contains("b")) {
      const auto& b = p.at("b");
      const std::string kind = b.value("kind", std::string("gaussian"));
      if (kind == "gaussian") {
        c.problem.b = GaussianB{b.value("mean", 0.0), b.value("variance", 10.0)};
      } else if (kind == "uniform") {
        c.problem.b = UniformNoise{b.value("lo", 1.0), b.value("hi", 10.0)};
      } else {
        throw ConfigError("unknown b distribution '" + kind + "'");
      }
    }
  } else {
    c.problem.rank = c.topology.m / 2;
  }
  c.problem.m = c.topology.m;
  c.iterations = j.value("iterations", c.iterations);
  c.log_every = j.value("log_every", c.log_every);
  c.paths = j.value("paths", c.paths);
  c.noise_seed = j.value("noise_seed", c.noise_seed);
  c.init_seed = j.value("init_seed", c.init_seed);
  const std::string avg = j.value("averaging", std::string("weighted"));
  if (avg == "weighted") c.averaging = Averaging::Weighted;
  else if (avg == "uniform") c.averaging = Averaging::Uniform;
  else throw ConfigError("averaging must be 'weighted' or 'uniform'");
  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    c.oracle.enabled = o.value("enabled", c.oracle.enabled);
    c.oracle.lambda_first = o.value("lambda_first", c.oracle.lambda_first);
    c.oracle.lambda_last = o.value("lambda_last", c.oracle.lambda_last);
    c.oracle.count = o.value("count", c.oracle.count);
    c.oracle.tolerance = o.value("tolerance", c.oracle.tolerance);
  }
  c.tikhonov_metric = j.value("tikhonov_metric", c.tikhonov_metric);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.threads = j.value("threads", c.threads);
  return c;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg, int indent) { return config_json(cfg).dump(indent); }

ExperimentConfig config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) { return config_from_json(read_file(path)); }

ExperimentConfig config_from_manifest(const std::filesystem::path& manifest) {
  try {
    const auto j = json::parse(read_file(manifest));
    return config_from(j.at("config"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad manifest: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass || !c.hard; });
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string ValidationReport::text() const {
  std::string out;
  char buf[64];
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "%.6g", c.value);
    out += std::string(c.pass ? "PASS " : (c.hard ? "FAIL " : "WARN ")) + c.name + " = " + buf;
    if (!c.detail.empty()) out += "  (" + c.detail + ")";
    out += '\n';
  }
  out += pass() ? "setup valid\n" : "setup INVALID\n";
  return out;
}

std::string ValidationReport::json() const {
  nlohmann::ordered_json j;
  j["pass"] = pass();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name},
                   {"pass", c.pass},
                   {"hard", c.hard},
                   {"value", std::isfinite(c.value) ? nlohmann::ordered_json(c.value) : nlohmann::ordered_json()},
                   {"detail", c.detail}});
  }
  j["checks"] = arr;
  return j.dump(2);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void check_mixing(ValidationReport& rep, const std::string& label, const MixingMatrix& mm,
                  const std::string& sums) {
  const double dev = mm.stochasticity_deviation();
  rep.checks.push_back({label + "." + sums, dev <= MixingMatrix::kSumTolerance, dev,
                        "max |sum - 1| over " + to_string(mm.kind()) + " sums"});
  const double neg = std::min(0.0, mm.weights().minCoeff());
  rep.checks.push_back({label + ".nonnegative", neg == 0.0, neg, "most negative entry"});
  const double diag = mm.min_diagonal();
  rep.checks.push_back({label + ".positive_diagonal", diag > 0.0, diag, "smallest diagonal entry"});
}

}  // namespace

ValidationReport validate_setup(const ExperimentConfig& cfg) {
  ValidationReport rep;
  const bool pp = cfg.algorithm == Algorithm::IrPushPull;

  rep.checks.push_back({"config.iterations", cfg.iterations > 0, double(cfg.iterations), ""});
  rep.checks.push_back({"config.log_every", cfg.log_every > 0, double(cfg.log_every), ""});
  rep.checks.push_back({"config.paths", cfg.paths >= 1 && (!pp || cfg.paths == 1), double(cfg.paths),
                        pp ? "Push-Pull runs a single deterministic path" : ""});
  rep.checks.push_back({"config.variants", !cfg.variants.empty(), double(cfg.variants.size()), ""});

  // Schedule exponents, per variant.
  for (const auto& v : cfg.variants) {
    ScheduleParams s = cfg.schedule;
    s.a = v.a;
    s.b = v.b;
    s.mode = mode_of(cfg.algorithm);
    const auto sr = validate_schedule(s);
    for (const auto& c : sr.checks) {
      rep.checks.push_back({"schedule[" + variant_tag(v) + "]: " + c.condition, c.pass, c.lhs,
                            "lhs vs " + fmt(c.rhs)});
    }
  }

  std::optional<Topology> topo;
  try {
    topo = build_topology(cfg.topology.kind, cfg.topology.m, cfg.topology.edges, cfg.topology.seed);
    rep.checks.push_back({"topology.build", true, double(topo->link_count()), to_string(cfg.topology.kind)});
  } catch (const Error& e) {
    rep.checks.push_back({"topology.build", false, 0.0, e.what()});
  }
  if (topo) {
    rep.checks.push_back({"topology.connected", topo->weakly_connected(), double(topo->size()), ""});
    rep.checks.push_back({"topology.direction", topo->directed() == pp, topo->directed() ? 1.0 : 0.0,
                          pp ? "Push-Pull expects a directed graph" : "DSGT expects an undirected graph",
                          false});
    try {
      if (pp) {
        const std::vector<double> self(topo->size(), cfg.self_weight);
        const auto r = build_pull_matrix(*topo, self);
        const auto c = build_push_matrix(*topo, self);
        check_mixing(rep, "R", r, "row_sums");
        check_mixing(rep, "C", c, "column_sums");
        const bool roots = check_root_intersection(r, c);
        rep.checks.push_back({"roots.intersection", roots, roots ? 1.0 : 0.0, "R_{G_R} and R_{G_C^T} share a node"});
        const auto sp = spectral_report(&r, &c, nullptr);
        rep.checks.push_back({"spectral.sigma_R", *sp.sigma_r < 1.0, *sp.sigma_r, "spectral radius of R - 1u^T/m"});
        rep.checks.push_back({"spectral.sigma_C", *sp.sigma_c < 1.0, *sp.sigma_c, "spectral radius of C - v1^T/m"});
        rep.checks.push_back({"spectral.perron_residual", std::max(sp.u_residual, sp.v_residual) <= 1e-10 * topo->size(),
                              std::max(sp.u_residual, sp.v_residual), ""});
      } else {
        const auto w = build_gossip_matrix(*topo);
        check_mixing(rep, "W", w, "row_and_column_sums");
        const double asym = (w.weights() - w.weights().transpose()).cwiseAbs().maxCoeff();
        rep.checks.push_back({"W.symmetric", asym == 0.0, asym, "max |W - W^T|"});
        const auto sp = spectral_report(nullptr, nullptr, &w);
        rep.checks.push_back({"spectral.rho_W", *sp.rho_w <= 0.99, *sp.rho_w, "|W - 11^T/m|_2, margin 0.01 below 1"});
      }
    } catch (const Error& e) {
      rep.checks.push_back({"mixing.build", false, 0.0, e.what()});
    }
  }

  try {
    if (cfg.problem.m != cfg.topology.m) throw ConfigError("problem size differs from topology size");
    const auto prob = build_cournot(cfg.problem);
    const auto& p = *prob.params;
    const Eigen::MatrixXd sym = 0.5 * (p.cbar + p.cbar.transpose());
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    rep.checks.push_back({"F.monotone", lmin >= -1e-8, lmin, "min eigenvalue of (Cbar + Cbar^T)/2"});
    const double mu = prob.instance.strong_convexity();
    rep.checks.push_back({"f.strongly_convex", mu > 0.0, mu, "theta = " + fmt(p.theta_reg)});
    const bool stochastic = prob.instance.stochastic();
    rep.checks.push_back({"problem.noise", stochastic == !pp, stochastic ? 1.0 : 0.0,
                          pp ? "Push-Pull uses deterministic oracles" : "DSGT expects sampled oracles", false});
    if (stochastic && p.b_noise) {
      // Mean of sampled F_i(x0) against F_i(x0), in units of its standard error.
      const Matrix x0 = initial_point(p, p.players(), cfg.init_seed);
      const double sd = (p.b_noise->hi - p.b_noise->lo) / std::sqrt(12.0);
      double worst = 0.0;
      for (int i = 0; i < p.players(); ++i) {
        const Vector xi = x0.row(i).transpose();
        const double det = cournot_map_i(p, i, xi)(i);
        double sum = 0.0;
        for (int s = 0; s < kUnbiasedSamples; ++s) {
          const NoiseKey key{cfg.noise_seed, ~std::uint64_t{0}, std::uint64_t(s), std::uint64_t(i)};
          sum += sample_local(prob.instance, i, xi, key).first(i);
        }
        const double z = sd > 0.0 ? std::abs(sum / kUnbiasedSamples - det) / (sd / std::sqrt(double(kUnbiasedSamples)))
                                  : std::abs(sum / kUnbiasedSamples - det);
        worst = std::max(worst, z);
      }
      rep.checks.push_back({"oracle.unbiased", worst <= kUnbiasedZ, worst,
                            "max |z| of sampled F_i means over " + std::to_string(kUnbiasedSamples) + " draws"});
    }
  } catch (const Error& e) {
    rep.checks.push_back({"problem.build", false, 0.0, e.what()});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Running

Matrix initial_point(const CournotParams& p, int agents, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix x0(agents, p.players());
  for (int i = 0; i < agents; ++i) {
    for (int j = 0; j < p.players(); ++j) {
      std::uniform_real_distribution<double> d(0.0, p.caps(j));
      x0(i, j) = d(rng);
    }
  }
  return x0;
}

ExperimentSetup build_setup(const ExperimentConfig& cfg) {
  if (cfg.problem.m != cfg.topology.m) throw ConfigError("problem size differs from topology size");
  ExperimentSetup s{build_topology(cfg.topology.kind, cfg.topology.m, cfg.topology.edges, cfg.topology.seed),
                    build_cournot(cfg.problem), std::nullopt, std::nullopt, std::nullopt, {}, {}};
  if (cfg.algorithm == Algorithm::IrPushPull) {
    const std::vector<double> self(s.topology.size(), cfg.self_weight);
    s.r.emplace(build_pull_matrix(s.topology, self));
    s.c.emplace(build_push_matrix(s.topology, self));
    s.spectral = spectral_report(&*s.r, &*s.c, nullptr);
  } else {
    s.w.emplace(build_gossip_matrix(s.topology));
    s.spectral = spectral_report(nullptr, nullptr, &*s.w);
  }
  s.x0 = initial_point(*s.problem.params, s.topology.size(), cfg.init_seed);
  return s;
}

OracleSolution solve_oracle(const ExperimentConfig& cfg, const ProblemInstance& inst) {
  const auto lambdas = geometric_lambdas(cfg.oracle.lambda_first, cfg.oracle.lambda_last, cfg.oracle.count);
  return sequential_regularization(inst, lambdas, std::vector<double>(lambdas.size(), cfg.oracle.tolerance));
}

namespace {

template <class Solver>
RunResult drive(const Solver& alg, const ExperimentConfig& cfg, const Matrix& x0, const MetricContext& ctx) {
  RunResult out;
  SolverState s;
  try {
    s = alg.init(x0);
  } catch (const DivergenceError& e) {
    out.divergence = e;
    return out;
  }
  std::optional<Vector> pending;  // x-bar of the last logged row, awaiting `upper`
  auto log_now = [&] {
    out.rows.push_back(compute_metrics(s, ctx));
    pending = weighted_average(s.x, ctx.u);
  };
  log_now();
  try {
    while (s.k < cfg.iterations || pending) {
      alg.step(s);
      if (pending) {
        out.rows.back().upper = (weighted_average(s.x, ctx.u) - *pending).norm();
        pending.reset();
      }
      if (s.k > cfg.iterations) break;
      if (s.k % cfg.log_every == 0 || s.k == cfg.iterations) log_now();
    }
  } catch (const DivergenceError& e) {
    out.divergence = e;
  }
  return out;
}

}  // namespace

RunResult run_variant(const ExperimentConfig& cfg, const ExperimentSetup& setup, const Variant& v, int path,
                      const OracleSolution* oracle) {
  ScheduleParams sched = cfg.schedule;
  sched.a = v.a;
  sched.b = v.b;
  sched.mode = mode_of(cfg.algorithm);
  const auto& inst = setup.problem.instance;

  MetricContext ctx;
  ctx.inst = &inst;
  ctx.schedule = sched;
  ctx.oracle = oracle;
  ctx.tikhonov = cfg.tikhonov_metric;
  if (cfg.algorithm == Algorithm::IrPushPull) {
    if (cfg.averaging == Averaging::Weighted) ctx.u = setup.spectral.u;
    ctx.v = setup.spectral.v;
    const IrPushPull alg(inst, sched, *setup.r, *setup.c);
    return drive(alg, cfg, setup.x0, ctx);
  }
  const IrDsgt alg(inst, sched, *setup.w, cfg.noise_seed, static_cast<std::uint64_t>(path));
  return drive(alg, cfg, setup.x0, ctx);
}

bool ExperimentOutcome::any_diverged() const {
  return std::any_of(variants.begin(), variants.end(), [](const auto& v) { return v.diverged; });
}

std::filesystem::path output_directory(const ExperimentConfig& cfg,
                                       const std::optional<std::filesystem::path>& override_dir) {
  std::filesystem::path base;
  if (override_dir) {
    base = *override_dir;
  } else if (!cfg.output_dir.empty()) {
    base = cfg.output_dir;
  } else if (const char* env = std::getenv("OPTNEQ_OUT"); env && *env) {
    base = env;
  } else {
    base = "optneq_out";
  }
  return base / cfg.name;
}

std::string variant_tag(const Variant& v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "a%g_b%g", v.a, v.b);
  return buf;
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  set_worker_count(cfg.threads);

  const ExperimentSetup setup = build_setup(cfg);
  std::optional<OracleSolution> oracle;
  if (cfg.oracle.enabled) oracle = solve_oracle(cfg, setup.problem.instance);
  const OracleSolution* oracle_ptr = oracle ? &*oracle : nullptr;

  ExperimentOutcome outcome;
  outcome.directory = dir;
  const bool pp = cfg.algorithm == Algorithm::IrPushPull;
  for (const auto& v : cfg.variants) {
    VariantOutcome vo{v, {}, false, ""};
    const std::string tag = variant_tag(v);
    std::vector<std::vector<MetricRow>> runs;
    const int paths = pp ? 1 : cfg.paths;
    for (int path = 0; path < paths; ++path) {
      auto res = run_variant(cfg, setup, v, path, oracle_ptr);
      char name[96];
      if (pp) std::snprintf(name, sizeof name, "%s.csv", tag.c_str());
      else std::snprintf(name, sizeof name, "%s_path%02d.csv", tag.c_str(), path);
      write_metrics_csv(dir / name, res.rows);
      vo.files.push_back(dir / name);
      if (res.divergence) {
        vo.diverged = true;
        vo.detail = (pp ? "" : "path " + std::to_string(path) + ": ") + res.divergence->what();
        break;
      }
      runs.push_back(std::move(res.rows));
    }
    if (!pp && !vo.diverged) {
      const auto agg = aggregate_paths(runs);
      const auto mean_file = dir / (tag + "_mean.csv");
      write_metrics_csv(mean_file, agg.mean);
      vo.files.push_back(mean_file);
    }
    outcome.variants.push_back(std::move(vo));
  }

  json manifest;
  manifest["config"] = config_json(cfg);
  manifest["version"] = kVersion;
  manifest["compiler"] = __VERSION__;
  manifest["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION);
  manifest["threads"] = worker_count();
  manifest["seeds"] = {{"topology", cfg.topology.seed},
                       {"problem", cfg.problem.seed},
                       {"noise", cfg.noise_seed},
                       {"init", cfg.init_seed}};
  if (oracle) {
    json xs = json::array();
    for (Eigen::Index i = 0; i < oracle->x_star.size(); ++i) xs.push_back(oracle->x_star(i));
    manifest["oracle"] = {{"converged", oracle->converged()},
                          {"final_lambda", oracle->trajectory.back().lambda},
                          {"final_residual", oracle->trajectory.back().residual},
                          {"lower_residual", setup.problem.instance.total_map(oracle->x_star).norm()},
                          {"x_star", xs}};
  }
  json vs = json::array();
  for (const auto& vo : outcome.variants) {
    json files = json::array();
    for (const auto& f : vo.files) files.push_back(f.filename().string());
    vs.push_back({{"a", vo.variant.a},
                  {"b", vo.variant.b},
                  {"status", vo.diverged ? "diverged" : "ok"},
                  {"detail", vo.detail},
                  {"files", files}});
  }
  manifest["variants"] = vs;
  manifest["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::ofstream f(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + (dir / "manifest.json").string());
  f << manifest.dump(2) << '\n';
  return outcome;
}

}  // namespace optneq
