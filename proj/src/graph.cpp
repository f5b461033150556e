#include "optneq/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <sstream>

namespace optneq {

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::StarDigraph: return "StarDigraph";
    case TopologyKind::RandomDigraph: return "RandomDigraph";
    case TopologyKind::Petersen: return "Petersen";
    case TopologyKind::RandomUndirected: return "RandomUndirected";
  }
  return "?";
}

TopologyKind topology_kind_from_string(const std::string& name) {
  for (auto k : {TopologyKind::StarDigraph, TopologyKind::RandomDigraph, TopologyKind::Petersen,
                 TopologyKind::RandomUndirected}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown topology kind '" + name + "'");
}

std::string to_string(Stochasticity kind) {
  switch (kind) {
    case Stochasticity::Row: return "RowStochastic";
    case Stochasticity::Column: return "ColumnStochastic";
    case Stochasticity::Doubly: return "DoublyStochastic";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Topology

Topology::Topology(int m, bool directed, std::vector<Edge> edges)
    : m_(m), directed_(directed), edges_(std::move(edges)) {
  if (m_ < 1) throw ConfigError("topology needs at least one node");
  for (const auto& e : edges_) {
    if (e.from < 0 || e.from >= m_ || e.to < 0 || e.to >= m_)
      throw ConfigError("edge endpoint out of range");
    if (e.from == e.to) throw ConfigError("self-loops are not stored in a topology");
  }
  if (!directed_) {
    const auto n = edges_.size();
    for (std::size_t k = 0; k < n; ++k) edges_.push_back({edges_[k].to, edges_[k].from});
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  in_.assign(m_, {});
  out_.assign(m_, {});
  for (const auto& e : edges_) {
    out_[e.from].push_back(e.to);
    in_[e.to].push_back(e.from);
  }
  for (auto& v : in_) std::sort(v.begin(), v.end());
}

std::size_t Topology::link_count() const {
  return directed_ ? edges_.size() : edges_.size() / 2;
}

int Topology::max_degree() const {
  int d = 0;
  for (int i = 0; i < m_; ++i) {
    d = std::max(d, static_cast<int>(directed_ ? in_[i].size() + out_[i].size() : in_[i].size()));
  }
  return d;
}

bool Topology::weakly_connected() const {
  std::vector<char> seen(m_, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int i = q.front();
    q.pop();
    for (const auto* nbrs : {&in_[i], &out_[i]}) {
      for (int j : *nbrs) {
        if (!seen[j]) {
          seen[j] = 1;
          ++count;
          q.push(j);
        }
      }
    }
  }
  return count == m_;
}

namespace {

std::vector<Edge> petersen_links() {
  std::vector<Edge> e;
  for (int i = 0; i < 5; ++i) {
    e.push_back({i, (i + 1) % 5});          // outer cycle
    e.push_back({i, i + 5});                // spokes
    e.push_back({5 + i, 5 + (i + 2) % 5});  // inner pentagram
  }
  return e;
}

// Random recursive tree: node i attaches to a uniformly chosen earlier node.
std::vector<Edge> random_tree(int m, std::mt19937_64& rng) {
  std::vector<Edge> e;
  for (int i = 1; i < m; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    e.push_back({pick(rng), i});
  }
  return e;
}

}  // namespace

Topology build_topology(TopologyKind kind, int m, std::optional<int> edge_target,
                        std::uint64_t seed) {
  if (kind == TopologyKind::Petersen) return Topology(10, false, petersen_links());
  if (m < 2) throw ConfigError("topology needs m >= 2");

  if (kind == TopologyKind::StarDigraph) {
    std::vector<Edge> e;
    for (int leaf = 1; leaf < m; ++leaf) {
      e.push_back({0, leaf});
      e.push_back({leaf, 0});
    }
    return Topology(m, true, std::move(e));
  }

  if (!edge_target) throw ConfigError(to_string(kind) + " requires an edge target");
  const long target = *edge_target;
  if (target < m - 1) throw ConfigError("edge target below spanning tree size");

  std::mt19937_64 rng(seed);
  const bool directed = kind == TopologyKind::RandomDigraph;
  const long capacity = directed ? long(m) * (m - 1) : long(m) * (m - 1) / 2;
  if (target > capacity) {
    throw CapacityError("edge target " + std::to_string(target) + " exceeds capacity " +
                        std::to_string(capacity));
  }

  auto tree = random_tree(m, rng);
  std::set<Edge> present;
  for (const auto& e : tree) {
    present.insert(e);
    if (directed) present.insert({e.to, e.from});
  }
  if (directed && static_cast<long>(present.size()) > target) {
    throw ConfigError("edge target " + std::to_string(target) +
                      " below the bidirectional spanning tree size " +
                      std::to_string(present.size()));
  }

  std::vector<Edge> candidates;
  for (int i = 0; i < m; ++i) {
    for (int j = directed ? 0 : i + 1; j < m; ++j) {
      if (i == j) continue;
      Edge e{i, j};
      if (present.count(e) || (!directed && present.count({j, i}))) continue;
      candidates.push_back(e);
    }
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const auto extra = static_cast<std::size_t>(target - static_cast<long>(present.size()));
  std::vector<Edge> edges(present.begin(), present.end());
  edges.insert(edges.end(), candidates.begin(), candidates.begin() + extra);
  return Topology(m, directed, std::move(edges));
}

void write_edge_list(std::ostream& os, const Topology& t) {
  os << t.size() << ' ' << (t.directed() ? "directed" : "undirected") << '\n';
  for (const auto& e : t.edges()) {
    if (!t.directed() && e.from > e.to) continue;
    os << e.from << ' ' << e.to << '\n';
  }
}

Topology read_edge_list(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty edge list");
  std::istringstream head(line);
  int m = 0;
  std::string kind;
  if (!(head >> m >> kind) || (kind != "directed" && kind != "undirected"))
    throw IoError("bad edge list header '" + line + "'");
  std::vector<Edge> edges;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Edge e;
    if (!(row >> e.from >> e.to)) throw IoError("bad edge line '" + line + "'");
    edges.push_back(e);
  }
  return Topology(m, kind == "directed", std::move(edges));
}

// ---------------------------------------------------------------------------
// Mixing matrices

MixingMatrix::MixingMatrix(Eigen::MatrixXd weights, Stochasticity kind)
    : w_(std::move(weights)), kind_(kind) {
  if (w_.rows() != w_.cols() || w_.rows() == 0) throw ConfigError("mixing matrix must be square");
  if ((w_.array() < 0.0).any()) throw ConfigError("mixing matrix has negative entries");
  if (!(w_.diagonal().array() > 0.0).all())
    throw ConfigError(to_string(kind_) + " matrix needs a strictly positive diagonal");
  if (kind_ == Stochasticity::Doubly && (w_ - w_.transpose()).cwiseAbs().maxCoeff() > kSumTolerance)
    throw ConfigError("doubly stochastic matrix must be symmetric");
  if (stochasticity_deviation() > kSumTolerance)
    throw ConfigError(to_string(kind_) + " sums deviate from 1 by " +
                      std::to_string(stochasticity_deviation()));
  support_.resize(w_.rows());
  for (Eigen::Index i = 0; i < w_.rows(); ++i) {
    for (Eigen::Index j = 0; j < w_.cols(); ++j) {
      if (w_(i, j) != 0.0) support_[i].push_back(static_cast<int>(j));
    }
  }
}

double MixingMatrix::stochasticity_deviation() const {
  const double rows = (w_.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (w_.colwise().sum().array() - 1.0).abs().maxCoeff();
  switch (kind_) {
    case Stochasticity::Row: return rows;
    case Stochasticity::Column: return cols;
    case Stochasticity::Doubly: return std::max(rows, cols);
  }
  return 0.0;
}

namespace {

void check_self_weights(const Topology& t, const std::vector<double>& s) {
  if (static_cast<int>(s.size()) != t.size()) throw ConfigError("one self weight per node required");
  for (double x : s) {
    if (!(x > 0.0)) throw ConfigError("self weights must be strictly positive");
  }
}

}  // namespace

MixingMatrix build_pull_matrix(const Topology& t, const std::vector<double>& self_weights) {
  check_self_weights(t, self_weights);
  const int m = t.size();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    const auto& in = t.in_neighbors(i);
    const double denom = static_cast<double>(in.size()) + self_weights[i];
    for (int j : in) r(i, j) = 1.0 / denom;
    r(i, i) = self_weights[i] / denom;
  }
  return MixingMatrix(std::move(r), Stochasticity::Row);
}

MixingMatrix build_push_matrix(const Topology& t, const std::vector<double>& self_weights) {
  check_self_weights(t, self_weights);
  const int m = t.size();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    const auto& out = t.out_neighbors(i);
    const double denom = static_cast<double>(out.size()) + self_weights[i];
    for (int l : out) c(l, i) = 1.0 / denom;
    c(i, i) = self_weights[i] / denom;
  }
  return MixingMatrix(std::move(c), Stochasticity::Column);
}

MixingMatrix build_gossip_matrix(const Topology& t) {
  if (t.directed()) throw ConfigError("gossip weights need an undirected topology");
  if (!t.weakly_connected()) throw ConfigError("gossip weights need a connected topology");
  const int m = t.size();
  const int dmax = t.max_degree();
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(m, m);
  if (dmax == 0) return MixingMatrix(std::move(w), Stochasticity::Doubly);
  const double alpha = 1.0 / (2.0 * dmax);
  for (int i = 0; i < m; ++i) {
    const auto& nbrs = t.in_neighbors(i);
    w(i, i) = 1.0 - alpha * static_cast<double>(nbrs.size());
    for (int j : nbrs) w(i, j) = alpha;
  }
  return MixingMatrix(std::move(w), Stochasticity::Doubly);
}

// ---------------------------------------------------------------------------
// Root sets

std::vector<int> root_set(const Topology& t) {
  const int m = t.size();
  std::vector<int> roots;
  std::vector<char> seen(m);
  for (int r = 0; r < m; ++r) {
    std::fill(seen.begin(), seen.end(), 0);
    std::queue<int> q;
    q.push(r);
    seen[r] = 1;
    int count = 1;
    while (!q.empty()) {
      int i = q.front();
      q.pop();
      for (int j : t.out_neighbors(i)) {
        if (!seen[j]) {
          seen[j] = 1;
          ++count;
          q.push(j);
        }
      }
    }
    if (count == m) roots.push_back(r);
  }
  return roots;
}

Topology induced_digraph(const Eigen::MatrixXd& b) {
  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      if (i != j && b(i, j) > 0.0) edges.push_back({static_cast<int>(j), static_cast<int>(i)});
    }
  }
  return Topology(static_cast<int>(b.rows()), true, std::move(edges));
}

bool check_root_intersection(const MixingMatrix& r, const MixingMatrix& c) {
  if (r.size() != c.size()) throw ConfigError("R and C dimensions differ");
  const auto roots_r = root_set(induced_digraph(r.weights()));
  const auto roots_ct = root_set(induced_digraph(c.weights().transpose()));
  std::vector<int> common;
  std::set_intersection(roots_r.begin(), roots_r.end(), roots_ct.begin(), roots_ct.end(),
                        std::back_inserter(common));
  return !common.empty();
}

// ---------------------------------------------------------------------------
// Spectral quantities

namespace {

Vector random_start(Eigen::Index n, std::uint64_t seed, bool positive) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(positive ? 0.5 : -1.0, 1.0);
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = dist(rng);
  return x;
}

// Largest eigenvalue of a symmetric positive semidefinite matrix.
double psd_dominant_eigenvalue(const Eigen::MatrixXd& s, const PowerIterationOptions& opts) {
  Vector x = random_start(s.rows(), opts.seed, false).normalized();
  double q = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    Vector y = s * x;
    const double nrm = y.norm();
    if (nrm == 0.0) return 0.0;
    const double q_new = x.dot(y);
    y /= nrm;
    const bool settled = (y - x).norm() <= opts.tolerance ||
                         (it > 0 && std::abs(q_new - q) <= opts.tolerance * std::abs(q_new));
    x = std::move(y);
    q = q_new;
    if (settled) break;
  }
  return std::max(q, 0.0);
}

}  // namespace

Vector perron_vector(const Eigen::MatrixXd& a, const PowerIterationOptions& opts, double* residual) {
  const auto n = a.rows();
  const double scale = static_cast<double>(n);
  Vector x = random_start(n, opts.seed, true);
  x *= scale / x.sum();
  bool converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    Vector y = a * x;
    y *= scale / y.sum();
    const double change = (y - x).cwiseAbs().maxCoeff();
    x = std::move(y);
    if (change <= opts.tolerance * std::max(1.0, x.cwiseAbs().maxCoeff())) {
      converged = true;
      break;
    }
  }
  const double res = (a * x - x).cwiseAbs().maxCoeff();
  if (residual) *residual = res;
  if (!converged || res > 1e-10 * scale) {
    throw NumericalError("Perron vector power iteration did not converge", res);
  }
  return x;
}

double spectral_radius(const Eigen::MatrixXd& a, const PowerIterationOptions& opts) {
  Vector x = random_start(a.rows(), opts.seed, false).normalized();
  double estimate = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    Vector y = a * x;
    const double nrm = y.norm();
    if (nrm == 0.0) return 0.0;
    Vector yn = y / nrm;
    // Real dominant eigenvalue of either sign.
    if ((yn - x).norm() <= opts.tolerance || (yn + x).norm() <= opts.tolerance) return nrm;

    // Two-term recurrence fit z^2 = alpha z + beta over the Krylov pair
    // {x, A x}; its roots capture a dominant complex-conjugate pair.
    Vector z = a * yn;
    Eigen::Matrix<double, Eigen::Dynamic, 2> basis(a.rows(), 2);
    basis.col(0) = yn;
    basis.col(1) = x;
    Eigen::Vector2d coef = basis.colPivHouseholderQr().solve(z);
    const double alpha = coef(0);
    const double beta = coef(1) * nrm;  // x was not scaled by the last norm
    const double disc = alpha * alpha + 4.0 * beta;
    double rho;
    if (disc >= 0.0) {
      rho = std::max(std::abs(0.5 * (alpha + std::sqrt(disc))), std::abs(0.5 * (alpha - std::sqrt(disc))));
    } else {
      rho = std::sqrt(std::abs(beta));
    }
    const double fit_residual = (z - basis * coef).norm() / std::max(z.norm(), 1e-300);
    const bool stable = std::abs(rho - estimate) <= opts.tolerance * std::max(rho, 1e-300);
    estimate = rho;
    x = std::move(yn);
    if (fit_residual <= 1e-10 && stable) break;
  }
  return estimate;
}

SpectralReport spectral_report(const MixingMatrix* r, const MixingMatrix* c, const MixingMatrix* w,
                               const PowerIterationOptions& opts) {
  SpectralReport rep;
  if (r) {
    const int m = r->size();
    rep.u = perron_vector(r->weights().transpose(), opts, &rep.u_residual);
    const Eigen::MatrixXd deflated =
        r->weights() - Eigen::MatrixXd::Ones(m, 1) * rep.u->transpose() / static_cast<double>(m);
    rep.sigma_r = spectral_radius(deflated, opts);
  }
  if (c) {
    const int m = c->size();
    rep.v = perron_vector(c->weights(), opts, &rep.v_residual);
    const Eigen::MatrixXd deflated =
        c->weights() - *rep.v * Eigen::MatrixXd::Ones(1, m) / static_cast<double>(m);
    rep.sigma_c = spectral_radius(deflated, opts);
  }
  if (w) {
    const int m = w->size();
    const Eigen::MatrixXd d =
        w->weights() - Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
    rep.rho_w = std::sqrt(psd_dominant_eigenvalue(d.transpose() * d, opts));
  }
  return rep;
}

}  // namespace optneq
