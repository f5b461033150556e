#pragma once

#include "optneq/common.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace optneq {

enum class TopologyKind { StarDigraph, RandomDigraph, Petersen, RandomUndirected };

std::string to_string(TopologyKind kind);
TopologyKind topology_kind_from_string(const std::string& name);

/// Directed edge `from -> to`: node `to` pulls from node `from`.
struct Edge {
  int from = 0;
  int to = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Communication graph. Undirected graphs store both orientations of every link.
/// Self-loops are never stored; matrix builders add the self weights.
class Topology {
 public:
  Topology() = default;
  Topology(int m, bool directed, std::vector<Edge> edges);

  int size() const { return m_; }
  bool directed() const { return directed_; }
  /// Sorted, duplicate free.
  const std::vector<Edge>& edges() const { return edges_; }
  /// Number of links counted the way the graph is declared (pairs when undirected).
  std::size_t link_count() const;

  const std::vector<int>& in_neighbors(int i) const { return in_[i]; }
  const std::vector<int>& out_neighbors(int i) const { return out_[i]; }
  int max_degree() const;
  /// Undirected connectivity (ignores orientation).
  bool weakly_connected() const;

  bool operator==(const Topology& other) const {
    return m_ == other.m_ && directed_ == other.directed_ && edges_ == other.edges_;
  }

 private:
  int m_ = 0;
  bool directed_ = true;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> out_;
};

/// Builds one of the four experiment topologies. `edge_target` is required for
/// the random kinds and counts directed edges (RandomDigraph) or undirected
/// links (RandomUndirected). Petersen ignores `m`.
Topology build_topology(TopologyKind kind, int m, std::optional<int> edge_target,
                        std::uint64_t seed);

/// Edge-list text: first line "m directed|undirected", then "j i" per edge.
/// Undirected graphs list each link once with j < i.
void write_edge_list(std::ostream& os, const Topology& t);
Topology read_edge_list(std::istream& is);

enum class Stochasticity { Row, Column, Doubly };

std::string to_string(Stochasticity kind);

/// Nonnegative m x m weight matrix with a declared stochasticity kind.
/// Construction validates the invariants of the declared kind.
class MixingMatrix {
 public:
  MixingMatrix(Eigen::MatrixXd weights, Stochasticity kind);

  int size() const { return static_cast<int>(w_.rows()); }
  Stochasticity kind() const { return kind_; }
  const Eigen::MatrixXd& weights() const { return w_; }
  double operator()(int i, int j) const { return w_(i, j); }

  /// Column indices of the nonzero entries of row i, ascending.
  const std::vector<int>& row_support(int i) const { return support_[i]; }

  /// Largest deviation of the relevant row/column sums from 1.
  double stochasticity_deviation() const;
  double min_diagonal() const { return w_.diagonal().minCoeff(); }

  static constexpr double kSumTolerance = 1e-12;

 private:
  Eigen::MatrixXd w_;
  Stochasticity kind_;
  std::vector<std::vector<int>> support_;
};

/// R_ij = 1/(|N_in(i)|+r_i) for in-neighbours j, R_ii = r_i/(|N_in(i)|+r_i).
MixingMatrix build_pull_matrix(const Topology& t, const std::vector<double>& self_weights);
/// C_li = 1/(|N_out(i)|+c_i) for out-neighbours l, C_ii = c_i/(|N_out(i)|+c_i).
MixingMatrix build_push_matrix(const Topology& t, const std::vector<double>& self_weights);
/// Max-degree weights W = I - L/(2 d_max) on a connected undirected topology.
MixingMatrix build_gossip_matrix(const Topology& t);

/// Nodes from which every node is reachable along directed edges.
std::vector<int> root_set(const Topology& t);

/// Digraph induced by a nonnegative matrix: (j -> i) iff B_ij > 0, i != j.
Topology induced_digraph(const Eigen::MatrixXd& b);

/// Whether the root sets of G_R and G_{C^T} intersect.
bool check_root_intersection(const MixingMatrix& r, const MixingMatrix& c);

struct SpectralReport {
  std::optional<Vector> u;  ///< u^T R = u^T, sum(u) = m
  std::optional<Vector> v;  ///< C v = v, sum(v) = m
  std::optional<double> sigma_r;
  std::optional<double> sigma_c;
  std::optional<double> rho_w;
  double u_residual = 0.0;
  double v_residual = 0.0;
};

struct PowerIterationOptions {
  int max_iterations = 100000;
  double tolerance = 1e-12;
  std::uint64_t seed = 0x5eed;
};

/// Perron vectors of R and C, spectral radii of the deflated matrices, and the
/// spectral norm of W - 11^T/m. Throws NumericalError if a Perron vector
/// iteration stalls.
SpectralReport spectral_report(const MixingMatrix* r, const MixingMatrix* c,
                               const MixingMatrix* w, const PowerIterationOptions& opts = {});

/// Dominant eigenvector of a nonnegative matrix with eigenvalue 1, scaled to sum to its size.
Vector perron_vector(const Eigen::MatrixXd& a, const PowerIterationOptions& opts, double* residual);

/// Spectral radius estimate by power iteration (handles real, negative and
/// complex dominant pairs through the geometric mean of the growth factors).
double spectral_radius(const Eigen::MatrixXd& a, const PowerIterationOptions& opts);

}  // namespace optneq
