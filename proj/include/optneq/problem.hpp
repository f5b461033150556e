#pragma once

#include "optneq/common.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace optneq {

/// Span views over Eigen vectors for the oracle interface.
inline std::span<const double> view(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// Identifies one random draw: the same key always yields the same value,
/// independent of evaluation order or worker count.
struct NoiseKey {
  std::uint64_t seed = 0;
  std::uint64_t path = 0;
  std::uint64_t iteration = 0;
  std::uint64_t agent = 0;
};

/// Uniform variate in [0, 1) from a counter-based keyed hash.
double keyed_uniform(const NoiseKey& key);

/// Local information of one agent: its map F_i and its objective f_i, both over R^n.
class LocalOracle {
 public:
  virtual ~LocalOracle() = default;

  virtual int dimension() const = 0;
  virtual void map(std::span<const double> x, std::span<double> out) const = 0;
  virtual void grad(std::span<const double> x, std::span<double> out) const = 0;
  virtual double objective(std::span<const double> x) const = 0;

  virtual bool stochastic() const { return false; }
  /// F_i(x, xi) and grad f_i(x, xi) evaluated at one shared draw xi(key).
  virtual void sample(std::span<const double> x, const NoiseKey& key, std::span<double> map_out,
                      std::span<double> grad_out) const;

  /// jac += map_scale * dF_i(x) + grad_scale * d^2 f_i(x). The default uses
  /// central differences; closed-form oracles override it.
  virtual void add_jacobian(std::span<const double> x, double map_scale, double grad_scale,
                            Eigen::MatrixXd& jac) const;
};

/// F_i(x) = A x + p and f_i(x) = x^T H x / 2 + q^T x (H symmetric).
class AffineOracle final : public LocalOracle {
 public:
  AffineOracle(Eigen::MatrixXd a, Vector p, Eigen::MatrixXd h, Vector q);

  int dimension() const override { return static_cast<int>(p_.size()); }
  void map(std::span<const double> x, std::span<double> out) const override;
  void grad(std::span<const double> x, std::span<double> out) const override;
  double objective(std::span<const double> x) const override;
  void add_jacobian(std::span<const double> x, double map_scale, double grad_scale,
                    Eigen::MatrixXd& jac) const override;

 private:
  Eigen::MatrixXd a_, h_;
  Vector p_, q_;
};

/// m agents sharing one ambient dimension n.
class ProblemInstance {
 public:
  ProblemInstance(std::vector<std::shared_ptr<const LocalOracle>> oracles, double strong_convexity,
                  std::string noise = "none");

  int agents() const { return static_cast<int>(oracles_.size()); }
  int dimension() const { return n_; }
  const LocalOracle& oracle(int i) const { return *oracles_.at(i); }
  bool stochastic() const;
  /// Lower bound on the strong convexity modulus of f = sum f_i.
  double strong_convexity() const { return mu_f_; }
  const std::string& noise() const { return noise_; }

  /// F(x) = sum_i F_i(x)
  Vector total_map(const Vector& x) const;
  Vector total_grad(const Vector& x) const;
  double total_objective(const Vector& x) const;
  /// F(x) + lambda grad f(x)
  Vector regularized_map(const Vector& x, double lambda) const;
  Eigen::MatrixXd regularized_jacobian(const Vector& x, double lambda) const;

 private:
  std::vector<std::shared_ptr<const LocalOracle>> oracles_;
  int n_ = 0;
  double mu_f_ = 0.0;
  std::string noise_;
};

/// Centralised skew example split evenly over m agents:
/// F(x) = A x with A = [[0,1],[-1,0]], f(x) = |x - c|^2 / 2.
ProblemInstance make_skew_toy(int agents, const Vector& c);

// ---------------------------------------------------------------------------
// Moreau-smoothed Cournot game

/// Gradient of the Moreau envelope of the indicator of [lo, hi]: (z - clamp(z))/eta.
double moreau_grad(double z, double lo, double hi, double eta);

struct UniformNoise {
  double lo = 1.0;
  double hi = 10.0;
  bool operator==(const UniformNoise&) const = default;
};

struct CournotParams {
  Eigen::MatrixXd cbar;   ///< off-diagonal entries are the coupling coefficients c_ij
  Vector abar;            ///< quadratic coefficients a_i
  Vector bbar;            ///< linear coefficients b_i (the mean when noisy)
  Vector caps;            ///< box [0, caps_i]
  double eta = 0.1;
  double theta_reg = 0.0;
  std::optional<UniformNoise> b_noise;  ///< b_i(xi) ~ U[lo, hi] per draw

  int players() const { return static_cast<int>(abar.size()); }
};

/// Coordinate i of F_i; all other coordinates of F_i are zero. `b_i` overrides bbar(i).
Vector cournot_map_i(const CournotParams& p, int i, const Vector& x,
                     std::optional<double> b_i = std::nullopt);
/// Full gradient of f_i(x) = h_i(x_i) + l_i(x_-i) x_i + dist^2(x_i, X_i)/(2 eta) + theta/(2m)|x|^2.
Vector cournot_grad_i(const CournotParams& p, int i, const Vector& x,
                      std::optional<double> b_i = std::nullopt);
double cournot_objective_i(const CournotParams& p, int i, const Vector& x,
                           std::optional<double> b_i = std::nullopt);

/// theta = 1e-5 + max(0, -lambda_min(L + L^T)) with L = cbar - diag(abar)/2.
/// L + L^T is the Hessian of the unregularized welfare sum, so f is
/// (1e-5)-strongly convex at least.
double compute_theta_reg(const Eigen::MatrixXd& cbar, const Vector& abar);

struct GaussianB {
  double mean = 0.0;
  double variance = 10.0;
  bool operator==(const GaussianB&) const = default;
};
using BSpec = std::variant<GaussianB, UniformNoise>;

struct CournotSpec {
  int m = 10;
  int rank = 5;
  std::uint64_t seed = 1;
  double eta = 0.1;
  double cap_lo = 50.0;
  double cap_hi = 100.0;
  double factor_std = 1.0;  ///< entries of the rank x m factor G in C = G^T G
  BSpec b = GaussianB{};

  bool operator==(const CournotSpec&) const = default;
};

struct CournotProblem {
  std::shared_ptr<const CournotParams> params;
  ProblemInstance instance;
};

CournotProblem build_cournot(const CournotSpec& spec);
ProblemInstance make_cournot_instance(std::shared_ptr<const CournotParams> params);

/// One sampled evaluation of agent i: (F_i(x, xi), grad f_i(x, xi)) with a shared draw.
std::pair<Vector, Vector> sample_local(const ProblemInstance& inst, int i, const Vector& x,
                                       const NoiseKey& key);

}  // namespace optneq
