#include "optneq/problem.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace optneq {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Eigen::Map<const Vector> as_vector(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

Eigen::Map<Vector> as_vector(std::span<double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

}  // namespace

double keyed_uniform(const NoiseKey& key) {
  std::uint64_t h = splitmix64(key.seed);
  h = splitmix64(h ^ key.path);
  h = splitmix64(h ^ key.iteration);
  h = splitmix64(h ^ key.agent);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------

void LocalOracle::sample(std::span<const double> x, const NoiseKey&, std::span<double> map_out,
                         std::span<double> grad_out) const {
  map(x, map_out);
  grad(x, grad_out);
}

void LocalOracle::add_jacobian(std::span<const double> x, double map_scale, double grad_scale,
                               Eigen::MatrixXd& jac) const {
  const int n = dimension();
  Vector xp = as_vector(x), xm = as_vector(x);
  Vector fp(n), fm(n), gp(n), gm(n);
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    xp(j) = x[j] + h;
    xm(j) = x[j] - h;
    map(view(xp), view(fp));
    map(view(xm), view(fm));
    grad(view(xp), view(gp));
    grad(view(xm), view(gm));
    jac.col(j) += (map_scale * (fp - fm) + grad_scale * (gp - gm)) / (2.0 * h);
    xp(j) = xm(j) = x[j];
  }
}

// ---------------------------------------------------------------------------

AffineOracle::AffineOracle(Eigen::MatrixXd a, Vector p, Eigen::MatrixXd h, Vector q)
    : a_(std::move(a)), h_(std::move(h)), p_(std::move(p)), q_(std::move(q)) {
  const auto n = p_.size();
  if (a_.rows() != n || a_.cols() != n || h_.rows() != n || h_.cols() != n || q_.size() != n)
    throw ConfigError("affine oracle dimensions disagree");
}

void AffineOracle::map(std::span<const double> x, std::span<double> out) const {
  as_vector(out).noalias() = a_ * as_vector(x) + p_;
}

void AffineOracle::grad(std::span<const double> x, std::span<double> out) const {
  as_vector(out).noalias() = h_ * as_vector(x) + q_;
}

double AffineOracle::objective(std::span<const double> x) const {
  const auto v = as_vector(x);
  return 0.5 * v.dot(h_ * v) + q_.dot(v);
}

void AffineOracle::add_jacobian(std::span<const double>, double map_scale, double grad_scale,
                                Eigen::MatrixXd& jac) const {
  jac += map_scale * a_ + grad_scale * h_;
}

// ---------------------------------------------------------------------------

ProblemInstance::ProblemInstance(std::vector<std::shared_ptr<const LocalOracle>> oracles,
                                 double strong_convexity, std::string noise)
    : oracles_(std::move(oracles)), mu_f_(strong_convexity), noise_(std::move(noise)) {
  if (oracles_.empty()) throw ConfigError("problem needs at least one agent");
  n_ = oracles_.front()->dimension();
  for (const auto& o : oracles_) {
    if (!o || o->dimension() != n_) throw ConfigError("all oracles must share one dimension");
  }
}

bool ProblemInstance::stochastic() const {
  return std::any_of(oracles_.begin(), oracles_.end(), [](const auto& o) { return o->stochastic(); });
}

Vector ProblemInstance::total_map(const Vector& x) const {
  Vector sum = Vector::Zero(n_), tmp(n_);
  for (const auto& o : oracles_) {
    o->map(view(x), view(tmp));
    sum += tmp;
  }
  return sum;
}

Vector ProblemInstance::total_grad(const Vector& x) const {
  Vector sum = Vector::Zero(n_), tmp(n_);
  for (const auto& o : oracles_) {
    o->grad(view(x), view(tmp));
    sum += tmp;
  }
  return sum;
}

double ProblemInstance::total_objective(const Vector& x) const {
  double sum = 0.0;
  for (const auto& o : oracles_) sum += o->objective(view(x));
  return sum;
}

Vector ProblemInstance::regularized_map(const Vector& x, double lambda) const {
  return total_map(x) + lambda * total_grad(x);
}

Eigen::MatrixXd ProblemInstance::regularized_jacobian(const Vector& x, double lambda) const {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n_, n_);
  for (const auto& o : oracles_) o->add_jacobian(view(x), 1.0, lambda, jac);
  return jac;
}

ProblemInstance make_skew_toy(int agents, const Vector& c) {
  if (agents < 1 || c.size() != 2) throw ConfigError("skew toy needs agents >= 1 and c in R^2");
  const double share = 1.0 / agents;
  Eigen::Matrix2d a;
  a << 0.0, 1.0, -1.0, 0.0;
  std::vector<std::shared_ptr<const LocalOracle>> oracles;
  for (int i = 0; i < agents; ++i) {
    oracles.push_back(std::make_shared<AffineOracle>(share * a, Vector::Zero(2),
                                                     share * Eigen::MatrixXd::Identity(2, 2),
                                                     -share * c));
  }
  return ProblemInstance(std::move(oracles), 1.0);
}

// ---------------------------------------------------------------------------
// Cournot

double moreau_grad(double z, double lo, double hi, double eta) {
  return (z - std::clamp(z, lo, hi)) / eta;
}

namespace {

double coupling(const CournotParams& p, int i, const Vector& x) {
  double s = 0.0;
  for (int j = 0; j < p.players(); ++j) {
    if (j != i) s += p.cbar(i, j) * x(j);
  }
  return s;
}

void check_player(const CournotParams& p, int i, const Vector& x) {
  if (i < 0 || i >= p.players()) throw ConfigError("player index out of range");
  if (x.size() != p.players()) throw ConfigError("strategy vector has wrong dimension");
}

double own_marginal(const CournotParams& p, int i, const Vector& x, std::optional<double> b_i) {
  return p.abar(i) * x(i) + b_i.value_or(p.bbar(i)) + coupling(p, i, x) +
         moreau_grad(x(i), 0.0, p.caps(i), p.eta);
}

}  // namespace

Vector cournot_map_i(const CournotParams& p, int i, const Vector& x, std::optional<double> b_i) {
  check_player(p, i, x);
  Vector out = Vector::Zero(x.size());
  out(i) = own_marginal(p, i, x, b_i);
  return out;
}

Vector cournot_grad_i(const CournotParams& p, int i, const Vector& x, std::optional<double> b_i) {
  check_player(p, i, x);
  const double share = p.theta_reg / p.players();
  Vector out(x.size());
  for (int j = 0; j < p.players(); ++j) out(j) = p.cbar(i, j) * x(i) + share * x(j);
  out(i) = own_marginal(p, i, x, b_i) + share * x(i);
  return out;
}

double cournot_objective_i(const CournotParams& p, int i, const Vector& x, std::optional<double> b_i) {
  check_player(p, i, x);
  const double xi = x(i);
  const double dist = xi - std::clamp(xi, 0.0, p.caps(i));
  return 0.5 * p.abar(i) * xi * xi + b_i.value_or(p.bbar(i)) * xi + coupling(p, i, x) * xi +
         dist * dist / (2.0 * p.eta) + 0.5 * p.theta_reg / p.players() * x.squaredNorm();
}

double compute_theta_reg(const Eigen::MatrixXd& cbar, const Vector& abar) {
  if (cbar.rows() != abar.size() || cbar.cols() != abar.size())
    throw ConfigError("cbar and abar dimensions disagree");
  const Eigen::MatrixXd lower = cbar - 0.5 * Eigen::MatrixXd(abar.asDiagonal());
  // Hessian of sum_i f_i without the smoothing term is lower + lower^T.
  const Eigen::MatrixXd hess = lower + lower.transpose();
  const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
  return 1e-5 + std::max(0.0, -lmin);
}

namespace {

class CournotOracle final : public LocalOracle {
 public:
  CournotOracle(std::shared_ptr<const CournotParams> p, int i) : p_(std::move(p)), i_(i) {}

  int dimension() const override { return p_->players(); }

  void map(std::span<const double> x, std::span<double> out) const override {
    as_vector(out) = cournot_map_i(*p_, i_, as_vector(x));
  }
  void grad(std::span<const double> x, std::span<double> out) const override {
    as_vector(out) = cournot_grad_i(*p_, i_, as_vector(x));
  }
  double objective(std::span<const double> x) const override {
    return cournot_objective_i(*p_, i_, as_vector(x));
  }

  bool stochastic() const override { return p_->b_noise.has_value(); }

  void sample(std::span<const double> x, const NoiseKey& key, std::span<double> map_out,
              std::span<double> grad_out) const override {
    std::optional<double> b;
    if (p_->b_noise) b = p_->b_noise->lo + (p_->b_noise->hi - p_->b_noise->lo) * keyed_uniform(key);
    const Vector xv = as_vector(x);
    as_vector(map_out) = cournot_map_i(*p_, i_, xv, b);
    as_vector(grad_out) = cournot_grad_i(*p_, i_, xv, b);
  }

  void add_jacobian(std::span<const double> x, double map_scale, double grad_scale,
                    Eigen::MatrixXd& jac) const override {
    const auto& p = *p_;
    const int m = p.players();
    const double share = p.theta_reg / m;
    const double xi = x[i_];
    const double curvature = (xi < 0.0 || xi > p.caps(i_)) ? 1.0 / p.eta : 0.0;
    for (int j = 0; j < m; ++j) {
      jac(j, j) += grad_scale * share;
      if (j == i_) continue;
      jac(i_, j) += (map_scale + grad_scale) * p.cbar(i_, j);
      jac(j, i_) += grad_scale * p.cbar(i_, j);
    }
    jac(i_, i_) += (map_scale + grad_scale) * (p.abar(i_) + curvature);
  }

 private:
  std::shared_ptr<const CournotParams> p_;
  int i_;
};

}  // namespace

ProblemInstance make_cournot_instance(std::shared_ptr<const CournotParams> params) {
  const auto& p = *params;
  const Eigen::MatrixXd lower = p.cbar - 0.5 * Eigen::MatrixXd(p.abar.asDiagonal());
  const double lmin =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lower + lower.transpose(),
                                                     Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  std::string noise = "none";
  if (p.b_noise) {
    noise = "b_i ~ U[" + std::to_string(p.b_noise->lo) + ", " + std::to_string(p.b_noise->hi) + "]";
  }
  std::vector<std::shared_ptr<const LocalOracle>> oracles;
  for (int i = 0; i < p.players(); ++i) oracles.push_back(std::make_shared<CournotOracle>(params, i));
  return ProblemInstance(std::move(oracles), std::max(lmin + p.theta_reg, 0.0), noise);
}

CournotProblem build_cournot(const CournotSpec& spec) {
  if (spec.m < 1) throw ConfigError("Cournot game needs at least one player");
  if (spec.rank < 1 || spec.rank >= spec.m) throw ConfigError("rank must lie in [1, m)");
  if (!(spec.eta > 0.0)) throw ConfigError("eta must be positive");
  if (!(spec.cap_lo > 0.0) || spec.cap_hi < spec.cap_lo) throw ConfigError("bad cap range");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> factor(0.0, spec.factor_std);
  Eigen::MatrixXd g(spec.rank, spec.m);
  for (int r = 0; r < spec.rank; ++r) {
    for (int c = 0; c < spec.m; ++c) g(r, c) = factor(rng);
  }

  auto p = std::make_shared<CournotParams>();
  p->cbar = g.transpose() * g;
  p->abar = p->cbar.diagonal();
  p->eta = spec.eta;
  p->theta_reg = compute_theta_reg(p->cbar, p->abar);

  std::uniform_real_distribution<double> cap(spec.cap_lo, spec.cap_hi);
  p->caps.resize(spec.m);
  for (int i = 0; i < spec.m; ++i) p->caps(i) = cap(rng);

  p->bbar.resize(spec.m);
  if (const auto* gauss = std::get_if<GaussianB>(&spec.b)) {
    std::normal_distribution<double> bdist(gauss->mean, std::sqrt(gauss->variance));
    for (int i = 0; i < spec.m; ++i) p->bbar(i) = bdist(rng);
  } else {
    const auto& uni = std::get<UniformNoise>(spec.b);
    if (uni.hi < uni.lo) throw ConfigError("bad uniform range for b");
    p->bbar.setConstant(0.5 * (uni.lo + uni.hi));
    p->b_noise = uni;
  }

  auto inst = make_cournot_instance(p);
  return {std::move(p), std::move(inst)};
}

std::pair<Vector, Vector> sample_local(const ProblemInstance& inst, int i, const Vector& x,
                                       const NoiseKey& key) {
  const int n = inst.dimension();
  Vector f(n), g(n);
  inst.oracle(i).sample(view(x), key, view(f), view(g));
  return {std::move(f), std::move(g)};
}

}  // namespace optneq
