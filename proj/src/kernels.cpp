#include "optneq/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <limits>

namespace optneq {

namespace {

// Below this many matrix entries a parallel region costs more than it saves.
constexpr Eigen::Index kParallelThreshold = 4096;

void check_shapes(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ConfigError("matrix shapes disagree");
}

}  // namespace

void set_worker_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int worker_count() { return omp_get_max_threads(); }

namespace kernels {

void mix(const MixingMatrix& w, const Matrix& z, Matrix& out) {
  const Eigen::Index m = z.rows();
  if (w.size() != m) throw ConfigError("mixing matrix and state disagree in size");
  out.resize(m, z.cols());
#pragma omp parallel for schedule(static) if (m * z.cols() >= kParallelThreshold)
  for (Eigen::Index i = 0; i < m; ++i) {
    auto row = out.row(i);
    row.setZero();
    for (int j : w.row_support(static_cast<int>(i))) row += w(static_cast<int>(i), j) * z.row(j);
  }
}

void axpy_rows(const Matrix& x, std::span<const double> step, const Matrix& y, Matrix& out) {
  check_shapes(x, y);
  out.resize(x.rows(), x.cols());
  const Eigen::Index m = x.rows();
#pragma omp parallel for schedule(static) if (m * x.cols() >= kParallelThreshold)
  for (Eigen::Index i = 0; i < m; ++i) out.row(i) = x.row(i) - step[i] * y.row(i);
}

void regularized_rows(const ProblemInstance& inst, const Matrix& x, double lambda, Matrix& out) {
  const int m = inst.agents(), n = inst.dimension();
  out.resize(m, n);
#pragma omp parallel if (Eigen::Index(m) * n >= kParallelThreshold)
  {
    Vector f(n), g(n);
#pragma omp for schedule(static)
    for (int i = 0; i < m; ++i) {
      const auto& o = inst.oracle(i);
      o.map({x.row(i).data(), std::size_t(n)}, {f.data(), std::size_t(n)});
      o.grad({x.row(i).data(), std::size_t(n)}, {g.data(), std::size_t(n)});
      out.row(i) = (f + lambda * g).transpose();
    }
  }
}

void sampled_regularized_rows(const ProblemInstance& inst, const Matrix& x, double lambda,
                              const NoiseKey& base, Matrix& out) {
  const int m = inst.agents(), n = inst.dimension();
  out.resize(m, n);
#pragma omp parallel if (Eigen::Index(m) * n >= kParallelThreshold)
  {
    Vector f(n), g(n);
#pragma omp for schedule(static)
    for (int i = 0; i < m; ++i) {
      NoiseKey key = base;
      key.agent = static_cast<std::uint64_t>(i);
      inst.oracle(i).sample({x.row(i).data(), std::size_t(n)}, key, {f.data(), std::size_t(n)},
                            {g.data(), std::size_t(n)});
      out.row(i) = (f + lambda * g).transpose();
    }
  }
}

double max_abs_or_inf(const Matrix& a) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double v = a.data()[i];
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

}  // namespace kernels

namespace reference {

void mix(const MixingMatrix& w, const Matrix& z, Matrix& out) {
  const Eigen::Index m = z.rows(), n = z.cols();
  out.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index c = 0; c < n; ++c) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (w(int(i), int(j)) != 0.0) s += w(int(i), int(j)) * z(j, c);
      }
      out(i, c) = s;
    }
  }
}

void axpy_rows(const Matrix& x, std::span<const double> step, const Matrix& y, Matrix& out) {
  out.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) out(i, c) = x(i, c) - step[i] * y(i, c);
  }
}

void regularized_rows(const ProblemInstance& inst, const Matrix& x, double lambda, Matrix& out) {
  const int m = inst.agents();
  out.resize(m, inst.dimension());
  for (int i = 0; i < m; ++i) {
    const Vector xi = x.row(i).transpose();
    const auto rows = inst.dimension();
    Vector f(rows), g(rows);
    inst.oracle(i).map(view(xi), view(f));
    inst.oracle(i).grad(view(xi), view(g));
    for (int c = 0; c < rows; ++c) out(i, c) = f(c) + lambda * g(c);
  }
}

void sampled_regularized_rows(const ProblemInstance& inst, const Matrix& x, double lambda,
                              const NoiseKey& base, Matrix& out) {
  const int m = inst.agents();
  out.resize(m, inst.dimension());
  for (int i = 0; i < m; ++i) {
    NoiseKey key = base;
    key.agent = static_cast<std::uint64_t>(i);
    auto [f, g] = sample_local(inst, i, x.row(i).transpose(), key);
    for (int c = 0; c < inst.dimension(); ++c) out(i, c) = f(c) + lambda * g(c);
  }
}

}  // namespace reference

}  // namespace optneq
