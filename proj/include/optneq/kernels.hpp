#pragma once

// Per-iteration data-parallel kernels. Every kernel computes each output row
// with a fixed operation order, so results are bit-identical for any OpenMP
// thread count. The `reference` namespace holds plain serial versions used as
// test oracles and benchmark baselines.

#include "optneq/common.hpp"
#include "optneq/graph.hpp"
#include "optneq/problem.hpp"

#include <span>

namespace optneq {

/// Sets the OpenMP worker count; 0 keeps the runtime default.
void set_worker_count(int threads);
int worker_count();

namespace kernels {

/// out = W z, summing each row over the support of W in ascending column order.
void mix(const MixingMatrix& w, const Matrix& z, Matrix& out);

/// out = x - diag(step) y
void axpy_rows(const Matrix& x, std::span<const double> step, const Matrix& y, Matrix& out);

/// Row i = F_i(x_i) + lambda grad f_i(x_i).
void regularized_rows(const ProblemInstance& inst, const Matrix& x, double lambda, Matrix& out);

/// Row i = F_i(x_i, xi_i) + lambda grad f_i(x_i, xi_i) with xi_i drawn from
/// key {seed, path, iteration, i}.
void sampled_regularized_rows(const ProblemInstance& inst, const Matrix& x, double lambda,
                              const NoiseKey& base, Matrix& out);

/// Largest absolute entry, or +inf if any entry is not finite.
double max_abs_or_inf(const Matrix& a);

}  // namespace kernels

namespace reference {

void mix(const MixingMatrix& w, const Matrix& z, Matrix& out);
void axpy_rows(const Matrix& x, std::span<const double> step, const Matrix& y, Matrix& out);
void regularized_rows(const ProblemInstance& inst, const Matrix& x, double lambda, Matrix& out);
void sampled_regularized_rows(const ProblemInstance& inst, const Matrix& x, double lambda,
                              const NoiseKey& base, Matrix& out);

}  // namespace reference

}  // namespace optneq
