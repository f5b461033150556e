// Parallel kernels against their serial reference versions.

#include "optneq/graph.hpp"
#include "optneq/kernels.hpp"
#include "optneq/problem.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace optneq;

struct Fixture {
  explicit Fixture(int m)
      : topo(build_topology(TopologyKind::RandomDigraph, m, 5 * m, 3)),
        r(build_pull_matrix(topo, std::vector<double>(m, 1.0))),
        prob(build_cournot({.m = m, .rank = m / 2, .seed = 2, .b = UniformNoise{}})) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(0.0, 100.0);
    x.resize(m, m);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = d(rng);
  }
  Topology topo;
  MixingMatrix r;
  CournotProblem prob;
  Matrix x;
};

template <bool Parallel>
void BM_Mix(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::mix(f.r, f.x, out);
    else reference::mix(f.r, f.x, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_Regularized(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::regularized_rows(f.prob.instance, f.x, 0.1, out);
    else reference::regularized_rows(f.prob.instance, f.x, 0.1, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_Sampled(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  Matrix out;
  NoiseKey key{1, 0, 0, 0};
  for (auto _ : state) {
    ++key.iteration;
    if constexpr (Parallel) kernels::sampled_regularized_rows(f.prob.instance, f.x, 0.1, key, out);
    else reference::sampled_regularized_rows(f.prob.instance, f.x, 0.1, key, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_Mix<false>)->Arg(10)->Arg(100)->Arg(400);
BENCHMARK(BM_Mix<true>)->Arg(10)->Arg(100)->Arg(400);
BENCHMARK(BM_Regularized<false>)->Arg(10)->Arg(100)->Arg(400);
BENCHMARK(BM_Regularized<true>)->Arg(10)->Arg(100)->Arg(400);
BENCHMARK(BM_Sampled<false>)->Arg(10)->Arg(100)->Arg(400);
BENCHMARK(BM_Sampled<true>)->Arg(10)->Arg(100)->Arg(400);

BENCHMARK_MAIN();
