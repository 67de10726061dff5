#include <random>

#include <benchmark/benchmark.h>

#include "gi/kernels.hpp"

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
  return m;
}

std::vector<std::size_t> round_robin(std::size_t rows, std::size_t groups) {
  std::vector<std::size_t> g(rows);
  for (std::size_t i = 0; i < rows; ++i) g[i] = i % groups;
  return g;
}

template <double (*Kernel)(const Eigen::MatrixXd&, const Eigen::MatrixXd&)>
void BM_PairwiseDistanceSum(benchmark::State& state) {
  const auto n = state.range(0);
  const auto a = random_matrix(n, 5, 1);
  const auto b = random_matrix(n, 5, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b));
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <gi::kernels::GroupMoments (*Kernel)(const Eigen::MatrixXd&, const std::vector<std::size_t>&,
                                              std::size_t)>
void BM_GroupMoments(benchmark::State& state) {
  const auto n = state.range(0);
  const auto x = random_matrix(n, 5, 3);
  const auto g = round_robin(static_cast<std::size_t>(n), 20);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(x, g, 20));
  state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(BM_PairwiseDistanceSum<gi::kernels::serial::pairwise_distance_sum>)->Name("pairwise/serial")->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(BM_PairwiseDistanceSum<gi::kernels::parallel::pairwise_distance_sum>)->Name("pairwise/parallel")->Arg(256)->Arg(1024)->Arg(4096)->UseRealTime();
BENCHMARK(BM_GroupMoments<gi::kernels::serial::group_moments>)->Name("group_moments/serial")->Arg(10000)->Arg(100000);
BENCHMARK(BM_GroupMoments<gi::kernels::parallel::group_moments>)->Name("group_moments/parallel")->Arg(10000)->Arg(100000)->UseRealTime();

BENCHMARK_MAIN();
