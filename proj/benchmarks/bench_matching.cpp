#include <random>

#include <benchmark/benchmark.h>

#include "das/matching.hpp"

namespace {

das::CostMatrix random_costs(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  das::CostMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
  return m;
}

void BM_HungarianSquare(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const auto m = random_costs(n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(das::hungarian_assign(m).total_cost);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HungarianSquare)->RangeMultiplier(2)->Range(4, 256)->Complexity();

void BM_HungarianTall(benchmark::State& state) {
  const auto m = random_costs(state.range(0), 10, 2);
  for (auto _ : state) benchmark::DoNotOptimize(das::hungarian_assign(m).total_cost);
}
BENCHMARK(BM_HungarianTall)->Arg(20)->Arg(100);

void BM_CostMatrix(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 20;
  std::vector<das::Detection> dets;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p(k);
    double s = 0.0;
    for (auto& x : p) s += (x = u(rng));
    for (auto& x : p) x /= s;
    const double x = 500.0 * u(rng), y = 400.0 * u(rng);
    dets.push_back({{x, y, x + 50.0, y + 40.0}, das::ProbabilityVector::from_values(p)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(das::build_cost_matrix(dets, dets).sum());
}
BENCHMARK(BM_CostMatrix)->Arg(10)->Arg(100);

}  // namespace
