#include <benchmark/benchmark.h>

#include "das/engine.hpp"
#include "das/io.hpp"
#include "das/synthetic.hpp"
#include "fixtures.hpp"

namespace {

das::SyntheticConfig checkpoint_config(std::size_t images) {
  das::SyntheticConfig c;
  c.num_classes = 20;
  c.feature_dim = 128;
  c.images_per_domain = images;
  c.min_objects = c.max_objects = 100;
  c.proposals_per_object = 1;
  c.background_proposals = 0;
  c.trajectory_length = 1;
  c.sharpness_start = c.sharpness_end = 2.0;
  c.class_separation = 6.0;
  c.binary_features = true;
  return c;
}

void BM_ScoreCheckpoint(benchmark::State& state) {
  const auto run = das::generate_trajectory(checkpoint_config(static_cast<std::size_t>(state.range(0))));
  das::ScoreOptions opts;
  opts.baselines = state.range(1) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(das::score_checkpoint(run.checkpoints[0], run.manifest.dims, opts).fis);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreCheckpoint)->Args({50, 0})->Args({50, 1})->Args({500, 0})->Unit(benchmark::kMillisecond);

void BM_LoadCheckpoint(benchmark::State& state) {
  das::fixture::TempDir dir("bench-load");
  const auto manifest = das::write_synthetic_run(checkpoint_config(static_cast<std::size_t>(state.range(0))), dir.path());
  for (auto _ : state) benchmark::DoNotOptimize(das::load_checkpoint(manifest, 0).target_original.images.size());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LoadCheckpoint)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_SyntheticTrajectory(benchmark::State& state) {
  das::SyntheticConfig c;
  for (auto _ : state) {
    c.seed++;
    benchmark::DoNotOptimize(das::generate_trajectory(c).checkpoints.size());
  }
}
BENCHMARK(BM_SyntheticTrajectory)->Unit(benchmark::kMillisecond);

}  // namespace
