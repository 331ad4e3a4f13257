#include <benchmark/benchmark.h>

#include <cmath>

#include "stablelad/index_scale.hpp"
#include "stablelad/lad.hpp"
#include "stablelad/sde_sim.hpp"
#include "stablelad/stable_noise.hpp"

using namespace stablelad;

namespace {

ObservationPath make_path(std::size_t n, double alpha, std::uint64_t seed) {
  ObservationPath path;
  path.design.n = n;
  path.design.h_n = 1.0 / static_cast<double>(n);
  path.design.horizon = HorizonErgodic{};
  path.values.resize(n + 1, 0.0);
  const double s = std::pow(path.design.h_n, 1.0 / alpha);
  const auto noise = sample_standard_stable(alpha, n, seed);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = path.values[k];
    path.values[k + 1] = x + path.design.h_n * (0.5 - x) + s * noise[k];
  }
  return path;
}

void BM_StableSampler(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_standard_stable(1.5, n, seed++));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_StableSampler)->Arg(1 << 12)->Arg(1 << 16);

void BM_NoiseIncrementsTempered(benchmark::State& state) {
  LevyConfig cfg;
  cfg.alpha = 1.5;
  cfg.nuisance = NuisanceTemperedTail{0.2, 1.5, 0.05};
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_noise_increments(cfg, 1e-3, n, seed++));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_NoiseIncrementsTempered)->Arg(1 << 12)->Arg(1 << 16);

void BM_SimulatePath(benchmark::State& state) {
  ModelSpec model;
  model.drift = LinearDrift{};
  model.theta0 = {0.0, -1.0};
  model.sigma = ScaleConstant{1.0};
  model.theta_domain = {{-5, -5}, {5, 5}};
  model.levy.alpha = 1.7;
  SamplingDesign design{static_cast<std::size_t>(state.range(0)),
                        1.0 / static_cast<double>(state.range(0)), HorizonFixedT{1.0}, 0.55};
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_path(model, design, 16, seed++));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 16);
}
BENCHMARK(BM_SimulatePath)->Arg(1 << 12)->Arg(1 << 14);

void BM_SolveLadAffine(benchmark::State& state) {
  const auto path = make_path(static_cast<std::size_t>(state.range(0)), 1.7, 9);
  const LadProblem problem{path, ModelLite{LinearDrift{}, WeightOne{}, {{-8, -8}, {8, 8}}},
                           RegressorKind::Euler};
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_lad(problem));
  }
}
BENCHMARK(BM_SolveLadAffine)->Arg(1 << 12)->Arg(1 << 14);

void BM_EstimateAlpha(benchmark::State& state) {
  const auto path = make_path(static_cast<std::size_t>(state.range(0)), 1.5, 11);
  PowerVariationConfig cfg;
  cfg.rho = 0.25;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_alpha(path, cfg));
  }
}
BENCHMARK(BM_EstimateAlpha)->Arg(1 << 14)->Arg(1 << 17);

void BM_SpotScales(benchmark::State& state) {
  const auto path = make_path(static_cast<std::size_t>(state.range(0)), 1.5, 13);
  PowerVariationConfig cfg;
  cfg.rho = 0.25;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_spot_scales(path, cfg, 1.5));
  }
}
BENCHMARK(BM_SpotScales)->Arg(1 << 14)->Arg(1 << 17);

}  // namespace

BENCHMARK_MAIN();
