// Microbenchmarks for the hot paths: controller synthesis as the memory
// window grows, closed-loop rollouts, noise sampling and the interval-length
// statistic.

#include <benchmark/benchmark.h>

#include <vector>

#include "tclqr/coupling.hpp"
#include "tclqr/metrics.hpp"
#include "tclqr/noise.hpp"
#include "tclqr/rng.hpp"
#include "tclqr/simulation.hpp"
#include "tclqr/synthesis.hpp"

namespace {

using tclqr::Matrix;
using tclqr::Vector;

tclqr::PlantModel pointMassPlant() {
  tclqr::PlantModel plant;
  plant.a = Matrix{{1.0, 0.2, 0.0, 0.0},
                   {0.0, 1.0, 0.0, 0.0},
                   {0.0, 0.0, 1.0, 0.2},
                   {0.0, 0.0, 0.0, 1.0}};
  plant.b = Matrix{{0.0, 0.0}, {0.2, 0.0}, {0.0, 0.0}, {0.0, 0.2}};
  plant.horizon = 100;
  plant.x0 = Vector{{5.0, 0.0, 5.0, 0.0}};
  return plant;
}

Matrix stateCost() {
  Vector d{{2.0, 0.1, 1.0, 0.1}};
  return d.asDiagonal();
}

tclqr::NoiseModel mixtureNoise() {
  Matrix map = Matrix::Zero(4, 2);
  map(1, 0) = 0.2;
  map(3, 1) = 0.2;
  std::vector<tclqr::GaussianSpec> comps(2);
  comps[0].mean = Vector{{0.0, 0.0}};
  comps[0].cov = Matrix{{10.0, 0.0}, {0.0, 10.0}};
  comps[1].mean = Vector{{70.0, 0.0}};
  comps[1].cov = Matrix{{70.0, 0.0}, {0.0, 10.0}};
  return tclqr::NoiseModel::pushforward(
      map, tclqr::NoiseModel::mixture({0.8, 0.2}, comps));
}

tclqr::SynthesisProblem problemWithMemory(int k) {
  tclqr::SynthesisProblem p;
  p.plant = pointMassPlant();
  p.coupling = tclqr::CouplingSpec::differencePenalty(stateCost(), 1.0, k);
  p.lambda = 1.0;
  p.effortCost = Matrix::Identity(2, 2);
  p.moments = tclqr::analyticMoments(mixtureNoise(), p.coupling.block(0, 0));
  return p;
}

void BM_Synthesize(benchmark::State& state) {
  const auto problem = problemWithMemory(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(tclqr::synthesize(problem));
  }
}
BENCHMARK(BM_Synthesize)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Arg(9);

void BM_Rollout(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const auto problem = problemWithMemory(k);
  const auto result = tclqr::synthesize(problem);
  tclqr::EnsembleConfig cfg;
  cfg.plant = problem.plant;
  cfg.coupling = problem.coupling;
  cfg.effortCost = problem.effortCost;
  cfg.lambda = problem.lambda;
  cfg.noise = mixtureNoise();
  cfg.moments = problem.moments;
  cfg.controller = result.controller;
  cfg.nTrials = 1;
  cfg.masterSeed = 1;
  cfg.threads = 1;
  std::size_t trial = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tclqr::simulate(cfg, trial++));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(cfg.plant.horizon));
}
BENCHMARK(BM_Rollout)->Arg(0)->Arg(1)->Arg(9);

void BM_NoiseSample(benchmark::State& state) {
  const auto model = mixtureNoise();
  tclqr::RandomStream rs(42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.sample(rs));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_NoiseSample);

void BM_IntervalLength(benchmark::State& state) {
  tclqr::RandomStream rs(7);
  const tclqr::Vector draws = rs.normals(static_cast<Eigen::Index>(state.range(0)));
  std::vector<double> samples(draws.data(), draws.data() + draws.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(tclqr::sampleIntervalLength(samples, 0.95));
  }
}
BENCHMARK(BM_IntervalLength)->Arg(1000)->Arg(5000)->Arg(20000);

}  // namespace

BENCHMARK_MAIN();
