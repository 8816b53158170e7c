#include "cguide/density.hpp"
#include "cguide/guidance.hpp"
#include "cguide/sampler.hpp"
#include "cguide/score_net.hpp"
#include "cguide/worlds.hpp"

#include <benchmark/benchmark.h>

using namespace cguide;

static void BM_AnalyticScore(benchmark::State& state) {
  const AnalyticModel model(worlds::factorized(), NoiseSchedule{});
  const Vector x = Vector::Constant(2, 0.3);
  const PromptId p = state.range(0) ? PromptId{"cat"} : PromptId{"cat", "glasses"};
  for (auto _ : state) benchmark::DoNotOptimize(model.score(p, x, 0.4));
}
BENCHMARK(BM_AnalyticScore)->Arg(0)->Arg(1);

static void BM_ContrastiveScore(benchmark::State& state) {
  const AnalyticModel model(worlds::factorized(), NoiseSchedule{});
  GuidanceSpec spec;
  spec.base = {GuidanceBase::Kind::cfg, PromptId{"cat"}, 2.0};
  spec.terms.push_back(GuidanceTerm::contrastive(PromptId{"cat", "glasses"}, PromptId{"cat"}, LambdaSpec::constant(2.0)));
  const ScoreField f = compose(spec, model);
  const Vector x = Vector::Constant(2, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(f(x, 0.4));
}
BENCHMARK(BM_ContrastiveScore);

static void BM_SampleTrajectory(benchmark::State& state) {
  const AnalyticModel model(worlds::two_prompt(), NoiseSchedule{});
  const ScoreField f = model.field(PromptId::empty());
  const TimeGrid grid = TimeGrid::uniform(static_cast<int>(state.range(0)));
  const SamplerConfig sc{static_cast<SamplerKind>(state.range(1)), 0.1};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample(f, grid, model.schedule(), sc, 1, ++seed, false).endpoint());
}
BENCHMARK(BM_SampleTrajectory)->Args({1000, 0})->Args({1000, 1})->Args({1000, 2});

static void BM_OdeDensity(benchmark::State& state) {
  const AnalyticModel model(worlds::factorized(), NoiseSchedule{});
  OdeDensityConfig cfg;
  cfg.n_steps = static_cast<int>(state.range(0));
  const Vector x = Vector::Constant(2, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(log_density_ode(model, PromptId{"cat"}, x, 0.1, cfg).log_density);
}
BENCHMARK(BM_OdeDensity)->Arg(128)->Arg(512);

static void BM_LearnedScore(benchmark::State& state) {
  const LearnedScoreModel net(2, {"cat", "dog", "glasses", "noglasses"}, NoiseSchedule{}, 1);
  const Vector x = Vector::Constant(2, 0.3);
  const PromptId p{"cat", "glasses"};
  for (auto _ : state) benchmark::DoNotOptimize(net.score(p, x, 0.4));
}
BENCHMARK(BM_LearnedScore);
BENCHMARK_MAIN();
