#include <benchmark/benchmark.h>

#include "capasim/learning.hpp"
#include "capasim/scenario.hpp"

namespace {

const capasim::Environment& default_env() {
  static const capasim::Environment env = capasim::build_environment(capasim::ScenarioConfig{});
  return env;
}

void BM_Transition(benchmark::State& state) {
  const auto& env = default_env();
  const auto initial = capasim::make_initial_state(env.initial_agents, env.scale, env.policy);
  for (auto _ : state) {
    auto s = initial;
    auto rec = capasim::apply_transition(s, 0, capasim::ActionId::RequestPHC, env.world, env.policy);
    benchmark::DoNotOptimize(rec);
  }
}
BENCHMARK(BM_Transition);

void BM_Episode(benchmark::State& state) {
  const auto& env = default_env();
  capasim::Hyperparameters hyper;
  std::vector<capasim::QTable> tables(env.initial_agents.size());
  auto rngs = capasim::make_agent_rngs(1, env.initial_agents);
  for (auto _ : state) {
    auto trace = capasim::run_episode(env, tables, hyper, rngs, 0.1);
    benchmark::DoNotOptimize(trace);
  }
}
BENCHMARK(BM_Episode);

void BM_Train(benchmark::State& state) {
  const auto& env = default_env();
  capasim::Hyperparameters hyper;
  hyper.episodes = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto result = capasim::train(env, hyper);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_Train)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_ValueIteration(benchmark::State& state) {
  const auto& env = default_env();
  const bool full = state.range(0) != 0;
  for (auto _ : state) {
    auto oracle = capasim::value_iteration_oracle(env, 1, 0.99, 1e-10, false, full);
    benchmark::DoNotOptimize(oracle);
  }
}
BENCHMARK(BM_ValueIteration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
