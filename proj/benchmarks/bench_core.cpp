#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rtp_arb/dqn.hpp"
#include "rtp_arb/env.hpp"
#include "rtp_arb/network.hpp"
#include "rtp_arb/oracle.hpp"

namespace {

using namespace rtp_arb;

PriceSeries random_prices(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-2.0, 12.0);
  std::vector<double> p(n);
  for (auto& v : p) v = d(rng);
  return PriceSeries::from_prices(std::move(p));
}

void BM_HindsightOptimal(benchmark::State& state) {
  const auto prices = random_prices(static_cast<std::size_t>(state.range(0)), 1);
  const BatteryConfig cfg{};
  for (auto _ : state) benchmark::DoNotOptimize(hindsight_optimal(prices, cfg).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HindsightOptimal)->Arg(24 * 7)->Arg(8760)->Unit(benchmark::kMillisecond);

void BM_EnvEpisode(benchmark::State& state) {
  const auto prices = random_prices(8760, 2);
  for (auto _ : state) {
    BatteryEnv env(prices, BatteryConfig{});
    double total = 0.0;
    int k = 0;
    while (!env.done()) total += env.step(static_cast<Action>(k++ % 3)).reward;
    benchmark::DoNotOptimize(total);
  }
  state.SetItemsProcessed(state.iterations() * 8759);
}
BENCHMARK(BM_EnvEpisode)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const auto window = static_cast<std::size_t>(state.range(0));
  const QNetwork net = init_network(window, 3);
  const ObservationNormalizer norm{5.0, 2.0, 13.5};
  Observation obs;
  obs.recent_prices.assign(window, 4.0);
  obs.charge = 6.0;
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, obs, norm));
}
BENCHMARK(BM_Forward)->Arg(24)->Arg(48);

void BM_TrainStep(benchmark::State& state) {
  const std::size_t window = 48;
  const auto batch = static_cast<std::size_t>(state.range(0));
  QNetwork net = init_network(window, 4);
  const QNetwork target = net;
  OptimizerState opt = OptimizerState::for_network(net);
  const ObservationNormalizer norm{5.0, 2.0, 13.5};
  ReplayBuffer buffer(4096);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> price(-2.0, 12.0);
  for (int i = 0; i < 4096; ++i) {
    Transition t;
    for (std::size_t k = 0; k < window; ++k) t.obs.recent_prices.push_back(price(rng));
    t.next_obs = t.obs;
    t.action = static_cast<Action>(i % 3);
    t.reward = price(rng);
    buffer.push(std::move(t));
  }
  Rng sampler(6);
  for (auto _ : state) benchmark::DoNotOptimize(train_step(net, target, buffer, opt, norm, batch, 0.99, sampler));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
