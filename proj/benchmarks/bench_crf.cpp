#include <benchmark/benchmark.h>

#include <random>

#include "mdcsa/crf.hpp"

namespace {

mdcsa::Matrix random_emissions(int T, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  mdcsa::Matrix e(T, m);
  for (double& x : e.a) x = dist(rng);
  return e;
}

mdcsa::TransitionMatrix random_transitions(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  mdcsa::TransitionMatrix t(m);
  for (double& x : t.scores.a) x = dist(rng);
  for (double& x : t.start.a) x = dist(rng);
  return t;
}

void BM_ViterbiDecode(benchmark::State& state) {
  auto e = random_emissions(25, 6, 1);
  auto t = random_transitions(6, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mdcsa::viterbi_decode(e, t));
  }
}
BENCHMARK(BM_ViterbiDecode);

void BM_CrfNll(benchmark::State& state) {
  auto e = random_emissions(25, 6, 1);
  auto t = random_transitions(6, 2);
  std::vector<int> gold(25, 0);
  for (int i = 0; i < 25; ++i) gold[static_cast<std::size_t>(i)] = i % 6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mdcsa::crf_negative_log_likelihood(e, gold, t));
  }
}
BENCHMARK(BM_CrfNll);

void BM_CrfGradients(benchmark::State& state) {
  auto e = random_emissions(25, 6, 1);
  auto t = random_transitions(6, 2);
  std::vector<int> gold(25, 0);
  for (int i = 0; i < 25; ++i) gold[static_cast<std::size_t>(i)] = i % 6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mdcsa::crf_gradients(e, gold, t));
  }
}
BENCHMARK(BM_CrfGradients);

}  // namespace

BENCHMARK_MAIN();
