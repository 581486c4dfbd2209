#include <benchmark/benchmark.h>

#include <random>

#include "mdcsa/net.hpp"

namespace {

mdcsa::SensorWindow random_window(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  mdcsa::SensorWindow w;
  w.participant = "bench";
  w.rssi.resize(static_cast<std::size_t>(mdcsa::kWindowLen * mdcsa::kRssiChannels));
  w.accel.resize(static_cast<std::size_t>(mdcsa::kWindowLen * mdcsa::kAccelChannels));
  for (double& x : w.rssi) x = dist(rng);
  for (double& x : w.accel) x = dist(rng);
  w.labels.assign(static_cast<std::size_t>(mdcsa::kWindowLen), mdcsa::Room::Kitchen);
  return w;
}

void BM_ForwardEval(benchmark::State& state) {
  mdcsa::MdcsaConfig cfg;
  cfg.d = static_cast<int>(state.range(0));
  mdcsa::MdcsaNet net(cfg);
  net.init_params(7);
  auto w = random_window(11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.predict_rooms(w));
  }
}
BENCHMARK(BM_ForwardEval)->Arg(32)->Arg(64)->Arg(128);

void BM_TrainStep(benchmark::State& state) {
  mdcsa::MdcsaConfig cfg;
  cfg.d = static_cast<int>(state.range(0));
  mdcsa::MdcsaNet net(cfg);
  net.init_params(7);
  auto w = random_window(11);
  std::vector<int> gold(static_cast<std::size_t>(mdcsa::kWindowLen), 0);
  mdcsa::Matrix targets(mdcsa::kWindowLen, 1);
  std::mt19937_64 drop_rng(3);
  for (auto _ : state) {
    mdcsa::Tape tape;
    auto fwd = net.forward(tape, w, true, &drop_rng);
    auto nll = mdcsa::crf_nll_op(tape, fwd.emissions, gold,
                                 fwd.leaves.at("crf.trans"), fwd.leaves.at("crf.start"));
    auto bce = mdcsa::ad::bce_with_logits(tape, fwd.hallway_logits, targets);
    auto loss = mdcsa::ad::add(tape, nll, bce);
    tape.backward(loss);
    net.params().zero_grads();
    net.accumulate_grads(tape, fwd);
    benchmark::DoNotOptimize(tape.value(loss));
  }
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(64);

}  // namespace
