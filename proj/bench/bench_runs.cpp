// Serial against OpenMP execution of the independent-run workloads, plus
// the raw frontend access rate. On a single core the two modes should tie.

#include <benchmark/benchmark.h>

#include "fesim/channel.hpp"
#include "fesim/evaluation.hpp"
#include "fesim/fingerprint.hpp"

using namespace fesim;

namespace {

Exec mode(const benchmark::State& s) { return s.range(0) ? Exec::parallel : Exec::serial; }

void BM_SweepD(benchmark::State& state) {
  auto base = ChannelParams::defaults_for(Variant::nonmt_evict);
  const auto msg = gen_message(BitMessage::Pattern::random, 200, 7);
  SimSetup setup;
  setup.costs.noise_sigma = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(sweep_d(base, 1, 8, msg, setup, 1, mode(state)));
}
BENCHMARK(BM_SweepD)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Patch(benchmark::State& state) {
  PatchParams pp;
  pp.trials = 100;
  for (auto _ : state) benchmark::DoNotOptimize(detect_patch({}, pp, 1, mode(state)));
}
BENCHMARK(BM_Patch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Fingerprint(benchmark::State& state) {
  const auto victims = synthetic_victims();
  for (auto _ : state)
    benchmark::DoNotOptimize(fingerprint_experiment(victims, {}, FingerprintParams{}, 1, mode(state)));
}
BENCHMARK(BM_Fingerprint)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FrontendAccess(benchmark::State& state) {
  const auto chain = build_block_chain(static_cast<std::uint32_t>(state.range(0)), 0, {}, 0, 0x100000);
  Frontend fe;
  fe.enter_loop(0, chain);
  for (auto _ : state) {
    for (const auto& b : chain) benchmark::DoNotOptimize(fe.access(0, b));
    fe.lsd_try_capture(0, chain);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FrontendAccess)->Arg(8)->Arg(9);

}  // namespace

BENCHMARK_MAIN();
