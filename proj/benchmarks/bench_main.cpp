#include <benchmark/benchmark.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "acrt/analyze.hpp"
#include "acrt/construct.hpp"
#include "acrt/signal.hpp"
#include "acrt/theory.hpp"

using namespace acrt;

namespace {

ModelConfig embed_config(int width) {
  ModelConfig mc;
  mc.kind = ModelKind::EmbedMlp;
  mc.width = width;
  mc.n = 59;
  return mc;
}

void BM_Dft(benchmark::State& state) {
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::cos(0.3 * static_cast<double>(i * i));
  for (auto _ : state) benchmark::DoNotOptimize(dft_1d(x));
}
BENCHMARK(BM_Dft)->Arg(59)->Arg(127)->Arg(499);

void BM_FitLayer(benchmark::State& state) {
  const auto p = init_model(embed_config(static_cast<int>(state.range(0))), 1);
  for (auto _ : state) benchmark::DoNotOptimize(fit_layer(p, 1, FitFamily::FirstOrder));
}
BENCHMARK(BM_FitLayer)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_LossAndGradient(benchmark::State& state) {
  const auto p = init_model(embed_config(static_cast<int>(state.range(0))), 1);
  const auto data = generate_dataset(Modulus(59), 0.9, 0);
  const std::span<const Triple> batch(data.pairs.data(), 256);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(p, batch, 1e-5));
}
BENCHMARK(BM_LossAndGradient)->Arg(512)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_AllLogits(benchmark::State& state) {
  const auto p = init_model(embed_config(1024), 1);
  for (auto _ : state) benchmark::DoNotOptimize(all_logits(p));
}
BENCHMARK(BM_AllLogits)->Unit(benchmark::kMillisecond);

void BM_MinMargin(benchmark::State& state) {
  std::vector<int> f(static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(state.range(0))))));
  std::iota(f.begin(), f.end(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(min_margin(f, state.range(0)));
}
BENCHMARK(BM_MinMargin)->Arg(97)->Arg(499);

void BM_Construct(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_acrt_network(acrt_frequency_plan(Modulus(state.range(0)))));
}
BENCHMARK(BM_Construct)->Arg(66)->Arg(120);

}  // namespace

BENCHMARK_MAIN();
