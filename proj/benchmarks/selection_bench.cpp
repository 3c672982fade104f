#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "farsm/channel.hpp"
#include "farsm/geometry.hpp"
#include "farsm/port_selection.hpp"

namespace {

using namespace farsm;

constexpr std::size_t kChannels = 64;

// Fixed pool of correlated 4 x 16 channels so every benchmark sees the same inputs.
struct Fixture {
  CorrelationModel model = build_correlation_model(port_coordinates(GridParams{1.0, 1.0, 4, 4}));
  SortedPairArrays pairs = sorted_pair_correlations(model);
  std::vector<ChannelMatrix> channels;

  Fixture() {
    for (std::uint64_t i = 0; i < kChannels; ++i) {
      SeededRng rng(42, i);
      channels.push_back(sample_correlated_channel(model, 4, rng));
    }
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_OptimalZf(benchmark::State& state) {
  const auto& f = fixture();
  const auto n_a = static_cast<std::size_t>(state.range(0));
  const NoiseModel noise = NoiseModel::from_snr_db(10.0);
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        optimal_select(f.channels[k++ % kChannels], n_a, PrecoderKind::kZf, noise));
  }
  state.counters["candidates"] = static_cast<double>(binomial(16, n_a));
}
BENCHMARK(BM_OptimalZf)->Arg(4)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMicrosecond);

void BM_OptimalMmse(benchmark::State& state) {
  const auto& f = fixture();
  const auto n_a = static_cast<std::size_t>(state.range(0));
  const NoiseModel noise = NoiseModel::from_snr_db(10.0);
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        optimal_select(f.channels[k++ % kChannels], n_a, PrecoderKind::kMmse, noise));
  }
}
BENCHMARK(BM_OptimalMmse)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

void BM_Tmd(benchmark::State& state) {
  const auto& f = fixture();
  const auto n_a = static_cast<std::size_t>(state.range(0));
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tmd_select(f.channels[k++ % kChannels], n_a));
  }
}
BENCHMARK(BM_Tmd)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

void BM_MceTmd(benchmark::State& state) {
  const auto& f = fixture();
  const auto n_b = static_cast<std::size_t>(state.range(0));
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mce_tmd_select(f.channels[k++ % kChannels], f.pairs, n_b, 4));
  }
}
BENCHMARK(BM_MceTmd)->Arg(8)->Arg(12)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
