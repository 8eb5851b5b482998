#include <benchmark/benchmark.h>

#include "vcnet/datagen.hpp"
#include "vcnet/distance.hpp"
#include "vcnet/metrics.hpp"
#include "vcnet/rng.hpp"

using namespace vcnet;

namespace {

Raster scene_mask(std::uint64_t seed, int size) {
    const auto g = datagen::generate_graph(seed, size, size);
    return datagen::label_connectivity(datagen::rasterize(g), g.inlet_band);
}

void BM_Hd95Percentile(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Raster a = scene_mask(1, size);
    const Raster b = scene_mask(2, size);
    for (auto _ : state)
        benchmark::DoNotOptimize(metrics::hd95(a, b, 1, metrics::Hd95Variant::Percentile));
}
BENCHMARK(BM_Hd95Percentile)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_Asd(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const Raster a = scene_mask(3, size);
    const Raster b = scene_mask(4, size);
    for (auto _ : state) benchmark::DoNotOptimize(metrics::asd(a, b, 1));
}
BENCHMARK(BM_Asd)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_SquaredEdt(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    Rng rng(9);
    std::vector<std::uint8_t> feat(static_cast<std::size_t>(size) * size);
    for (auto& v : feat) v = rng.chance(0.02) ? 1 : 0;
    for (auto _ : state) benchmark::DoNotOptimize(squared_edt(feat, size, size));
}
BENCHMARK(BM_SquaredEdt)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_ConfusionDice(benchmark::State& state) {
    const Raster a = scene_mask(5, 256);
    const Raster b = scene_mask(6, 256);
    for (auto _ : state) {
        double acc = 0.0;
        for (int c = 0; c < 3; ++c) acc += metrics::dice(metrics::confusion(a, b, c));
        benchmark::DoNotOptimize(acc);
    }
}
BENCHMARK(BM_ConfusionDice)->Unit(benchmark::kMicrosecond);

} // namespace
