#include <benchmark/benchmark.h>

#include "vcnet/datagen.hpp"

using namespace vcnet;
using namespace vcnet::datagen;

namespace {

void BM_GenerateGraph(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(generate_graph(++seed, size, size));
}
BENCHMARK(BM_GenerateGraph)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_Rasterize(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const VesselGraph g = generate_graph(7, size, size);
    for (auto _ : state) benchmark::DoNotOptimize(rasterize(g));
}
BENCHMARK(BM_Rasterize)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_LabelConnectivity(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const VesselGraph g = generate_graph(8, size, size);
    const Raster vessel = rasterize(g);
    for (auto _ : state) benchmark::DoNotOptimize(label_connectivity(vessel, g.inlet_band));
}
BENCHMARK(BM_LabelConnectivity)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_RenderBrightfield(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const VesselGraph g = generate_graph(9, size, size);
    const Raster vessel = rasterize(g);
    for (auto _ : state) benchmark::DoNotOptimize(render_brightfield(vessel, 9));
}
BENCHMARK(BM_RenderBrightfield)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_Augment(benchmark::State& state) {
    const VesselGraph g = generate_graph(10, 256, 256);
    const Raster vessel = rasterize(g);
    Sample s;
    s.mask = label_connectivity(vessel, g.inlet_band);
    s.image = render_brightfield(vessel, 10);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(augment(s, ++seed));
}
BENCHMARK(BM_Augment)->Unit(benchmark::kMicrosecond);

} // namespace
