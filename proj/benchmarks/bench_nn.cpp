#include <benchmark/benchmark.h>

#include "vcnet/model.hpp"
#include "vcnet/rng.hpp"
#include "vcnet/tensor.hpp"

using namespace vcnet;

namespace {

nn::Tensor random_tensor(const nn::Shape& s, std::uint64_t seed, bool rg = false) {
    Rng rng(seed);
    std::vector<double> v(static_cast<std::size_t>(s.numel()));
    for (double& x : v) x = rng.gaussian();
    return nn::Tensor::from_data(s, std::move(v), rg);
}

void BM_Conv3x3Forward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    nn::Tensor x = random_tensor({4, c, 32, 32}, 1);
    nn::Tensor w = random_tensor({c, c, 3, 3}, 2);
    nn::Tensor b = nn::Tensor::zeros({c, 1, 1, 1});
    for (auto _ : state) {
        nn::Tensor y = nn::conv2d(x, w, b, 1, 1);
        benchmark::DoNotOptimize(y.raw_value().data());
    }
    state.SetItemsProcessed(state.iterations() * 4LL * c * c * 9 * 32 * 32);
}
BENCHMARK(BM_Conv3x3Forward)->Arg(16)->Arg(64);

void BM_Conv3x3Backward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    nn::Tensor x = random_tensor({4, c, 32, 32}, 1, true);
    nn::Tensor w = random_tensor({c, c, 3, 3}, 2, true);
    nn::Tensor b = nn::Tensor::zeros({c, 1, 1, 1}, true);
    for (auto _ : state) {
        nn::Tensor loss = nn::sum_all(nn::conv2d(x, w, b, 1, 1));
        loss.backward();
        x.zero_grad();
        w.zero_grad();
        b.zero_grad();
        benchmark::DoNotOptimize(loss.item());
    }
}
BENCHMARK(BM_Conv3x3Backward)->Arg(16)->Arg(64);

void BM_DeskForward(benchmark::State& state) {
    model::ModelConfig cfg; // desk-scale defaults
    model::VcNet net(cfg);
    nn::Tensor x = random_tensor({4, 3, 128, 128}, 3);
    for (auto _ : state) {
        auto out = net.forward(x, nn::Mode::Eval);
        benchmark::DoNotOptimize(out.logits.raw_value().data());
    }
}
BENCHMARK(BM_DeskForward)->Unit(benchmark::kMillisecond);

void BM_DeskTrainStep(benchmark::State& state) {
    model::ModelConfig cfg;
    model::VcNet net(cfg);
    nn::ParamList params;
    nn::BufferList buffers;
    net.collect_state(params, buffers);
    nn::SgdOptimizer opt(params, 0.01, 0.9, 1e-4);
    nn::Tensor x = random_tensor({4, 3, 128, 128}, 4);
    for (auto _ : state) {
        auto out = net.forward(x, nn::Mode::Train);
        nn::Tensor loss = nn::sum_all(nn::global_avg_pool(out.logits));
        opt.zero_grad();
        loss.backward();
        opt.step();
        benchmark::DoNotOptimize(loss.item());
    }
}
BENCHMARK(BM_DeskTrainStep)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
