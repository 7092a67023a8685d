#include <benchmark/benchmark.h>

#include "gfsl/adam.hpp"
#include "gfsl/metrics.hpp"
#include "gfsl/model.hpp"
#include "gfsl/ops.hpp"
#include "gfsl/rng.hpp"

using namespace gfsl;

namespace {

Tensor random_tensor(const std::vector<int>& shape, std::uint64_t seed, float lo = -1.0f,
                     float hi = 1.0f) {
    Rng rng(seed);
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// First encoder stage geometry at the default 64px input.
const ConvSpec kEncSpec{1, 16, 3, 3, 2, 1};
const ConvSpec kDecSpec{64, 32, 4, 4, 2, 1};

}  // namespace

static void BM_Conv2dForward(benchmark::State& state) {
    const Tensor input = random_tensor({(int)state.range(0), 1, 64, 64}, 1);
    const Tensor weights = random_tensor({16, 1, 3, 3}, 2);
    const Tensor bias = random_tensor({16}, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d_forward(input, weights, bias, kEncSpec));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Conv2dForward)->Arg(1)->Arg(8)->Arg(32);

static void BM_Conv2dBackward(benchmark::State& state) {
    const Tensor input = random_tensor({(int)state.range(0), 1, 64, 64}, 1);
    const Tensor weights = random_tensor({16, 1, 3, 3}, 2);
    const Tensor bias = random_tensor({16}, 3);
    const Tensor grad = random_tensor(conv2d_forward(input, weights, bias, kEncSpec).shape(), 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d_backward(input, weights, kEncSpec, grad));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Conv2dBackward)->Arg(1)->Arg(8)->Arg(32);

static void BM_ConvTranspose2dForward(benchmark::State& state) {
    const Tensor input = random_tensor({8, 64, 8, 8}, 5);
    const Tensor weights = random_tensor({64, 32, 4, 4}, 6);
    const Tensor bias = random_tensor({32}, 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv_transpose2d_forward(input, weights, bias, kDecSpec));
    }
    state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_ConvTranspose2dForward);

static void BM_LinearForward(benchmark::State& state) {
    const Tensor input = random_tensor({32, 4096}, 8);
    const Tensor weights = random_tensor({128, 4096}, 9, -0.02f, 0.02f);
    const Tensor bias = random_tensor({128}, 10);
    for (auto _ : state) {
        benchmark::DoNotOptimize(linear_forward(input, weights, bias));
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_LinearForward);

static void BM_AdamStep(benchmark::State& state) {
    Tensor param = random_tensor({(int)state.range(0)}, 11);
    const Tensor grad = random_tensor(param.shape(), 12);
    AdamState opt = AdamState::for_param(param);
    for (auto _ : state) {
        adam_step(param, grad, opt);
        benchmark::DoNotOptimize(param.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AdamStep)->Arg(4096)->Arg(1 << 16);

static void BM_AutoencoderStep(benchmark::State& state) {
    AutoencoderModel model = build_autoencoder(64, 13);
    const Tensor batch = random_tensor({8, 1, 64, 64}, 14, 0.0f, 1.0f);
    for (auto _ : state) {
        AutoencoderTrace trace;
        autoencoder_forward(model, batch, &trace);
        const LossResult loss = mse_loss(trace.reconstruction, batch);
        model.params.zero_grads();
        autoencoder_backward(model, trace, loss.grad);
        benchmark::DoNotOptimize(model.params.all().front().grad.data());
    }
    state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_AutoencoderStep);

static void BM_MetricsSweep(benchmark::State& state) {
    Rng rng(15);
    std::vector<double> scores(3100);
    std::vector<int> labels(3100);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.uniform();
        labels[i] = rng.bernoulli(100.0 / 3100.0) ? 1 : 0;
    }
    const std::vector<double> grid = default_threshold_grid();
    for (auto _ : state) {
        benchmark::DoNotOptimize(threshold_sweep(scores, labels, grid));
    }
}
BENCHMARK(BM_MetricsSweep);

BENCHMARK_MAIN();
