#include <benchmark/benchmark.h>

#include <random>

#include "stde/kernels.hpp"

using namespace stde;
namespace k = stde::kernels;

namespace {

Tensor3 random_tensor(int c, int h, int w, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Tensor3 t(c, h, w);
    for (int i = 0; i < c; ++i) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                t(i, y, x) = u(rng);
            }
        }
    }
    return t;
}

std::vector<double> random_vector(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = u(rng);
    }
    return v;
}

struct ConvFixture {
    k::ConvShape shape;
    Tensor3 in;
    std::vector<double> weight;
    std::vector<double> bias;
    Tensor3 grad_out;

    explicit ConvFixture(int size) {
        shape = {16, 32, 3, 1};
        in = random_tensor(16, size, size, 1);
        weight = random_vector(32 * 16 * 9, 2);
        bias = random_vector(32, 3);
        grad_out = random_tensor(32, size, size, 4);
    }
};

template <bool Parallel>
void BM_ConvForward(benchmark::State& st) {
    const ConvFixture f(static_cast<int>(st.range(0)));
    for (auto _ : st) {
        auto out = Parallel ? k::conv2d_forward(f.in, f.weight, f.bias, f.shape)
                            : k::reference::conv2d_forward(f.in, f.weight, f.bias, f.shape);
        benchmark::DoNotOptimize(out);
    }
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& st) {
    const ConvFixture f(static_cast<int>(st.range(0)));
    for (auto _ : st) {
        auto g = Parallel ? k::conv2d_backward(f.in, f.weight, f.grad_out, f.shape)
                          : k::reference::conv2d_backward(f.in, f.weight, f.grad_out, f.shape);
        benchmark::DoNotOptimize(g);
    }
}

template <bool Parallel>
void BM_PairwiseCosine(benchmark::State& st) {
    const Tensor3 e = random_tensor(16, static_cast<int>(st.range(0)), static_cast<int>(st.range(0)), 5);
    const RangeSet ranges;
    for (auto _ : st) {
        auto a = Parallel ? k::pairwise_cosine(e, ranges) : k::reference::pairwise_cosine(e, ranges);
        benchmark::DoNotOptimize(a);
    }
}

template <bool Parallel>
void BM_PairwiseCosineBackward(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const Tensor3 e = random_tensor(16, n, n, 6);
    AffinityTensor coeff(n, n, RangeSet(), 0.0);
    for (int c = 0; c < coeff.channels(); ++c) {
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                coeff(y, x, c) = coeff.neighbor_in_bounds(y, x, c) ? 0.01 : 0.0;
            }
        }
    }
    for (auto _ : st) {
        auto g = Parallel ? k::pairwise_cosine_backward(e, coeff) : k::reference::pairwise_cosine_backward(e, coeff);
        benchmark::DoNotOptimize(g);
    }
}

} // namespace

BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/reference")->Arg(64)->Arg(128);
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/omp")->Arg(64)->Arg(128);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/reference")->Arg(64)->Arg(128);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/omp")->Arg(64)->Arg(128);
BENCHMARK(BM_PairwiseCosine<false>)->Name("pairwise_cosine/reference")->Arg(64)->Arg(128);
BENCHMARK(BM_PairwiseCosine<true>)->Name("pairwise_cosine/omp")->Arg(64)->Arg(128);
BENCHMARK(BM_PairwiseCosineBackward<false>)->Name("pairwise_cosine_backward/reference")->Arg(64)->Arg(128);
BENCHMARK(BM_PairwiseCosineBackward<true>)->Name("pairwise_cosine_backward/omp")->Arg(64)->Arg(128);

BENCHMARK_MAIN();
