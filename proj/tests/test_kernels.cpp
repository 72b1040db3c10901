#include <gtest/gtest.h>

#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "stde/kernels.hpp"

using namespace stde;
namespace k = stde::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = d(rng);
    }
    return v;
}

Tensor3 random_tensor(int c, int h, int w, unsigned seed) {
    Tensor3 t(c, h, w);
    t.data() = random_vector(t.size(), seed);
    return t;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol = 1e-12) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_NEAR(a[i], b[i], tol * std::max(1.0, std::abs(b[i]))) << "index " << i;
    }
}

struct ConvCase {
    int cin, cout, kernel, stride, h, w;
};

void PrintTo(const ConvCase& c, std::ostream* os) {
    *os << c.cin << "->" << c.cout << " k" << c.kernel << " s" << c.stride << " " << c.h << "x" << c.w;
}

} // namespace

class ConvParity : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvParity, ParallelMatchesReference) {
    const auto p = GetParam();
    const k::ConvShape s{p.cin, p.cout, p.kernel, p.stride};
    const Tensor3 in = random_tensor(p.cin, p.h, p.w, 1);
    const auto w = random_vector(static_cast<std::size_t>(p.cout) * p.cin * p.kernel * p.kernel, 2);
    const auto b = random_vector(p.cout, 3);
    const Tensor3 out = k::conv2d_forward(in, w, b, s);
    const Tensor3 ref = k::reference::conv2d_forward(in, w, b, s);
    ASSERT_TRUE(out.same_shape(ref));
    EXPECT_EQ(out.height(), k::conv_output_size(p.h, s));
    expect_close(out.data(), ref.data());

    const Tensor3 go = random_tensor(out.channels(), out.height(), out.width(), 4);
    const auto g = k::conv2d_backward(in, w, go, s);
    const auto gr = k::reference::conv2d_backward(in, w, go, s);
    expect_close(g.input.data(), gr.input.data());
    expect_close(g.weight, gr.weight);
    expect_close(g.bias, gr.bias);
}

INSTANTIATE_TEST_SUITE_P(Shapes, ConvParity,
                         ::testing::Values(ConvCase{3, 8, 3, 1, 9, 7}, ConvCase{8, 4, 3, 2, 8, 8},
                                           ConvCase{2, 3, 3, 2, 5, 3}, ConvCase{4, 5, 1, 1, 6, 6},
                                           ConvCase{1, 1, 3, 1, 1, 1}, ConvCase{2, 2, 3, 2, 1, 2},
                                           ConvCase{5, 2, 5, 1, 4, 6}),
                         [](const ::testing::TestParamInfo<ConvCase>& info) {
                             const ConvCase& c = info.param;
                             return "c" + std::to_string(c.cin) + "to" + std::to_string(c.cout) + "_k" +
                                    std::to_string(c.kernel) + "s" + std::to_string(c.stride) + "_" +
                                    std::to_string(c.h) + "x" + std::to_string(c.w);
                         });

TEST(Conv, ReferenceBackwardMatchesFiniteDifference) {
    const k::ConvShape s{2, 3, 3, 2};
    const Tensor3 in = random_tensor(2, 5, 6, 5);
    auto w = random_vector(3 * 2 * 9, 6);
    const auto b = random_vector(3, 7);
    const Tensor3 go = random_tensor(3, k::conv_output_size(5, s), k::conv_output_size(6, s), 8);
    auto objective = [&](const Tensor3& x, const std::vector<double>& ww) {
        const Tensor3 o = k::reference::conv2d_forward(x, ww, b, s);
        double sum = 0;
        for (std::size_t i = 0; i < o.size(); ++i) {
            sum += o.data()[i] * go.data()[i];
        }
        return sum;
    };
    const auto g = k::reference::conv2d_backward(in, w, go, s);
    for (std::size_t i = 0; i < w.size(); ++i) {
        auto up = w, down = w;
        up[i] += 1e-6;
        down[i] -= 1e-6;
        EXPECT_NEAR(g.weight[i], (objective(in, up) - objective(in, down)) / 2e-6, 1e-7);
    }
    for (std::size_t i = 0; i < in.size(); ++i) {
        Tensor3 up = in, down = in;
        up.data()[i] += 1e-6;
        down.data()[i] -= 1e-6;
        EXPECT_NEAR(g.input.data()[i], (objective(up, w) - objective(down, w)) / 2e-6, 1e-7);
    }
    double bias_sum = 0;
    for (std::size_t i = 0; i < go.plane_size(); ++i) {
        bias_sum += go.data()[i];
    }
    EXPECT_NEAR(g.bias[0], bias_sum, 1e-12);
}

TEST(PairwiseCosine, ParallelMatchesReference) {
    const RangeSet r({1, 3, 5});
    for (auto [h, w] : {std::pair{7, 9}, std::pair{1, 1}, std::pair{2, 12}}) {
        Tensor3 e = random_tensor(4, h, w, 9);
        if (h * w > 3) {
            for (int c = 0; c < 4; ++c) {
                e(c, 0, 1) = 0.0; // a zero-norm pixel
            }
        }
        const auto a = k::pairwise_cosine(e, r);
        const auto ar = k::reference::pairwise_cosine(e, r);
        expect_close(a.values(), ar.values());

        AffinityTensor coeff(h, w, r);
        coeff.values() = random_vector(coeff.values().size(), 10);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < r.channels(); ++c) {
                    if (!coeff.neighbor_in_bounds(y, x, c)) {
                        coeff(y, x, c) = 0.0;
                    }
                }
            }
        }
        expect_close(k::pairwise_cosine_backward(e, coeff).data(),
                     k::reference::pairwise_cosine_backward(e, coeff).data());
    }
}

TEST(Kernels, RepeatedCallsAreBitwiseIdentical) {
    const k::ConvShape s{8, 16, 3, 1};
    const Tensor3 in = random_tensor(8, 32, 32, 11);
    const auto w = random_vector(16 * 8 * 9, 12);
    const auto b = random_vector(16, 13);
    EXPECT_EQ(k::conv2d_forward(in, w, b, s), k::conv2d_forward(in, w, b, s));
    const Tensor3 e = random_tensor(16, 32, 32, 14);
    EXPECT_EQ(k::pairwise_cosine(e, RangeSet()).values(), k::pairwise_cosine(e, RangeSet()).values());
}
