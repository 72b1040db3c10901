#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stde/error.hpp"
#include "stde/network.hpp"

using namespace stde;

namespace {

Tensor3 random_input(int h, int w, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor3 t(3, h, w);
    for (auto& v : t.data()) {
        v = u(rng);
    }
    return t;
}

PyramidGrad random_grad(const EmbeddingPyramid& p, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    PyramidGrad g = p;
    for (auto& v : g.full.data()) {
        v = n(rng);
    }
    for (auto& s : g.scales) {
        for (auto& v : s.data()) {
            v = n(rng);
        }
    }
    return g;
}

double dot(const EmbeddingPyramid& p, const PyramidGrad& g) {
    double s = 0;
    for (std::size_t i = 0; i < p.full.size(); ++i) {
        s += p.full.data()[i] * g.full.data()[i];
    }
    for (std::size_t k = 0; k < p.scales.size(); ++k) {
        for (std::size_t i = 0; i < p.scales[k].size(); ++i) {
            s += p.scales[k].data()[i] * g.scales[k].data()[i];
        }
    }
    return s;
}

NetworkConfig small_config() {
    NetworkConfig c;
    c.embedding_dim = 4;
    c.widths = {3, 4, 4};
    return c;
}

} // namespace

TEST(Network, OutputShapes) {
    const NetworkConfig cfg;
    const auto params = init_params(cfg, 1);
    const auto out = forward(random_input(64, 64, 1), params);
    EXPECT_EQ(out.full.channels(), 16);
    EXPECT_EQ(out.full.height(), 64);
    EXPECT_EQ(out.full.width(), 64);
    ASSERT_EQ(out.scales.size(), 4u);
    for (int k = 0; k < 4; ++k) {
        EXPECT_EQ(out.scales[k].channels(), 16);
        EXPECT_EQ(out.scales[k].height(), 32 >> k);
        EXPECT_EQ(out.scales[k].width(), 32 >> k);
    }
}

TEST(Network, PadsAndCropsOddSizes) {
    const auto params = init_params(NetworkConfig{}, 2);
    const auto out = forward(random_input(37, 21, 2), params);
    EXPECT_EQ(out.full.height(), 37);
    EXPECT_EQ(out.full.width(), 21);
    EXPECT_EQ(out.scales[0].height(), 19);
    EXPECT_EQ(out.scales[3].width(), 2);
    for (double v : out.full.data()) {
        ASSERT_TRUE(std::isfinite(v));
    }
}

TEST(Network, DeterministicInitWithinBound) {
    const NetworkConfig cfg;
    const auto a = init_params(cfg, 7);
    const auto b = init_params(cfg, 7);
    const auto c = init_params(cfg, 8);
    ASSERT_EQ(a.tensors.size(), b.tensors.size());
    bool differs = false;
    const auto layers = network_layers(cfg);
    for (std::size_t t = 0; t < a.tensors.size(); ++t) {
        EXPECT_EQ(a.tensors[t].values, b.tensors[t].values);
        differs = differs || a.tensors[t].values != c.tensors[t].values;
        const double bound = init_bound(cfg, layers[t / 2]);
        for (double v : a.tensors[t].values) {
            EXPECT_LE(std::abs(v), bound);
        }
    }
    EXPECT_TRUE(differs);
}

TEST(Network, IdenticalInputsGiveIdenticalOutputs) {
    const auto params = init_params(NetworkConfig{}, 3);
    const Tensor3 in = random_input(32, 32, 3);
    const auto a = forward(in, params);
    const auto b = forward(in, params);
    EXPECT_EQ(a.full, b.full);
    EXPECT_EQ(a.scales, b.scales);
}

TEST(Network, DoublingAKernelWeightChangesTheOutput) {
    auto params = init_params(NetworkConfig{}, 4);
    const Tensor3 in = random_input(32, 32, 4);
    const auto before = forward(in, params);
    params.tensors[0].values[5] *= 2.0;
    const auto after = forward(in, params);
    const auto again = forward(in, params);
    EXPECT_NE(before.full, after.full);
    EXPECT_EQ(after.full, again.full);
}

TEST(Network, RejectsNonFiniteInput) {
    const auto params = init_params(NetworkConfig{}, 5);
    Tensor3 in = random_input(16, 16, 5);
    in(1, 3, 3) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(forward(in, params), DataError);
}

TEST(Network, ZeroOutputGradientGivesZeroParameterGradient) {
    const auto params = init_params(NetworkConfig{}, 6);
    const Tensor3 in = random_input(16, 16, 6);
    PyramidGrad g = forward(in, params);
    g.full.fill(0.0);
    for (auto& s : g.scales) {
        s.fill(0.0);
    }
    for (const auto& t : backward(in, params, g).tensors) {
        for (double v : t.values) {
            ASSERT_EQ(v, 0.0);
        }
    }
}

TEST(Network, BackwardIsLinearInOutputGradient) {
    const auto params = init_params(NetworkConfig{}, 7);
    const Tensor3 in = random_input(16, 16, 7);
    const auto out = forward(in, params);
    const auto g1 = random_grad(out, 1);
    const auto g2 = random_grad(out, 2);
    PyramidGrad sum = g1;
    for (std::size_t i = 0; i < sum.full.size(); ++i) {
        sum.full.data()[i] += g2.full.data()[i];
    }
    for (std::size_t k = 0; k < sum.scales.size(); ++k) {
        for (std::size_t i = 0; i < sum.scales[k].size(); ++i) {
            sum.scales[k].data()[i] += g2.scales[k].data()[i];
        }
    }
    const auto a = backward(in, params, g1);
    const auto b = backward(in, params, g2);
    const auto c = backward(in, params, sum);
    for (std::size_t t = 0; t < c.tensors.size(); ++t) {
        for (std::size_t i = 0; i < c.tensors[t].values.size(); ++i) {
            ASSERT_NEAR(c.tensors[t].values[i], a.tensors[t].values[i] + b.tensors[t].values[i],
                        1e-12 * std::max(1.0, std::abs(c.tensors[t].values[i])));
        }
    }
}

TEST(Network, BackwardMatchesFiniteDifferenceOnOddInput) {
    // Small network, odd size: exercises reflect padding and cropping.
    NetworkConfig cfg = small_config();
    auto params = init_params(cfg, 8);
    for (std::size_t t = 1; t < params.tensors.size(); t += 2) {
        for (auto& v : params.tensors[t].values) {
            v = 0.05; // nonzero biases
        }
    }
    const Tensor3 in = random_input(5, 7, 8);
    const auto out = forward(in, params);
    const auto g = random_grad(out, 9);
    const auto grad = backward(in, params, g);
    int checked = 0;
    for (std::size_t t = 0; t < params.tensors.size(); ++t) {
        for (std::size_t i = 0; i < params.tensors[t].values.size(); i += 3) {
            auto up = params;
            auto down = params;
            up.tensors[t].values[i] += 1e-6;
            down.tensors[t].values[i] -= 1e-6;
            const double num = (dot(forward(in, up), g) - dot(forward(in, down), g)) / 2e-6;
            const double ana = grad.tensors[t].values[i];
            EXPECT_NEAR(ana, num, 1e-6 * std::max(1.0, std::abs(num))) << params.tensors[t].name << "[" << i << "]";
            ++checked;
        }
    }
    EXPECT_GT(checked, 50);
}

TEST(Network, ImageToTensorStandardizes) {
    RgbImage img(6, 5, 3, 0);
    std::mt19937_64 rng(3);
    for (auto& v : img.data()) {
        v = static_cast<std::uint8_t>(rng() % 256);
    }
    const Tensor3 t = image_to_tensor(img);
    double sq = 0.0;
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (int y = 0; y < 6; ++y) {
            for (int x = 0; x < 5; ++x) {
                mean += t(c, y, x);
                sq += t(c, y, x) * t(c, y, x);
            }
        }
        EXPECT_NEAR(mean / 30.0, 0.0, 1e-12);
    }
    EXPECT_NEAR(sq / 90.0, 1.0, 1e-12);

    // channel differences keep their ratio to the shared scale
    const double r = (img(1, 2, 0) - img(0, 0, 0)) / (img(1, 2, 1) - img(0, 0, 1) + 0.0);
    EXPECT_NEAR((t(0, 1, 2) - t(0, 0, 0)) / (t(1, 1, 2) - t(1, 0, 0)), r, 1e-9);

    RgbImage flat(4, 4, 3, 105);
    const Tensor3 tf = image_to_tensor(flat);
    for (double v : tf.data()) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Network, ConfigValidation) {
    NetworkConfig c;
    c.embedding_dim = 1;
    EXPECT_THROW(init_params(c, 0), InvalidArgument);
    c = NetworkConfig{};
    c.widths = {8};
    EXPECT_THROW(init_params(c, 0), InvalidArgument);
    EXPECT_EQ(NetworkConfig{}.size_multiple(), 16);
}
