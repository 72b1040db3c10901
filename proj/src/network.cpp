#include "stde/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace stde {

namespace {

Tensor3 relu(Tensor3 t) {
    for (double& v : t.data()) {
        v = v > 0.0 ? v : 0.0;
    }
    return t;
}

Tensor3 upsample2(const Tensor3& in) {
    Tensor3 out(in.channels(), in.height() * 2, in.width() * 2);
    for (int c = 0; c < in.channels(); ++c) {
        for (int y = 0; y < out.height(); ++y) {
            for (int x = 0; x < out.width(); ++x) {
                out(c, y, x) = in(c, y / 2, x / 2);
            }
        }
    }
    return out;
}

Tensor3 upsample2_backward(const Tensor3& grad_out) {
    Tensor3 g(grad_out.channels(), grad_out.height() / 2, grad_out.width() / 2);
    for (int c = 0; c < g.channels(); ++c) {
        for (int y = 0; y < grad_out.height(); ++y) {
            for (int x = 0; x < grad_out.width(); ++x) {
                g(c, y / 2, x / 2) += grad_out(c, y, x);
            }
        }
    }
    return g;
}

Tensor3 concat(const Tensor3& a, const Tensor3& b) {
    Tensor3 out(a.channels() + b.channels(), a.height(), a.width());
    std::copy(a.data().begin(), a.data().end(), out.data().begin());
    std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

std::pair<Tensor3, Tensor3> split(const Tensor3& t, int first_channels) {
    Tensor3 a(first_channels, t.height(), t.width());
    Tensor3 b(t.channels() - first_channels, t.height(), t.width());
    std::copy(t.data().begin(), t.data().begin() + static_cast<std::ptrdiff_t>(a.size()), a.data().begin());
    std::copy(t.data().begin() + static_cast<std::ptrdiff_t>(a.size()), t.data().end(), b.data().begin());
    return {std::move(a), std::move(b)};
}

void accumulate(Tensor3& dst, const Tensor3& src) {
    if (dst.size() == 0) {
        dst = src;
        return;
    }
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst.data()[i] += src.data()[i];
    }
}

Tensor3 crop(const Tensor3& t, int h, int w) {
    if (t.height() == h && t.width() == w) {
        return t;
    }
    Tensor3 out(t.channels(), h, w);
    for (int c = 0; c < t.channels(); ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                out(c, y, x) = t(c, y, x);
            }
        }
    }
    return out;
}

Tensor3 zero_extend(const Tensor3& t, int h, int w) {
    if (t.height() == h && t.width() == w) {
        return t;
    }
    Tensor3 out(t.channels(), h, w);
    for (int c = 0; c < t.channels(); ++c) {
        for (int y = 0; y < t.height(); ++y) {
            for (int x = 0; x < t.width(); ++x) {
                out(c, y, x) = t(c, y, x);
            }
        }
    }
    return out;
}

int reflect_index(int i, int n) {
    if (n == 1) {
        return 0;
    }
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) {
        i += period;
    }
    return i < n ? i : period - i;
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

struct LayerIndex {
    // Positions inside network_layers().
    std::vector<int> enc;  ///< enc[l]: last conv of encoder level l
    std::vector<int> down; ///< down[l]: stride-2 conv into level l (l >= 1)
    std::vector<int> dec;  ///< dec[l]: decoder conv at level l (l < S)
    std::vector<int> head; ///< head[l]
    int first = 0;         ///< enc0a
};

LayerIndex layer_index(const NetworkConfig& cfg) {
    const int s = cfg.scales();
    LayerIndex ix;
    ix.enc.assign(s + 1, -1);
    ix.down.assign(s + 1, -1);
    ix.dec.assign(s + 1, -1);
    ix.head.assign(s + 1, -1);
    int i = 0;
    ix.first = i++;
    ix.enc[0] = i++;
    for (int l = 1; l <= s; ++l) {
        ix.down[l] = i++;
        ix.enc[l] = i++;
    }
    ix.head[s] = i++;
    for (int l = s - 1; l >= 0; --l) {
        ix.dec[l] = i++;
        ix.head[l] = i++;
    }
    return ix;
}

const NamedTensor& tensor_at(const NetworkParams& p, std::size_t layer, bool bias) {
    return p.tensors.at(2 * layer + (bias ? 1 : 0));
}

Tensor3 run_layer(const ConvLayer& layer, const NetworkParams& params, std::size_t i, const Tensor3& in) {
    Tensor3 out = kernels::conv2d_forward(in, tensor_at(params, i, false).values, tensor_at(params, i, true).values,
                                          layer.shape);
    return layer.relu ? relu(std::move(out)) : out;
}

} // namespace

void NetworkConfig::validate() const {
    if (embedding_dim < 2) {
        throw InvalidArgument("NetworkConfig: embedding_dim must be >= 2");
    }
    if (widths.size() < 2) {
        throw InvalidArgument("NetworkConfig: need at least one downsampling stage");
    }
    for (int w : widths) {
        if (w < 1) {
            throw InvalidArgument("NetworkConfig: channel widths must be positive");
        }
    }
    if (!(init_gain > 0.0)) {
        throw InvalidArgument("NetworkConfig: init_gain must be positive");
    }
}

std::size_t NetworkParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) {
        n += t.values.size();
    }
    return n;
}

const NamedTensor& NetworkParams::find(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) {
            return t;
        }
    }
    throw InvalidArgument("no parameter tensor named " + name);
}

NetworkParams NetworkParams::zeros_like() const {
    NetworkParams z = *this;
    for (auto& t : z.tensors) {
        std::fill(t.values.begin(), t.values.end(), 0.0);
    }
    return z;
}

std::vector<ConvLayer> network_layers(const NetworkConfig& cfg) {
    cfg.validate();
    const int s = cfg.scales();
    const auto& w = cfg.widths;
    std::vector<ConvLayer> layers;
    layers.push_back({"enc0a", {3, w[0], 3, 1}, true});
    layers.push_back({"enc0b", {w[0], w[0], 3, 1}, true});
    for (int l = 1; l <= s; ++l) {
        layers.push_back({"down" + std::to_string(l), {w[l - 1], w[l], 3, 2}, true});
        layers.push_back({"enc" + std::to_string(l), {w[l], w[l], 3, 1}, true});
    }
    layers.push_back({"head" + std::to_string(s), {w[s], cfg.embedding_dim, 1, 1}, false});
    for (int l = s - 1; l >= 0; --l) {
        layers.push_back({"dec" + std::to_string(l), {w[l + 1] + w[l], w[l], 3, 1}, true});
        layers.push_back({"head" + std::to_string(l), {w[l], cfg.embedding_dim, 1, 1}, false});
    }
    return layers;
}

double init_bound(const NetworkConfig& cfg, const ConvLayer& layer) {
    const double fan_in = static_cast<double>(layer.shape.in_channels) * layer.shape.kernel * layer.shape.kernel;
    if (!layer.relu) {
        // Glorot-uniform for the linear embedding heads.
        return std::sqrt(6.0 / (fan_in + layer.shape.out_channels));
    }
    return cfg.init_gain * std::sqrt(6.0 / fan_in);
}

NetworkParams init_params(const NetworkConfig& cfg, std::uint64_t seed) {
    NetworkParams p;
    p.config = cfg;
    std::mt19937_64 rng(seed);
    for (const ConvLayer& layer : network_layers(cfg)) {
        const auto& s = layer.shape;
        NamedTensor w{layer.name + ".weight", {s.out_channels, s.in_channels, s.kernel, s.kernel}, {}};
        NamedTensor b{layer.name + ".bias", {s.out_channels}, std::vector<double>(s.out_channels, 0.0)};
        const double bound = init_bound(cfg, layer);
        std::uniform_real_distribution<double> dist(-bound, bound);
        w.values.resize(static_cast<std::size_t>(s.out_channels) * s.in_channels * s.kernel * s.kernel);
        for (double& v : w.values) {
            v = dist(rng);
        }
        p.tensors.push_back(std::move(w));
        p.tensors.push_back(std::move(b));
    }
    return p;
}

Tensor3 image_to_tensor(const RgbImage& image) {
    if (image.channels() != 3) {
        throw DataError("image_to_tensor: expected 3 channels, got " + std::to_string(image.channels()));
    }
    // Per-channel mean removal and one shared scale, so the road sits near 0.
    const int h = image.height();
    const int w = image.width();
    const double n = static_cast<double>(h) * w;
    Tensor3 t(3, h, w);
    double var = 0.0;
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                mean += image(y, x, c);
            }
        }
        mean /= n;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double v = (image(y, x, c) - mean) / 255.0;
                t(c, y, x) = v;
                var += v * v;
            }
        }
    }
    const double sd = std::sqrt(var / (3.0 * n));
    if (sd > 1e-6) {
        for (double& v : t.data()) {
            v /= sd;
        }
    }
    return t;
}

Tensor3 reflect_pad(const Tensor3& in, int height, int width) {
    if (height == in.height() && width == in.width()) {
        return in;
    }
    Tensor3 out(in.channels(), height, width);
    for (int c = 0; c < in.channels(); ++c) {
        for (int y = 0; y < height; ++y) {
            const int sy = reflect_index(y, in.height());
            for (int x = 0; x < width; ++x) {
                out(c, y, x) = in(c, sy, reflect_index(x, in.width()));
            }
        }
    }
    return out;
}

EmbeddingPyramid forward(const Tensor3& input, const NetworkParams& params, ForwardCache* cache) {
    const NetworkConfig& cfg = params.config;
    const auto layers = network_layers(cfg);
    if (params.tensors.size() != 2 * layers.size()) {
        throw DataError("forward: parameter set does not match the network configuration");
    }
    if (input.channels() != 3 || input.height() < 1 || input.width() < 1) {
        throw DataError("forward: expected a 3-channel input");
    }
    for (double v : input.data()) {
        if (!std::isfinite(v)) {
            throw DataError("forward: non-finite input value");
        }
    }
    const int s = cfg.scales();
    const int mult = cfg.size_multiple();
    const int ph = ceil_div(input.height(), mult) * mult;
    const int pw = ceil_div(input.width(), mult) * mult;
    const LayerIndex ix = layer_index(cfg);

    ForwardCache local;
    ForwardCache& fc = cache ? *cache : local;
    fc = ForwardCache{};
    fc.padded_height = ph;
    fc.padded_width = pw;
    fc.height = input.height();
    fc.width = input.width();
    fc.inputs.resize(layers.size());
    fc.outputs.resize(layers.size());

    auto run = [&](int i, Tensor3 in) -> const Tensor3& {
        fc.outputs[i] = run_layer(layers[i], params, static_cast<std::size_t>(i), in);
        fc.inputs[i] = std::move(in);
        return fc.outputs[i];
    };

    run(ix.first, reflect_pad(input, ph, pw));
    run(ix.enc[0], fc.outputs[ix.first]);
    for (int l = 1; l <= s; ++l) {
        run(ix.down[l], fc.outputs[ix.enc[l - 1]]);
        run(ix.enc[l], fc.outputs[ix.down[l]]);
    }
    run(ix.head[s], fc.outputs[ix.enc[s]]);
    int coarser = ix.enc[s];
    for (int l = s - 1; l >= 0; --l) {
        run(ix.dec[l], concat(upsample2(fc.outputs[coarser]), fc.outputs[ix.enc[l]]));
        run(ix.head[l], fc.outputs[ix.dec[l]]);
        coarser = ix.dec[l];
    }

    EmbeddingPyramid out;
    out.full = crop(fc.outputs[ix.head[0]], input.height(), input.width());
    for (int l = 1; l <= s; ++l) {
        out.scales.push_back(crop(fc.outputs[ix.head[l]], ceil_div(input.height(), 1 << l),
                                  ceil_div(input.width(), 1 << l)));
    }
    if (!cache) {
        local = ForwardCache{};
    }
    return out;
}

NetworkParams backward(const ForwardCache& fc, const NetworkParams& params, const PyramidGrad& grad) {
    const NetworkConfig& cfg = params.config;
    const auto layers = network_layers(cfg);
    const int s = cfg.scales();
    const LayerIndex ix = layer_index(cfg);
    if (fc.outputs.size() != layers.size()) {
        throw DataError("backward: forward cache does not match the network");
    }
    if (grad.scales.size() != static_cast<std::size_t>(s)) {
        throw DataError("backward: expected " + std::to_string(s) + " scale gradients, got " +
                        std::to_string(grad.scales.size()));
    }
    const auto check = [](const Tensor3& g, int h, int w, int d) {
        if (g.channels() != d || g.height() != h || g.width() != w) {
            throw DataError("backward: gradient shape " + std::to_string(g.channels()) + "x" +
                            std::to_string(g.height()) + "x" + std::to_string(g.width()) + " does not match output " +
                            std::to_string(d) + "x" + std::to_string(h) + "x" + std::to_string(w));
        }
    };
    check(grad.full, fc.height, fc.width, cfg.embedding_dim);
    for (int l = 1; l <= s; ++l) {
        check(grad.scales[l - 1], ceil_div(fc.height, 1 << l), ceil_div(fc.width, 1 << l),
              cfg.embedding_dim);
    }

    NetworkParams grads = params.zeros_like();
    std::vector<Tensor3> gout(layers.size());

    auto back = [&](int i) -> Tensor3 {
        Tensor3 g = gout[i];
        if (layers[i].relu) {
            const auto& out = fc.outputs[i].data();
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (out[k] <= 0.0) {
                    g.data()[k] = 0.0;
                }
            }
        }
        kernels::ConvGrads cg =
            kernels::conv2d_backward(fc.inputs[i], tensor_at(params, i, false).values, g, layers[i].shape);
        grads.tensors[2 * i].values = std::move(cg.weight);
        grads.tensors[2 * i + 1].values = std::move(cg.bias);
        return std::move(cg.input);
    };

    gout[ix.head[0]] = zero_extend(grad.full, fc.padded_height, fc.padded_width);
    for (int l = 1; l <= s; ++l) {
        gout[ix.head[l]] = zero_extend(grad.scales[l - 1], fc.padded_height >> l, fc.padded_width >> l);
    }

    // Decoder in reverse execution order: finest level first. gout[dec[l]]
    // is complete once head[l] and dec[l-1] have been processed.
    for (int l = 0; l < s; ++l) {
        accumulate(gout[ix.dec[l]], back(ix.head[l]));
        Tensor3 gin = back(ix.dec[l]);
        const int coarser = l + 1 == s ? ix.enc[s] : ix.dec[l + 1];
        auto [g_up, g_skip] = split(gin, fc.outputs[coarser].channels());
        accumulate(gout[coarser], upsample2_backward(g_up));
        accumulate(gout[ix.enc[l]], g_skip);
    }
    accumulate(gout[ix.enc[s]], back(ix.head[s]));

    for (int l = s; l >= 1; --l) {
        accumulate(gout[ix.down[l]], back(ix.enc[l]));
        accumulate(gout[ix.enc[l - 1]], back(ix.down[l]));
    }
    accumulate(gout[ix.first], back(ix.enc[0]));
    back(ix.first);
    return grads;
}

NetworkParams backward(const Tensor3& input, const NetworkParams& params, const PyramidGrad& grad) {
    ForwardCache fc;
    forward(input, params, &fc);
    return backward(fc, params, grad);
}

} // namespace stde
