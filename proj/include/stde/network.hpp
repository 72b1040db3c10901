#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stde/image.hpp"
#include "stde/kernels.hpp"
#include "stde/tensor.hpp"

namespace stde {

/// Mini UNet-style encoder/decoder. `widths[l]` is the channel width at
/// resolution 1/2^l; there are `widths.size() - 1` stride-2 stages, and one
/// linear 1x1 embedding head per decoder level.
struct NetworkConfig {
    int embedding_dim = 16;
    std::vector<int> widths = {8, 16, 32, 32, 32};
    /// Multiplier on the He-uniform bound sqrt(6 / fan_in) of hidden kernels.
    double init_gain = 0.25;

    int scales() const { return static_cast<int>(widths.size()) - 1; }
    /// Spatial multiple inputs are padded to: 2^scales.
    int size_multiple() const { return 1 << scales(); }
    void validate() const;

    friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;
};

/// All kernels and biases, in a fixed layer order. The same container holds
/// parameter gradients.
struct NetworkParams {
    NetworkConfig config;
    std::vector<NamedTensor> tensors;

    std::size_t parameter_count() const;
    const NamedTensor& find(const std::string& name) const;
    NetworkParams zeros_like() const;
};

/// Full-resolution embedding plus one embedding per downsampled scale,
/// scales[k] having resolution 1/2^(k+1).
struct EmbeddingPyramid {
    Tensor3 full;
    std::vector<Tensor3> scales;
};

/// Static description of one convolution in the network.
struct ConvLayer {
    std::string name;
    kernels::ConvShape shape;
    bool relu = true;
};

std::vector<ConvLayer> network_layers(const NetworkConfig& config);

/// Absolute bound used to initialise a layer's kernel.
double init_bound(const NetworkConfig& config, const ConvLayer& layer);

/// Uniform kernels within init_bound, zero biases. Deterministic for a seed.
NetworkParams init_params(const NetworkConfig& config, std::uint64_t seed);
/// 3 x H x W; per-channel mean removed, then divided by the pooled RMS (skipped for flat images).
/// RGB bytes scaled to [0, 1], 3 x H x W.
Tensor3 image_to_tensor(const RgbImage& image);

/// Activations kept by forward() for backward().
struct ForwardCache {
    int padded_height = 0;
    int padded_width = 0;
    int height = 0;
    int width = 0;
    std::vector<Tensor3> inputs;  ///< per layer, in network_layers order
    std::vector<Tensor3> outputs; ///< per layer, post-activation
};

/// Reflect-pads to a multiple of 2^scales, runs the network and crops every
/// output back (scale k to ceil(H / 2^(k+1)) x ceil(W / 2^(k+1))).
EmbeddingPyramid forward(const Tensor3& input, const NetworkParams& params, ForwardCache* cache = nullptr);

/// Output-side gradient: same shapes as the pyramid returned by forward().
using PyramidGrad = EmbeddingPyramid;

NetworkParams backward(const ForwardCache& cache, const NetworkParams& params, const PyramidGrad& grad);

/// Convenience: recomputes the forward pass, then backpropagates.
NetworkParams backward(const Tensor3& input, const NetworkParams& params, const PyramidGrad& grad);

/// Reflect padding (mirror without repeating the edge).
Tensor3 reflect_pad(const Tensor3& in, int height, int width);

} // namespace stde
