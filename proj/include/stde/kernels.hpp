#pragma once

#include <span>
#include <vector>

#include "stde/affinity.hpp"
#include "stde/tensor.hpp"

// Data-parallel inner kernels. Each kernel exists twice: a plain serial
// reference (namespace `reference`, kept for tests and benchmarks) and the
// OpenMP version used by the library. The parallel versions partition work so
// that every output element is accumulated by exactly one thread in a fixed
// order, which keeps results bitwise identical for any thread count.

namespace stde::kernels {

/// Norm below which an embedding vector is treated as zero.
inline constexpr double kZeroNorm = 1e-12;

struct ConvShape {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3; ///< square, odd; padding = kernel / 2
    int stride = 1;
};

int conv_output_size(int in_size, const ConvShape& shape);

struct ConvGrads {
    Tensor3 input;
    std::vector<double> weight;
    std::vector<double> bias;
};

Tensor3 conv2d_forward(const Tensor3& in, std::span<const double> weight, std::span<const double> bias,
                       const ConvShape& shape);
ConvGrads conv2d_backward(const Tensor3& in, std::span<const double> weight, const Tensor3& grad_out,
                          const ConvShape& shape);

/// Cosine-similarity affinities of embedding pixels with their neighbours.
AffinityTensor pairwise_cosine(const Tensor3& embedding, const RangeSet& ranges);

/// Given dL/dS for every (pixel, channel) entry, returns dL/dE. Entries with
/// out-of-bounds neighbours must carry zero coefficients.
Tensor3 pairwise_cosine_backward(const Tensor3& embedding, const AffinityTensor& coeff);

namespace reference {
Tensor3 conv2d_forward(const Tensor3& in, std::span<const double> weight, std::span<const double> bias,
                       const ConvShape& shape);
ConvGrads conv2d_backward(const Tensor3& in, std::span<const double> weight, const Tensor3& grad_out,
                          const ConvShape& shape);
AffinityTensor pairwise_cosine(const Tensor3& embedding, const RangeSet& ranges);
Tensor3 pairwise_cosine_backward(const Tensor3& embedding, const AffinityTensor& coeff);
} // namespace reference

} // namespace stde::kernels
