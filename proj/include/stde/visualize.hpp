#pragma once

#include "stde/image.hpp"
#include "stde/tensor.hpp"

namespace stde {

/// Projects every pixel embedding onto the first three principal directions
/// (sign fixed so each direction's largest-magnitude component is positive)
/// and stretches each projection to 0..255.
RgbImage embedding_to_rgb(const Tensor3& embedding);

} // namespace stde
