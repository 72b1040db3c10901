#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stde/error.hpp"

namespace stde {

/// Row-major interleaved image. Used for RGB frames and STMaps (channels = 3)
/// and for instance label maps (channels = 1, T = uint16_t or int32_t).
template <typename T>
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, T fill = T{})
        : height_(height), width_(width), channels_(channels),
          data_(static_cast<std::size_t>(height) * width * channels, fill) {
        if (height < 0 || width < 0 || channels <= 0) {
            throw InvalidArgument("Image: negative dimensions");
        }
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool in_bounds(int y, int x) const { return y >= 0 && y < height_ && x >= 0 && x < width_; }

    T& operator()(int y, int x, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    const T& operator()(int y, int x, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(const Image& other) const {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    friend bool operator==(const Image& a, const Image& b) {
        return a.same_shape(b) && a.data_ == b.data_;
    }

private:
    int height_ = 0;
    int width_ = 0;
    int channels_ = 1;
    std::vector<T> data_;
};

using RgbImage = Image<std::uint8_t>;

/// H x W instance labels: 0 = background, k >= 1 = vehicle strand k.
using LabelMap = Image<std::int32_t>;

} // namespace stde
