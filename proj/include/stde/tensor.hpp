#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "stde/error.hpp"

namespace stde {

/// Dense planar C x H x W tensor of doubles (feature maps, embeddings).
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(int channels, int height, int width, double fill = 0.0)
        : channels_(channels), height_(height), width_(width),
          data_(static_cast<std::size_t>(channels) * height * width, fill) {}

    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int c, int y, int x) { return data_[(c * plane_size()) + static_cast<std::size_t>(y) * width_ + x]; }
    double operator()(int c, int y, int x) const {
        return data_[(c * plane_size()) + static_cast<std::size_t>(y) * width_ + x];
    }

    double* plane(int c) { return data_.data() + c * plane_size(); }
    const double* plane(int c) const { return data_.data() + c * plane_size(); }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor3& o) const {
        return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

} // namespace stde
