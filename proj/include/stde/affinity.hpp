#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "stde/image.hpp"
#include "stde/tensor.hpp"

namespace stde {

struct Offset {
    int dy = 0;
    int dx = 0;
    friend bool operator==(const Offset&, const Offset&) = default;
};

/// Neighbourhood ranges, strictly increasing, all >= 1.
class RangeSet {
public:
    RangeSet() : ranges_{1, 3, 5, 9, 27} {}
    explicit RangeSet(std::vector<int> ranges);

    const std::vector<int>& values() const { return ranges_; }
    std::size_t size() const { return ranges_.size(); }
    int channels() const { return static_cast<int>(8 * ranges_.size()); }

    /// Offset of channel c: range-major, then the 8 directions of neighbor_offsets.
    Offset offset(int channel) const;
    int range_of(int channel) const { return ranges_[channel / 8]; }

    friend bool operator==(const RangeSet&, const RangeSet&) = default;

private:
    std::vector<int> ranges_;
};

/// (-r,-r), (-r,0), (-r,+r), (0,-r), (0,+r), (+r,-r), (+r,0), (+r,+r) as (dy, dx).
std::array<Offset, 8> neighbor_offsets(int range);

/// Index (0..7) of the direction opposite to direction k in neighbor_offsets order.
constexpr int opposite_direction(int k) { return 7 - k; }

/// H x W x N affinities, stored channel-major (N planes of H x W).
/// Entries whose neighbour falls outside the image are "out of bounds": they
/// carry 1 in ground-truth tensors and never contribute to losses or graphs.
class AffinityTensor {
public:
    AffinityTensor() = default;
    AffinityTensor(int height, int width, RangeSet ranges, double fill = 0.0);

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return ranges_.channels(); }
    const RangeSet& ranges() const { return ranges_; }

    double& operator()(int y, int x, int c) { return values_[index(y, x, c)]; }
    double operator()(int y, int x, int c) const { return values_[index(y, x, c)]; }

    bool neighbor_in_bounds(int y, int x, int c) const {
        const Offset o = ranges_.offset(c);
        const int ny = y + o.dy;
        const int nx = x + o.dx;
        return ny >= 0 && ny < height_ && nx >= 0 && nx < width_;
    }

    double* plane(int c) { return values_.data() + static_cast<std::size_t>(c) * height_ * width_; }
    const double* plane(int c) const { return values_.data() + static_cast<std::size_t>(c) * height_ * width_; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool same_shape(const AffinityTensor& o) const {
        return height_ == o.height_ && width_ == o.width_ && ranges_ == o.ranges_;
    }

private:
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int height_ = 0;
    int width_ = 0;
    RangeSet ranges_;
    std::vector<double> values_;
};

/// Binary ground truth: 1 where the neighbour has the centre pixel's label
/// (background included as label 0) or lies out of bounds, else 0.
AffinityTensor encode_affinity(const LabelMap& labels, const RangeSet& ranges);

/// Cosine-similarity affinity of every pixel with each neighbour, in [0, 1].
/// Out-of-bounds neighbours see a zero vector, which yields 0.5.
AffinityTensor predicted_affinity(const Tensor3& embedding, const RangeSet& ranges);

/// Top-left subsampling by factor 2^k (d = 1/factor). H and W must divide.
LabelMap downsample_labels(const LabelMap& labels, int factor);

// Affinity file: "STAF", u32 H, W, N, |ranges|, ranges, then f32 LE values in
// (row, col, channel) order.
void write_affinity(const std::filesystem::path& path, const AffinityTensor& affinity);
AffinityTensor read_affinity(const std::filesystem::path& path);

} // namespace stde
