#include "stde/affinity.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "stde/io.hpp"
#include "stde/kernels.hpp"

namespace stde {

RangeSet::RangeSet(std::vector<int> ranges) : ranges_(std::move(ranges)) {
    if (ranges_.empty()) {
        throw InvalidArgument("RangeSet: empty");
    }
    for (std::size_t i = 0; i < ranges_.size(); ++i) {
        if (ranges_[i] < 1 || (i > 0 && ranges_[i] <= ranges_[i - 1])) {
            throw InvalidArgument("RangeSet: ranges must be strictly increasing and >= 1");
        }
    }
}

Offset RangeSet::offset(int channel) const {
    return neighbor_offsets(ranges_[channel / 8])[channel % 8];
}

std::array<Offset, 8> neighbor_offsets(int r) {
    return {{{-r, -r}, {-r, 0}, {-r, r}, {0, -r}, {0, r}, {r, -r}, {r, 0}, {r, r}}};
}

AffinityTensor::AffinityTensor(int height, int width, RangeSet ranges, double fill)
    : height_(height), width_(width), ranges_(std::move(ranges)),
      values_(static_cast<std::size_t>(height) * width * ranges_.channels(), fill) {}

AffinityTensor encode_affinity(const LabelMap& labels, const RangeSet& ranges) {
    const int h = labels.height();
    const int w = labels.width();
    AffinityTensor y(h, w, ranges, 1.0);
    for (int c = 0; c < ranges.channels(); ++c) {
        const Offset o = ranges.offset(c);
        double* dst = y.plane(c);
        for (int r = 0; r < h; ++r) {
            const int qr = r + o.dy;
            if (qr < 0 || qr >= h) {
                continue;
            }
            for (int x = std::max(0, -o.dx); x < std::min(w, w - o.dx); ++x) {
                dst[static_cast<std::size_t>(r) * w + x] = labels(r, x) == labels(qr, x + o.dx) ? 1.0 : 0.0;
            }
        }
    }
    return y;
}

AffinityTensor predicted_affinity(const Tensor3& embedding, const RangeSet& ranges) {
    for (double v : embedding.data()) {
        if (!std::isfinite(v)) {
            throw DataError("predicted_affinity: non-finite embedding value");
        }
    }
    return kernels::pairwise_cosine(embedding, ranges);
}

LabelMap downsample_labels(const LabelMap& labels, int factor) {
    if (factor < 1) {
        throw InvalidArgument("downsample_labels: factor must be >= 1");
    }
    if (labels.height() % factor != 0 || labels.width() % factor != 0) {
        throw InvalidArgument("downsample_labels: " + std::to_string(labels.height()) + "x" +
                              std::to_string(labels.width()) + " not divisible by " + std::to_string(factor));
    }
    LabelMap out(labels.height() / factor, labels.width() / factor, 1);
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            out(y, x) = labels(y * factor, x * factor);
        }
    }
    return out;
}

void write_affinity(const std::filesystem::path& path, const AffinityTensor& a) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw DataError("cannot write " + path.string());
    }
    os.write("STAF", 4);
    detail::write_u32(os, static_cast<std::uint32_t>(a.height()));
    detail::write_u32(os, static_cast<std::uint32_t>(a.width()));
    detail::write_u32(os, static_cast<std::uint32_t>(a.channels()));
    detail::write_u32(os, static_cast<std::uint32_t>(a.ranges().size()));
    for (int r : a.ranges().values()) {
        detail::write_u32(os, static_cast<std::uint32_t>(r));
    }
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            for (int c = 0; c < a.channels(); ++c) {
                detail::write_f32(os, static_cast<float>(a(y, x, c)));
            }
        }
    }
    if (!os) {
        throw DataError("write failed: " + path.string());
    }
}

AffinityTensor read_affinity(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw DataError("cannot open " + path.string());
    }
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "STAF", 4) != 0) {
        throw DataError("bad magic in affinity file " + path.string());
    }
    const std::uint32_t h = detail::read_u32(is);
    const std::uint32_t w = detail::read_u32(is);
    const std::uint32_t n = detail::read_u32(is);
    const std::uint32_t nr = detail::read_u32(is);
    if (nr == 0 || nr > 64 || n != 8 * nr || h > (1u << 15) || w > (1u << 15)) {
        throw DataError("inconsistent affinity header in " + path.string() + ": N=" + std::to_string(n) +
                        ", |ranges|=" + std::to_string(nr));
    }
    std::vector<int> ranges(nr);
    for (auto& r : ranges) {
        r = static_cast<int>(detail::read_u32(is));
    }
    RangeSet rs;
    try {
        rs = RangeSet(std::move(ranges));
    } catch (const InvalidArgument& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    AffinityTensor a(static_cast<int>(h), static_cast<int>(w), rs);
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            for (int c = 0; c < a.channels(); ++c) {
                a(y, x, c) = detail::read_f32(is);
            }
        }
    }
    return a;
}

} // namespace stde
