#include "stde/stmap.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace stde {

std::vector<PixelCoord> bresenham_line(PixelCoord origin, PixelCoord destination) {
    std::vector<PixelCoord> out;
    const int dx = std::abs(destination.x - origin.x);
    const int dy = -std::abs(destination.y - origin.y);
    const int sx = origin.x < destination.x ? 1 : -1;
    const int sy = origin.y < destination.y ? 1 : -1;
    out.reserve(static_cast<std::size_t>(std::max(dx, -dy)) + 1);

    // The symmetric error update below makes the pixel set independent of the
    // traversal direction only when ties are broken the same way both ways, so
    // always rasterize from the lexicographically smaller endpoint.
    const bool reversed = destination < origin;
    PixelCoord p = reversed ? destination : origin;
    const PixelCoord end = reversed ? origin : destination;
    const int step_x = reversed ? -sx : sx;
    const int step_y = reversed ? -sy : sy;

    int err = dx + dy;
    while (true) {
        out.push_back(p);
        if (p == end) {
            break;
        }
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            p.x += step_x;
        }
        if (e2 <= dx) {
            err += dx;
            p.y += step_y;
        }
    }
    if (reversed) {
        std::reverse(out.begin(), out.end());
    }
    return out;
}

Scanline make_scanline(PixelCoord origin, PixelCoord destination) {
    return Scanline{origin, destination, bresenham_line(origin, destination)};
}

Scanline make_polyline_scanline(std::span<const PixelCoord> waypoints) {
    if (waypoints.empty()) {
        throw InvalidArgument("polyline scanline needs at least one waypoint");
    }
    Scanline line;
    line.origin = waypoints.front();
    line.destination = waypoints.back();
    line.pixels.push_back(waypoints.front());
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        auto segment = bresenham_line(waypoints[i - 1], waypoints[i]);
        line.pixels.insert(line.pixels.end(), segment.begin() + 1, segment.end());
    }
    return line;
}

STMap build_stmap(std::span<const RgbImage> frames, const Scanline& scanline, double frame_rate) {
    if (frames.empty()) {
        throw InvalidArgument("build_stmap: no frames");
    }
    const RgbImage& first = frames.front();
    if (first.channels() != 3) {
        throw DataError("build_stmap: frames must be RGB");
    }
    for (std::size_t t = 1; t < frames.size(); ++t) {
        if (!frames[t].same_shape(first)) {
            throw DataError("build_stmap: frame " + std::to_string(t) + " is " +
                            std::to_string(frames[t].height()) + "x" + std::to_string(frames[t].width()) +
                            ", expected " + std::to_string(first.height()) + "x" +
                            std::to_string(first.width()));
        }
    }
    for (const PixelCoord& p : scanline.pixels) {
        if (!first.in_bounds(p.y, p.x)) {
            throw DataError("build_stmap: scanline pixel (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                            ") outside " + std::to_string(first.width()) + "x" +
                            std::to_string(first.height()) + " frame");
        }
    }

    const int h = static_cast<int>(scanline.pixels.size());
    const int w = static_cast<int>(frames.size());
    STMap out;
    out.image = RgbImage(h, w, 3);
    out.meta.origin = scanline.origin;
    out.meta.destination = scanline.destination;
    out.meta.frame_rate = frame_rate;
    for (int t = 0; t < w; ++t) {
        const RgbImage& frame = frames[t];
        for (int r = 0; r < h; ++r) {
            const PixelCoord p = scanline.pixels[r];
            for (int c = 0; c < 3; ++c) {
                out.image(r, t, c) = frame(p.y, p.x, c);
            }
        }
    }
    return out;
}

RgbImage stmap_column(const STMap& stmap, int t) {
    if (t < 0 || t >= stmap.width()) {
        throw InvalidArgument("stmap_column: column out of range");
    }
    RgbImage col(stmap.height(), 1, 3);
    for (int r = 0; r < stmap.height(); ++r) {
        for (int c = 0; c < 3; ++c) {
            col(r, 0, c) = stmap.image(r, t, c);
        }
    }
    return col;
}

} // namespace stde
