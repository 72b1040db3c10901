#pragma once

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stde/image.hpp"

namespace stde {

struct PixelCoord {
    int x = 0; ///< column
    int y = 0; ///< row
    friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

/// Digitized lane centerline. Pixels are ordered from origin to destination
/// and consecutive pixels are 8-adjacent.
struct Scanline {
    PixelCoord origin;
    PixelCoord destination;
    std::vector<PixelCoord> pixels;
};

/// Integer Bresenham line covering all octants, endpoints inclusive.
std::vector<PixelCoord> bresenham_line(PixelCoord origin, PixelCoord destination);

Scanline make_scanline(PixelCoord origin, PixelCoord destination);

/// Concatenates Bresenham segments through the waypoints, dropping the
/// duplicated joint pixel between consecutive segments.
Scanline make_polyline_scanline(std::span<const PixelCoord> waypoints);

struct STMapMetadata {
    PixelCoord origin;
    PixelCoord destination;
    std::vector<PixelCoord> waypoints; ///< empty for straight scanlines
    double frame_rate = 0.0;           ///< 0 when unknown
};

/// Spatial-temporal map: rows = position along the scanline (origin at row 0),
/// columns = frames, 3 channels RGB.
struct STMap {
    RgbImage image;
    STMapMetadata meta;

    int height() const { return image.height(); }
    int width() const { return image.width(); }
};

/// Samples every scanline pixel from every frame. Column t is frame t.
STMap build_stmap(std::span<const RgbImage> frames, const Scanline& scanline, double frame_rate = 0.0);

/// Copies column `t` out of an STMap as an H x 1 image.
RgbImage stmap_column(const STMap& stmap, int t);

} // namespace stde
