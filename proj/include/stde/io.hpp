#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "stde/image.hpp"
#include "stde/stmap.hpp"

namespace stde {

// Lossless image files use binary Netpbm: P6 (8-bit RGB) for STMaps and
// frames, P5 with maxval 65535 (16-bit big-endian) for label maps.

void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);

/// Labels must lie in [0, 65535].
void write_label_map(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_label_map(const std::filesystem::path& path);

/// Writes `path` (P6) and the sidecar `path` + ".json" holding H, W, the
/// scanline endpoints/waypoints and the frame rate.
void save_stmap(const std::filesystem::path& path, const STMap& stmap);
STMap load_stmap(const std::filesystem::path& path);

// Raw frame pack: "STFR", u32 LE count, height, width, then count frames of
// height*width*3 bytes, row-major RGB.
void write_frame_pack(const std::filesystem::path& path, const std::vector<RgbImage>& frames);
std::vector<RgbImage> read_frame_pack(const std::filesystem::path& path);

/// Reads every *.ppm file of a directory in lexicographic filename order.
std::vector<RgbImage> read_frame_directory(const std::filesystem::path& dir);

namespace detail {
void write_u32(std::ostream& os, std::uint32_t v);
std::uint32_t read_u32(std::istream& is);
void write_f32(std::ostream& os, float v);
float read_f32(std::istream& is);
void write_f64(std::ostream& os, double v);
double read_f64(std::istream& is);
} // namespace detail

} // namespace stde
