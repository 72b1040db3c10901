#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "stde/error.hpp"
#include "stde/io.hpp"

using namespace stde;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "stde_test_io";
    fs::create_directories(dir);
    return dir / name;
}

RgbImage random_rgb(int h, int w, unsigned seed) {
    std::mt19937 rng(seed);
    RgbImage img(h, w, 3);
    for (auto& v : img.data()) {
        v = static_cast<std::uint8_t>(rng() & 0xff);
    }
    return img;
}

void overwrite_prefix(const fs::path& p, const std::string& bytes) {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST(Io, StmapRoundTrip) {
    STMap m;
    m.image = random_rgb(4, 4, 3);
    m.meta.origin = {1, 2};
    m.meta.destination = {4, 5};
    m.meta.waypoints = {{1, 2}, {3, 3}, {4, 5}};
    m.meta.frame_rate = 29.97;
    const auto p = scratch("rt.ppm");
    save_stmap(p, m);
    const STMap back = load_stmap(p);
    EXPECT_EQ(back.image, m.image);
    EXPECT_EQ(back.meta.origin, m.meta.origin);
    EXPECT_EQ(back.meta.destination, m.meta.destination);
    EXPECT_EQ(back.meta.waypoints, m.meta.waypoints);
    EXPECT_EQ(back.meta.frame_rate, m.meta.frame_rate);
}

TEST(Io, SidecarDimensionMismatchIsRejected) {
    STMap m;
    m.image = random_rgb(4, 4, 4);
    const auto p = scratch("mismatch.ppm");
    save_stmap(p, m);
    write_ppm(p, random_rgb(5, 4, 5));
    EXPECT_THROW(load_stmap(p), DataError);
}

TEST(Io, LabelMapPreservesSixteenBitLabels) {
    LabelMap l(3, 2, 1, 0);
    l(0, 1) = 1;
    l(2, 0) = 257;
    l(1, 1) = 65535;
    const auto p = scratch("labels.pgm");
    write_label_map(p, l);
    EXPECT_EQ(read_label_map(p), l);
}

TEST(Io, LabelMapRejectsOutOfRange) {
    LabelMap l(2, 2, 1, 0);
    l(0, 0) = 70000;
    EXPECT_THROW(write_label_map(scratch("bad.pgm"), l), InvalidArgument);
    l(0, 0) = -1;
    EXPECT_THROW(write_label_map(scratch("bad.pgm"), l), InvalidArgument);
}

TEST(Io, CorruptedHeadersAreRejected) {
    const auto ppm = scratch("corrupt.ppm");
    write_ppm(ppm, random_rgb(4, 4, 6));
    overwrite_prefix(ppm, "Q6");
    EXPECT_THROW(read_ppm(ppm), DataError);

    const auto pgm = scratch("corrupt.pgm");
    write_label_map(pgm, LabelMap(4, 4, 1, 3));
    overwrite_prefix(pgm, "P5\nx");
    EXPECT_THROW(read_label_map(pgm), DataError);

    EXPECT_THROW(read_ppm(scratch("does_not_exist.ppm")), DataError);
}

TEST(Io, TruncatedPixelDataIsRejected) {
    const auto p = scratch("trunc.ppm");
    write_ppm(p, random_rgb(8, 8, 7));
    fs::resize_file(p, fs::file_size(p) - 5);
    EXPECT_THROW(read_ppm(p), DataError);
}

TEST(Io, FramePackRoundTrip) {
    std::vector<RgbImage> frames{random_rgb(3, 5, 1), random_rgb(3, 5, 2), random_rgb(3, 5, 3)};
    const auto p = scratch("frames.stfr");
    write_frame_pack(p, frames);
    EXPECT_EQ(read_frame_pack(p), frames);
    overwrite_prefix(p, "STFX");
    EXPECT_THROW(read_frame_pack(p), DataError);
}

TEST(Io, FrameDirectoryIsReadInNameOrder) {
    const fs::path dir = scratch("frames_dir");
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto a = random_rgb(2, 2, 10);
    const auto b = random_rgb(2, 2, 11);
    write_ppm(dir / "frame_0002.ppm", b);
    write_ppm(dir / "frame_0001.ppm", a);
    std::ofstream(dir / "notes.txt") << "ignored";
    const auto frames = read_frame_directory(dir);
    ASSERT_EQ(frames.size(), 2u);
    EXPECT_EQ(frames[0], a);
    EXPECT_EQ(frames[1], b);
}
