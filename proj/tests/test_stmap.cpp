#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <set>

#include "stde/error.hpp"
#include "stde/stmap.hpp"

using namespace stde;

namespace {

std::vector<PixelCoord> pts(std::initializer_list<std::pair<int, int>> xy) {
    std::vector<PixelCoord> out;
    for (auto [x, y] : xy) {
        out.push_back({x, y});
    }
    return out;
}

// Frame whose pixel (y, x) encodes (x, y, t).
RgbImage coded_frame(int h, int w, int t) {
    RgbImage f(h, w, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            f(y, x, 0) = static_cast<std::uint8_t>(t);
            f(y, x, 1) = static_cast<std::uint8_t>(x);
            f(y, x, 2) = static_cast<std::uint8_t>(y);
        }
    }
    return f;
}

} // namespace

TEST(Bresenham, AxisAligned) {
    EXPECT_EQ(bresenham_line({0, 0}, {0, 4}), pts({{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}}));
}

TEST(Bresenham, Diagonal) { EXPECT_EQ(bresenham_line({0, 0}, {3, 3}), pts({{0, 0}, {1, 1}, {2, 2}, {3, 3}})); }

TEST(Bresenham, SinglePoint) { EXPECT_EQ(bresenham_line({2, 7}, {2, 7}), pts({{2, 7}})); }

TEST(Bresenham, ShallowMatchesRoundingOracle) {
    const auto line = bresenham_line({0, 0}, {5, 2});
    ASSERT_EQ(line.size(), 6u);
    for (int x = 0; x <= 5; ++x) {
        EXPECT_EQ(line[x].x, x);
        EXPECT_EQ(line[x].y, static_cast<int>(std::floor(2.0 * x / 5.0 + 0.5)));
    }
}

TEST(Bresenham, RandomLinesAreSymmetricAndConnected) {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> coord(-20, 20);
    for (int trial = 0; trial < 500; ++trial) {
        const PixelCoord a{coord(rng), coord(rng)};
        const PixelCoord b{coord(rng), coord(rng)};
        const auto ab = bresenham_line(a, b);
        auto ba = bresenham_line(b, a);
        ASSERT_EQ(ab.front(), a);
        ASSERT_EQ(ab.back(), b);
        std::reverse(ba.begin(), ba.end());
        ASSERT_EQ(ab, ba);
        const int major = std::max(std::abs(b.x - a.x), std::abs(b.y - a.y));
        ASSERT_EQ(ab.size(), static_cast<std::size_t>(major + 1));
        std::set<PixelCoord> unique(ab.begin(), ab.end());
        ASSERT_EQ(unique.size(), ab.size());
        for (std::size_t i = 1; i < ab.size(); ++i) {
            ASSERT_LE(std::abs(ab[i].x - ab[i - 1].x), 1);
            ASSERT_LE(std::abs(ab[i].y - ab[i - 1].y), 1);
        }
    }
}

TEST(Scanline, PolylineDropsSharedJoint) {
    const auto wp = pts({{0, 0}, {3, 0}, {3, 2}});
    const Scanline s = make_polyline_scanline(wp);
    EXPECT_EQ(s.pixels, pts({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {3, 1}, {3, 2}}));
    EXPECT_EQ(s.origin, (PixelCoord{0, 0}));
    EXPECT_EQ(s.destination, (PixelCoord{3, 2}));
}

TEST(BuildSTMap, SingleFrameSamplesScanline) {
    const RgbImage f = coded_frame(6, 8, 0);
    const Scanline s = make_scanline({1, 1}, {5, 1});
    const STMap m = build_stmap(std::span(&f, 1), s);
    ASSERT_EQ(m.height(), 5);
    ASSERT_EQ(m.width(), 1);
    for (int i = 0; i < 5; ++i) {
        for (int c = 0; c < 3; ++c) {
            EXPECT_EQ(m.image(i, 0, c), f(1, 1 + i, c));
        }
    }
}

TEST(BuildSTMap, ConstantFramesGiveConstantMap) {
    std::vector<RgbImage> frames(4, RgbImage(10, 10, 3, 77));
    const STMap m = build_stmap(frames, make_scanline({0, 0}, {9, 6}));
    EXPECT_TRUE(std::all_of(m.image.data().begin(), m.image.data().end(), [](auto v) { return v == 77; }));
}

TEST(BuildSTMap, ColumnsMatchDirectSampling) {
    std::vector<RgbImage> frames;
    for (int t = 0; t < 3; ++t) {
        frames.push_back(coded_frame(12, 12, t));
    }
    const Scanline s = make_polyline_scanline(pts({{0, 11}, {6, 3}, {11, 0}}));
    const STMap m = build_stmap(frames, s, 25.0);
    ASSERT_EQ(m.height(), static_cast<int>(s.pixels.size()));
    ASSERT_EQ(m.width(), 3);
    EXPECT_EQ(m.meta.frame_rate, 25.0);
    for (int t = 0; t < 3; ++t) {
        const RgbImage col = stmap_column(m, t);
        for (std::size_t i = 0; i < s.pixels.size(); ++i) {
            const auto p = s.pixels[i];
            EXPECT_EQ(col(static_cast<int>(i), 0, 0), t);
            for (int c = 0; c < 3; ++c) {
                EXPECT_EQ(col(static_cast<int>(i), 0, c), frames[t](p.y, p.x, c));
            }
        }
    }
}

TEST(BuildSTMap, RejectsMismatchedFrames) {
    std::vector<RgbImage> frames{RgbImage(8, 8, 3), RgbImage(8, 9, 3)};
    EXPECT_THROW(build_stmap(frames, make_scanline({0, 0}, {3, 3})), DataError);
}

TEST(BuildSTMap, RejectsOutOfBoundsScanline) {
    std::vector<RgbImage> frames{RgbImage(8, 8, 3)};
    EXPECT_THROW(build_stmap(frames, make_scanline({0, 0}, {8, 3})), DataError);
}
