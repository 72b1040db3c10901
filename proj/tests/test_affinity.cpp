#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "stde/affinity.hpp"
#include "stde/error.hpp"

using namespace stde;

namespace {

LabelMap random_labels(int h, int w, int k, unsigned seed) {
    std::mt19937 rng(seed);
    LabelMap l(h, w, 1);
    for (auto& v : l.data()) {
        v = static_cast<std::int32_t>(rng() % k);
    }
    return l;
}

Tensor3 random_embedding(int d, int h, int w, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Tensor3 e(d, h, w);
    for (auto& v : e.data()) {
        v = n(rng);
    }
    return e;
}

} // namespace

TEST(Offsets, RangeOneIsStandardNeighbourhood) {
    const auto o = neighbor_offsets(1);
    const int expect[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};
    for (int k = 0; k < 8; ++k) {
        EXPECT_EQ(o[k].dy, expect[k][0]);
        EXPECT_EQ(o[k].dx, expect[k][1]);
        EXPECT_EQ(o[opposite_direction(k)].dy, -o[k].dy);
        EXPECT_EQ(o[opposite_direction(k)].dx, -o[k].dx);
    }
}

TEST(Offsets, LongRangesScale) {
    for (int r : {3, 27}) {
        for (const auto& o : neighbor_offsets(r)) {
            EXPECT_TRUE(o.dy == -r || o.dy == 0 || o.dy == r);
            EXPECT_TRUE(o.dx == -r || o.dx == 0 || o.dx == r);
            EXPECT_FALSE(o.dy == 0 && o.dx == 0);
            EXPECT_EQ(std::max(std::abs(o.dy), std::abs(o.dx)), r);
        }
    }
}

TEST(RangeSetTest, DefaultsAndValidation) {
    const RangeSet r;
    EXPECT_EQ(r.values(), (std::vector<int>{1, 3, 5, 9, 27}));
    EXPECT_EQ(r.channels(), 40);
    EXPECT_EQ(r.range_of(8), 3);
    EXPECT_EQ(r.offset(12).dx, 3);
    EXPECT_THROW(RangeSet({1, 1}), InvalidArgument);
    EXPECT_THROW(RangeSet({0, 2}), InvalidArgument);
    EXPECT_THROW(RangeSet(std::vector<int>{}), InvalidArgument);
}

TEST(Encode, UniformMapIsAllOnes) {
    const auto y = encode_affinity(LabelMap(6, 7, 1, 2), RangeSet());
    for (double v : y.values()) {
        EXPECT_EQ(v, 1.0);
    }
}

TEST(Encode, VerticalBoundary) {
    LabelMap l(4, 6, 1, 1);
    for (int y = 0; y < 4; ++y) {
        for (int x = 3; x < 6; ++x) {
            l(y, x) = 2;
        }
    }
    const RangeSet r({1});
    const auto a = encode_affinity(l, r);
    EXPECT_EQ(a(1, 2, 4), 0.0); // (0, +1) crosses the boundary
    EXPECT_EQ(a(1, 1, 4), 1.0);
    EXPECT_EQ(a(1, 3, 3), 0.0); // (0, -1) from the other side
}

TEST(Encode, MatchesDoubleLoopOracle) {
    const LabelMap l = random_labels(8, 8, 3, 5);
    const RangeSet r;
    const auto a = encode_affinity(l, r);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            for (int c = 0; c < r.channels(); ++c) {
                const Offset o = r.offset(c);
                const int ny = y + o.dy;
                const int nx = x + o.dx;
                const bool in = ny >= 0 && ny < 8 && nx >= 0 && nx < 8;
                const double expect = !in ? 1.0 : (l(ny, nx) == l(y, x) ? 1.0 : 0.0);
                ASSERT_EQ(a(y, x, c), expect);
            }
        }
    }
}

TEST(Encode, InvariantUnderRelabeling) {
    const LabelMap l = random_labels(10, 9, 4, 8);
    LabelMap p = l;
    const std::int32_t perm[4] = {3, 0, 7, 5};
    for (auto& v : p.data()) {
        v = perm[v];
    }
    EXPECT_EQ(encode_affinity(l, RangeSet()).values(), encode_affinity(p, RangeSet()).values());
}

TEST(Encode, EntriesAreSymmetric) {
    const LabelMap l = random_labels(12, 12, 3, 9);
    const RangeSet r;
    const auto a = encode_affinity(l, r);
    const Tensor3 e = random_embedding(4, 12, 12, 9);
    const auto p = predicted_affinity(e, r);
    for (int y = 0; y < 12; ++y) {
        for (int x = 0; x < 12; ++x) {
            for (int c = 0; c < r.channels(); ++c) {
                if (!a.neighbor_in_bounds(y, x, c)) {
                    continue;
                }
                const Offset o = r.offset(c);
                const int opp = (c / 8) * 8 + opposite_direction(c % 8);
                ASSERT_EQ(a(y, x, c), a(y + o.dy, x + o.dx, opp));
                ASSERT_EQ(p(y, x, c), p(y + o.dy, x + o.dx, opp));
            }
        }
    }
}

TEST(Predicted, ConstantEmbeddingIsOne) {
    Tensor3 e(3, 5, 5, 0.0);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) {
            e(0, y, x) = 1.0;
            e(1, y, x) = -2.0;
            e(2, y, x) = 0.5;
        }
    }
    const auto a = predicted_affinity(e, RangeSet());
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) {
            for (int c = 0; c < a.channels(); ++c) {
                ASSERT_NEAR(a(y, x, c), a.neighbor_in_bounds(y, x, c) ? 1.0 : 0.5, 1e-15);
            }
        }
    }
}

TEST(Predicted, AntiparallelNeighbourIsZero) {
    Tensor3 e(2, 1, 2, 0.0);
    e(0, 0, 0) = 1.0;
    e(1, 0, 0) = 2.0;
    e(0, 0, 1) = -1.0;
    e(1, 0, 1) = -2.0;
    const auto a = predicted_affinity(e, RangeSet({1}));
    EXPECT_NEAR(a(0, 0, 4), 0.0, 1e-15);
}

TEST(Predicted, MatchesPerPairOracle) {
    const Tensor3 e = random_embedding(3, 4, 4, 21);
    const RangeSet r({1, 3});
    const auto a = predicted_affinity(e, r);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            for (int c = 0; c < r.channels(); ++c) {
                const Offset o = r.offset(c);
                const int ny = y + o.dy;
                const int nx = x + o.dx;
                double expect = 0.5;
                if (ny >= 0 && ny < 4 && nx >= 0 && nx < 4) {
                    double dot = 0, na = 0, nb = 0;
                    for (int d = 0; d < 3; ++d) {
                        dot += e(d, y, x) * e(d, ny, nx);
                        na += e(d, y, x) * e(d, y, x);
                        nb += e(d, ny, nx) * e(d, ny, nx);
                    }
                    expect = 0.5 * (1.0 + dot / std::sqrt(na * nb));
                }
                ASSERT_NEAR(a(y, x, c), expect, 1e-14);
            }
        }
    }
}

TEST(Predicted, RejectsNonFinite) {
    Tensor3 e(2, 3, 3, 1.0);
    e(1, 2, 2) = std::nan("");
    EXPECT_THROW(predicted_affinity(e, RangeSet()), DataError);
}

TEST(Downsample, Quadrants) {
    LabelMap l(4, 4, 1);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            l(y, x) = 1 + (y / 2) * 2 + (x / 2);
        }
    }
    const LabelMap d = downsample_labels(l, 2);
    ASSERT_EQ(d.height(), 2);
    EXPECT_EQ(d(0, 0), 1);
    EXPECT_EQ(d(0, 1), 2);
    EXPECT_EQ(d(1, 0), 3);
    EXPECT_EQ(d(1, 1), 4);
}

TEST(Downsample, MatchesStrideOracleAndPyramidTargets) {
    const LabelMap l = random_labels(16, 16, 5, 4);
    const LabelMap d = downsample_labels(l, 4);
    ASSERT_EQ(d.height(), 4);
    ASSERT_EQ(d.width(), 4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            EXPECT_EQ(d(y, x), l(4 * y, 4 * x));
        }
    }
    EXPECT_EQ(downsample_labels(LabelMap(16, 16, 1, 3), 8), LabelMap(2, 2, 1, 3));
    EXPECT_THROW(downsample_labels(LabelMap(10, 16, 1), 4), InvalidArgument);
}

TEST(AffinityFile, RoundTripAndBadHeader) {
    const Tensor3 e = random_embedding(3, 5, 6, 2);
    const auto a = predicted_affinity(e, RangeSet({1, 2}));
    const auto p = std::filesystem::temp_directory_path() / "stde_affinity.staf";
    write_affinity(p, a);
    const auto b = read_affinity(p);
    ASSERT_TRUE(b.same_shape(a));
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        EXPECT_EQ(b.values()[i], static_cast<double>(static_cast<float>(a.values()[i])));
    }
    {
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        f.write("STAX", 4);
    }
    EXPECT_THROW(read_affinity(p), DataError);
}
