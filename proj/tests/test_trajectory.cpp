#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <set>
#include <sstream>

#include "stde/error.hpp"
#include "stde/trajectory.hpp"

using namespace stde;

namespace {

// Instance pixels with at least one 8-neighbour outside the instance (off-image counts as outside).
std::set<PixelCoord> boundary_oracle(const LabelMap& l, std::int32_t label) {
    std::set<PixelCoord> out;
    for (int y = 0; y < l.height(); ++y) {
        for (int x = 0; x < l.width(); ++x) {
            if (l(y, x) != label) {
                continue;
            }
            bool edge = false;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if ((dy || dx) && (!l.in_bounds(y + dy, x + dx) || l(y + dy, x + dx) != label)) {
                        edge = true;
                    }
                }
            }
            if (edge) {
                out.insert({x, y});
            }
        }
    }
    return out;
}

void expect_closed_loop(const Contour& c) {
    for (std::size_t i = 0; i < c.pixels.size(); ++i) {
        const auto a = c.pixels[i];
        const auto b = c.pixels[(i + 1) % c.pixels.size()];
        EXPECT_LE(std::abs(a.x - b.x), 1);
        EXPECT_LE(std::abs(a.y - b.y), 1);
    }
}

// Band rows [top(x), top(x) + thickness) for x in [x0, x1].
struct Band {
    double offset, slope;
    int thickness, x0, x1;
    int top(int x) const { return static_cast<int>(std::floor(offset + slope * x)); }
};

LabelMap draw(int h, int w, const std::vector<Band>& bands) {
    LabelMap l(h, w, 1, 0);
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const auto& b = bands[i];
        for (int x = b.x0; x <= b.x1; ++x) {
            for (int y = b.top(x); y < b.top(x) + b.thickness; ++y) {
                if (l.in_bounds(y, x)) {
                    l(y, x) = static_cast<std::int32_t>(i + 1);
                }
            }
        }
    }
    return l;
}

} // namespace

TEST(Contours, Square) {
    LabelMap l(5, 5, 1, 0);
    for (int y = 1; y <= 3; ++y) {
        for (int x = 1; x <= 3; ++x) {
            l(y, x) = 1;
        }
    }
    const auto cs = trace_contours(l);
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(cs[0].instance, 1);
    EXPECT_EQ(cs[0].pixels.size(), 8u);
    EXPECT_EQ(std::set<PixelCoord>(cs[0].pixels.begin(), cs[0].pixels.end()), boundary_oracle(l, 1));
    expect_closed_loop(cs[0]);
}

TEST(Contours, SinglePixel) {
    LabelMap l(3, 3, 1, 0);
    l(1, 1) = 4;
    const auto cs = trace_contours(l);
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(cs[0].pixels, (std::vector<PixelCoord>{{1, 1}}));
}

TEST(Contours, LShapeMatchesBoundaryPredicate) {
    LabelMap l(8, 8, 1, 0);
    for (int y = 1; y <= 6; ++y) {
        for (int x = 1; x <= 2; ++x) {
            l(y, x) = 2;
        }
    }
    for (int y = 5; y <= 6; ++y) {
        for (int x = 3; x <= 6; ++x) {
            l(y, x) = 2;
        }
    }
    const auto cs = trace_contours(l);
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(std::set<PixelCoord>(cs[0].pixels.begin(), cs[0].pixels.end()), boundary_oracle(l, 2));
    expect_closed_loop(cs[0]);
}

TEST(Contours, TouchingImageEdgeAndRandomShapes) {
    std::mt19937 rng(3);
    for (int t = 0; t < 40; ++t) {
        // Random convex-ish blob: union of rectangles sharing a core.
        LabelMap l(12, 12, 1, 0);
        for (int r = 0; r < 3; ++r) {
            const int y0 = static_cast<int>(rng() % 6);
            const int x0 = static_cast<int>(rng() % 6);
            for (int y = y0; y <= 6 + static_cast<int>(rng() % 6) && y < 12; ++y) {
                for (int x = x0; x <= 6 + static_cast<int>(rng() % 6) && x < 12; ++x) {
                    l(y, x) = 1;
                }
            }
        }
        const auto cs = trace_contours(l);
        std::set<PixelCoord> traced;
        for (const auto& c : cs) {
            traced.insert(c.pixels.begin(), c.pixels.end());
            expect_closed_loop(c);
        }
        // No holes by construction (every rectangle contains (6,6)), so outer boundary = predicate.
        EXPECT_EQ(traced, boundary_oracle(l, 1));
    }
}

TEST(Bumper, DirectRule) {
    EXPECT_EQ(classify_counts({10, 2}), Bumper::Front);
    EXPECT_EQ(classify_counts({2, 10}), Bumper::Rear);
    EXPECT_EQ(classify_counts({4, 4}), Bumper::Rear);
}

TEST(Bumper, BoxCountsAndTie) {
    // Symmetric cross: both boxes see the same count, so the tie gives Rear.
    LabelMap l(9, 9, 1, 0);
    for (int i = 0; i < 9; ++i) {
        l(4, i) = 1;
        l(i, 4) = 1;
    }
    const auto c = bumper_box_counts(l, {4, 4}, 3, 3);
    EXPECT_EQ(c.top_right, 4);
    EXPECT_EQ(c.bottom_left, 4);
    EXPECT_EQ(classify_bumper(l, {4, 4}, 3, 3), Bumper::Rear);
}

TEST(Bumper, InvariantUnderRelabeling) {
    const LabelMap l = draw(30, 30, {{2, 1, 6, 0, 29}, {15, 0.5, 4, 0, 29}});
    LabelMap p = l;
    for (auto& v : p.data()) {
        v = v == 1 ? 7 : (v == 2 ? 3 : 0);
    }
    for (int y = 0; y < 30; ++y) {
        for (int x = 0; x < 30; ++x) {
            if (l(y, x) != 0) {
                ASSERT_EQ(classify_bumper(l, {x, y}, 7, 7), classify_bumper(p, {x, y}, 7, 7));
            }
        }
    }
}

TEST(Trajectories, ParallelogramEdges) {
    for (const double slope : {1.0, 2.0, 0.5}) {
        const Band b{-5, slope, 6, 0, 39};
        const LabelMap l = draw(64, 40, {b});
        TrajectoryConfig cfg;
        cfg.bumper = Bumper::Front;
        const auto front = extract_trajectories(l, cfg);
        cfg.bumper = Bumper::Rear;
        const auto rear = extract_trajectories(l, cfg);
        ASSERT_EQ(front.vehicles.size(), 1u);
        for (const auto& pt : front.vehicles.at(1)) {
            int last = -1;
            for (int y = 0; y < 64; ++y) {
                if (l(y, pt.frame) == 1) {
                    last = y;
                }
            }
            EXPECT_EQ(pt.position, last) << "slope " << slope << " frame " << pt.frame;
        }
        for (const auto& pt : rear.vehicles.at(1)) {
            int first = -1;
            for (int y = 63; y >= 0; --y) {
                if (l(y, pt.frame) == 1) {
                    first = y;
                }
            }
            EXPECT_EQ(pt.position, first) << "slope " << slope << " frame " << pt.frame;
        }
    }
}

TEST(Trajectories, FrontAndRearAreParallelForInteriorBand) {
    const Band b{3, 1.0, 5, 2, 30};
    const LabelMap l = draw(48, 40, {b});
    TrajectoryConfig cfg;
    cfg.bumper = Bumper::Front;
    const auto front = extract_trajectories(l, cfg).vehicles.at(1);
    cfg.bumper = Bumper::Rear;
    const auto rear = extract_trajectories(l, cfg).vehicles.at(1);
    ASSERT_EQ(front.size(), rear.size());
    ASSERT_EQ(front.size(), 29u);
    for (std::size_t i = 0; i < front.size(); ++i) {
        EXPECT_EQ(front[i].frame, rear[i].frame);
        EXPECT_EQ(rear[i].position, b.top(rear[i].frame));
        EXPECT_EQ(front[i].position - rear[i].position, b.thickness - 1);
    }
}

TEST(Trajectories, DecreasingRowTravelSwapsEdges) {
    const Band b{40, -1.0, 5, 0, 30};
    const LabelMap l = draw(48, 40, {b});
    TrajectoryConfig cfg;
    cfg.direction = TravelDirection::DecreasingRow;
    cfg.bumper = Bumper::Front;
    const auto front = extract_trajectories(l, cfg);
    ASSERT_FALSE(front.vehicles.at(1).empty());
    for (const auto& pt : front.vehicles.at(1)) {
        EXPECT_EQ(pt.position, b.top(pt.frame));
    }
    cfg.bumper = Bumper::Rear;
    const auto rear = extract_trajectories(l, cfg);
    for (const auto& pt : rear.vehicles.at(1)) {
        EXPECT_EQ(pt.position, b.top(pt.frame) + b.thickness - 1);
    }
}

TEST(Trajectories, EmptyAndSupports) {
    EXPECT_TRUE(extract_trajectories(LabelMap(10, 10, 1, 0)).vehicles.empty());
    const LabelMap l = draw(64, 64, {{0, 1.0, 5, 3, 20}, {10, 1.5, 4, 25, 40}});
    const auto ts = extract_trajectories(l);
    ASSERT_EQ(ts.vehicles.size(), 2u);
    for (const auto& [id, pts] : ts.vehicles) {
        std::set<int> cols;
        for (int y = 0; y < 64; ++y) {
            for (int x = 0; x < 64; ++x) {
                if (l(y, x) == id) {
                    cols.insert(x);
                }
            }
        }
        std::set<int> frames;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            frames.insert(pts[i].frame);
            if (i > 0) {
                EXPECT_LT(pts[i - 1].frame, pts[i].frame);
            }
        }
        EXPECT_EQ(frames, cols);
    }
}

TEST(Trajectories, CameraRule) {
    for (int c = 1; c <= 3; ++c) {
        EXPECT_EQ(default_bumper_for_camera(c), Bumper::Rear);
    }
    for (int c = 4; c <= 8; ++c) {
        EXPECT_EQ(default_bumper_for_camera(c), Bumper::Front);
    }
    EXPECT_THROW(default_bumper_for_camera(9), InvalidArgument);
}

TEST(TrajectoryCsv, EmptyIsHeaderOnly) {
    std::ostringstream os;
    write_trajectories(os, TrajectorySet{});
    EXPECT_EQ(os.str(), "vehicle_id,frame,scanline_position_px,bumper_type\n");
}

TEST(TrajectoryCsv, RowsInFrameOrderAndRoundTrip) {
    TrajectorySet ts;
    ts.bumper = Bumper::Front;
    ts.vehicles[2] = {{0, 5}, {1, 7}, {2, 9}};
    ts.vehicles[1] = {{4, 1}};
    std::ostringstream os;
    write_trajectories(os, ts, {10.0});
    EXPECT_EQ(os.str(),
              "# frame_rate=10\n"
              "vehicle_id,frame,scanline_position_px,bumper_type\n"
              "1,4,1,front\n"
              "2,0,5,front\n"
              "2,1,7,front\n"
              "2,2,9,front\n");
    std::istringstream is(os.str());
    EXPECT_EQ(parse_trajectories(is), ts);
}

TEST(TrajectoryCsv, RejectsBadInput) {
    std::istringstream bad_header("id,frame\n");
    EXPECT_THROW(parse_trajectories(bad_header), DataError);
    std::istringstream bad_row("vehicle_id,frame,scanline_position_px,bumper_type\n1,x,3,front\n");
    EXPECT_THROW(parse_trajectories(bad_row), DataError);
    std::istringstream mixed("vehicle_id,frame,scanline_position_px,bumper_type\n1,0,3,front\n1,1,4,rear\n");
    EXPECT_THROW(parse_trajectories(mixed), DataError);
}
