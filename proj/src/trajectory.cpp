#include "stde/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "stde/error.hpp"

namespace stde {

namespace {

// Headings: 0 east, 1 south, 2 west, 3 north.
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

std::vector<PixelCoord> follow_border(const std::vector<std::int32_t>& region, int h, int w, std::int32_t id,
                                      PixelCoord start) {
    const auto inside = [&](int x, int y) {
        return x >= 0 && x < w && y >= 0 && y < h && region[static_cast<std::size_t>(y) * w + x] == id;
    };
    std::vector<PixelCoord> loop;
    PixelCoord p = start;
    int heading = 0;
    int first_move = -1;
    while (true) {
        int move = -1;
        for (int turn : {3, 0, 1, 2}) { // left, straight, right, back
            const int d = (heading + turn) % 4;
            if (inside(p.x + kDx[d], p.y + kDy[d])) {
                move = d;
                break;
            }
        }
        if (move < 0) {
            return {start};
        }
        if (first_move < 0) {
            first_move = move;
        } else if (p == start && move == first_move) {
            break;
        }
        loop.push_back(p);
        p.x += kDx[move];
        p.y += kDy[move];
        heading = move;
    }
    return loop;
}

LabelMap flip_rows(const LabelMap& in) {
    LabelMap out(in.height(), in.width(), 1);
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            out(in.height() - 1 - y, x) = in(y, x);
        }
    }
    return out;
}

} // namespace

std::vector<Contour> trace_contours(const LabelMap& labels) {
    const int h = labels.height();
    const int w = labels.width();
    // 4-connected regions per label, ids assigned in raster order.
    std::vector<std::int32_t> region(labels.size(), -1);
    std::vector<std::pair<std::int32_t, PixelCoord>> regions; // (label, first pixel)
    std::vector<PixelCoord> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::int32_t l = labels(y, x);
            if (l == 0 || region[static_cast<std::size_t>(y) * w + x] >= 0) {
                continue;
            }
            const auto id = static_cast<std::int32_t>(regions.size());
            regions.push_back({l, {x, y}});
            region[static_cast<std::size_t>(y) * w + x] = id;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const PixelCoord p = stack.back();
                stack.pop_back();
                for (int d = 0; d < 4; ++d) {
                    const int nx = p.x + kDx[d];
                    const int ny = p.y + kDy[d];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) {
                        continue;
                    }
                    const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                    if (labels(ny, nx) == l && region[ni] < 0) {
                        region[ni] = id;
                        stack.push_back({nx, ny});
                    }
                }
            }
        }
    }
    std::vector<std::size_t> order(regions.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return regions[a].first < regions[b].first; });
    std::vector<Contour> out;
    for (std::size_t i : order) {
        out.push_back(
            {regions[i].first, follow_border(region, h, w, static_cast<std::int32_t>(i), regions[i].second)});
    }
    return out;
}

BoxCounts bumper_box_counts(const LabelMap& labels, PixelCoord p, int box_height, int box_width) {
    if (box_height < 1 || box_width < 1) {
        throw InvalidArgument("bumper box dimensions must be >= 1");
    }
    const std::int32_t l = labels(p.y, p.x);
    BoxCounts c;
    for (int dy = 0; dy < box_height; ++dy) {
        for (int dx = 0; dx < box_width; ++dx) {
            if (dy == 0 && dx == 0) {
                continue;
            }
            if (labels.in_bounds(p.y - dy, p.x + dx) && labels(p.y - dy, p.x + dx) == l) {
                ++c.top_right;
            }
            if (labels.in_bounds(p.y + dy, p.x - dx) && labels(p.y + dy, p.x - dx) == l) {
                ++c.bottom_left;
            }
        }
    }
    return c;
}

Bumper classify_counts(const BoxCounts& counts) {
    return counts.top_right > counts.bottom_left ? Bumper::Front : Bumper::Rear;
}

Bumper classify_bumper(const LabelMap& labels, PixelCoord p, int box_height, int box_width) {
    if (!labels.in_bounds(p.y, p.x)) {
        throw InvalidArgument("classify_bumper: pixel outside the segmentation");
    }
    return classify_counts(bumper_box_counts(labels, p, box_height, box_width));
}

Bumper default_bumper_for_camera(int camera) {
    if (camera < 1 || camera > 8) {
        throw InvalidArgument("camera index must be in 1..8");
    }
    return camera <= 3 ? Bumper::Rear : Bumper::Front;
}

TrajectorySet extract_trajectories(const LabelMap& labels_in, const TrajectoryConfig& config) {
    const bool flipped = config.direction == TravelDirection::DecreasingRow;
    const LabelMap labels = flipped ? flip_rows(labels_in) : labels_in;
    const bool front = config.bumper == Bumper::Front;

    TrajectorySet ts;
    ts.bumper = config.bumper;
    // (label, column) -> best row of the selected class, and best boundary row overall.
    std::map<std::pair<std::int32_t, int>, std::pair<int, int>> best;
    const auto better = [front](int candidate, int current) {
        return current < 0 || (front ? candidate > current : candidate < current);
    };
    std::set<std::pair<int, int>> seen;
    for (const Contour& c : trace_contours(labels)) {
        for (const PixelCoord& p : c.pixels) {
            if (!seen.insert({p.x, p.y}).second) {
                continue;
            }
            auto [it, inserted] = best.try_emplace({c.instance, p.x}, std::make_pair(-1, -1));
            auto& [selected, any] = it->second;
            if (better(p.y, any)) {
                any = p.y;
            }
            if (classify_bumper(labels, p, config.box_height, config.box_width) == config.bumper &&
                better(p.y, selected)) {
                selected = p.y;
            }
        }
    }
    for (const auto& [key, rows] : best) {
        const auto [label, col] = key;
        int row = rows.first >= 0 ? rows.first : rows.second;
        if (flipped) {
            row = labels.height() - 1 - row;
        }
        ts.vehicles[label].push_back({col, row});
    }
    return ts;
}

std::string bumper_name(Bumper b) { return b == Bumper::Front ? "front" : "rear"; }

Bumper parse_bumper(const std::string& s) {
    if (s == "front") {
        return Bumper::Front;
    }
    if (s == "rear") {
        return Bumper::Rear;
    }
    throw InvalidArgument("unknown bumper type '" + s + "' (expected front or rear)");
}

void write_trajectories(std::ostream& os, const TrajectorySet& ts, const TrajectoryMetadata& meta) {
    if (meta.frame_rate > 0.0) {
        os << "# frame_rate=" << meta.frame_rate << '\n';
    }
    os << "vehicle_id,frame,scanline_position_px,bumper_type\n";
    const std::string type = bumper_name(ts.bumper);
    for (const auto& [id, points] : ts.vehicles) {
        for (const auto& p : points) {
            os << id << ',' << p.frame << ',' << p.position << ',' << type << '\n';
        }
    }
}

void export_trajectories(const std::filesystem::path& path, const TrajectorySet& ts, const TrajectoryMetadata& meta) {
    std::ofstream os(path);
    if (!os) {
        throw DataError("cannot write " + path.string());
    }
    write_trajectories(os, ts, meta);
    if (!os) {
        throw DataError("write failed: " + path.string());
    }
}

TrajectorySet parse_trajectories(std::istream& is) {
    TrajectorySet ts;
    std::string line;
    bool header = false;
    int line_no = 0;
    int rows = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (!header) {
            if (line != "vehicle_id,frame,scanline_position_px,bumper_type") {
                throw DataError("trajectory CSV: unexpected header '" + line + "'");
            }
            header = true;
            continue;
        }
        std::istringstream ls(line);
        std::string id, frame, pos, type;
        const std::string where = "trajectory CSV line " + std::to_string(line_no);
        if (!std::getline(ls, id, ',') || !std::getline(ls, frame, ',') || !std::getline(ls, pos, ',') ||
            !std::getline(ls, type)) {
            throw DataError(where + ": expected 4 fields");
        }
        auto to_int = [&](const std::string& s) {
            int v = 0;
            const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || end != s.data() + s.size()) {
                throw DataError(where + ": '" + s + "' is not an integer");
            }
            return v;
        };
        Bumper b;
        try {
            b = parse_bumper(type);
        } catch (const InvalidArgument& e) {
            throw DataError(where + ": " + e.what());
        }
        if (rows > 0 && b != ts.bumper) {
            throw DataError(where + ": mixed bumper types");
        }
        ts.bumper = b;
        ts.vehicles[to_int(id)].push_back({to_int(frame), to_int(pos)});
        ++rows;
    }
    if (!header) {
        throw DataError("trajectory CSV: missing header");
    }
    return ts;
}

} // namespace stde
