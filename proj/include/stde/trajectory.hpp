#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "stde/cluster.hpp"
#include "stde/stmap.hpp"

namespace stde {

/// Closed outer boundary of one 4-connected instance region.
struct Contour {
    std::int32_t instance = 0;
    std::vector<PixelCoord> pixels; ///< loop order; consecutive pixels are 4-adjacent
};

/// Traces the outer border of every 4-connected region of every instance
/// with a left-hand wall follower (exterior kept on the left), stopping when
/// the first move repeats. The traced pixels are exactly the region pixels
/// having an 8-neighbour in the exterior background component. Regions are
/// reported by label, then by first raster pixel.
std::vector<Contour> trace_contours(const LabelMap& labels);

enum class Bumper { Front, Rear };

/// Which way vehicles move along the scanline rows.
enum class TravelDirection { IncreasingRow, DecreasingRow };

struct BoxCounts {
    int top_right = 0;
    int bottom_left = 0;
};

/// Same-label pixel counts in the h x w box whose bottom-left corner is p
/// (top-right box) and whose top-right corner is p (bottom-left box), clipped
/// to the image, p itself excluded.
BoxCounts bumper_box_counts(const LabelMap& labels, PixelCoord p, int box_height, int box_width);

/// Front iff the top-right count exceeds the bottom-left count, else Rear.
Bumper classify_counts(const BoxCounts& counts);

Bumper classify_bumper(const LabelMap& labels, PixelCoord p, int box_height, int box_width);

struct TrajectoryPoint {
    int frame = 0;
    int position = 0; ///< scanline row
    friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct TrajectorySet {
    Bumper bumper = Bumper::Rear;
    std::map<std::int32_t, std::vector<TrajectoryPoint>> vehicles; ///< frames ascending
    friend bool operator==(const TrajectorySet&, const TrajectorySet&) = default;
};

struct TrajectoryConfig {
    Bumper bumper = Bumper::Rear;
    TravelDirection direction = TravelDirection::IncreasingRow;
    int box_height = 7;
    int box_width = 7;
};

/// Camera rule of the US-101 setup: cameras 1-3 look at departing vehicles
/// (rear bumper visible), cameras 4-8 at approaching ones (front bumper).
Bumper default_bumper_for_camera(int camera);

/// Per vehicle and per occupied column, the boundary pixel of the selected
/// bumper class that is extremal in the travel direction (Front: furthest
/// along, Rear: furthest back). A column with no pixel of that class falls
/// back to the extremal boundary pixel of the column. Decreasing-row travel
/// is handled by flipping rows.
TrajectorySet extract_trajectories(const LabelMap& labels, const TrajectoryConfig& config = {});

std::string bumper_name(Bumper b);
Bumper parse_bumper(const std::string& s);

struct TrajectoryMetadata {
    double frame_rate = 0.0; ///< written as a comment line when > 0
};

/// CSV: header "vehicle_id,frame,scanline_position_px,bumper_type", one row per
/// (vehicle, frame), vehicles ascending then frames ascending.
void write_trajectories(std::ostream& os, const TrajectorySet& ts, const TrajectoryMetadata& meta = {});
void export_trajectories(const std::filesystem::path& path, const TrajectorySet& ts,
                         const TrajectoryMetadata& meta = {});
TrajectorySet parse_trajectories(std::istream& is);

} // namespace stde
