#pragma once

#include <cstdint>
#include <vector>

#include "stde/affinity.hpp"
#include "stde/image.hpp"

namespace stde {

struct GraphEdge {
    std::uint32_t u = 0;
    std::uint32_t v = 0;
    double weight = 0.0;
};

/// Pixels as nodes (row-major index). Attractive edges carry the affinity,
/// repulsive (mutex) edges carry 1 - affinity.
struct AffinityGraph {
    int height = 0;
    int width = 0;
    std::vector<GraphEdge> attractive;
    std::vector<GraphEdge> repulsive;

    std::size_t node_count() const { return static_cast<std::size_t>(height) * width; }
};

struct GraphConfig {
    /// Channels with range <= this are attractive, longer ranges are repulsive.
    int attractive_max_range = 1;
    /// Longer-range channels also add an attractive edge of weight s next to
    /// the repulsive 1 - s, so same-label regions cut apart by a strand (the
    /// road on either side of a vehicle) can still join.
    bool long_range_attraction = true;
};

/// Edges for every in-bounds (pixel, offset) pair, keeping only the forward
/// direction of each offset pair (dy > 0, or dy == 0 and dx > 0).
AffinityGraph affinity_to_graph(const AffinityTensor& affinity, const GraphConfig& config = {});

/// Labelled partition. `sizes[k]` is the pixel count of label k.
struct Segmentation {
    LabelMap labels;
    std::vector<std::int64_t> sizes;

    int instance_count() const; ///< labels >= 1 with nonzero size
};

/// Recomputes `sizes` from `labels`.
void recount(Segmentation& seg);

/// Greedy mutex watershed. Edges are processed by decreasing weight, ties
/// broken attractive-first, then by (min endpoint, max endpoint). An
/// attractive edge merges its clusters unless a mutex separates them; a
/// repulsive edge adds a mutex unless the endpoints are already merged.
/// Zero-weight attractive edges carry no attraction and are skipped.
/// Returns a cluster id per node, numbered 0.. in order of first node.
std::vector<std::int32_t> mutex_watershed_partition(const AffinityGraph& graph);

/// Mutex watershed as a segmentation: clusters labelled 1..K in raster order
/// of their first pixel; no background yet.
Segmentation mutex_watershed(const AffinityGraph& graph);

/// Relabels: the largest cluster (ties: earliest raster pixel) becomes 0,
/// the rest 1..M ordered by earliest column, then earliest row.
Segmentation assign_background(const Segmentation& seg);

/// Walks the 8-adjacency graph of clusters outward from background 0 and
/// relabels every cluster at even depth (>= 2) as background: a region that
/// only borders strands is road cut off by them, e.g. a pocket enclosed by one
/// strand that no neighbourhood offset reaches.
Segmentation absorb_enclosed_background(const Segmentation& seg);

/// Renumbers instances 1..M by earliest column (then row), keeping 0.
Segmentation relabel_by_time(const Segmentation& seg);

/// Repeatedly merges the smallest instance below `min_size` into the
/// non-background 4-neighbour instance sharing the longest boundary (ties:
/// lower label); instances touching only background become background.
Segmentation refine_segments(const Segmentation& seg, std::int64_t min_size);

/// Default small-blob threshold: 50 pixels at 512x512, scaled with the image
/// side (edge fragments grow with strand thickness, not with area).
std::int64_t default_min_size(int height, int width);

struct SegmentConfig {
    GraphConfig graph;
    std::int64_t min_size = -1; ///< < 0: default_min_size
    bool enclosed_background = true; ///< apply absorb_enclosed_background
};

/// affinity_to_graph -> mutex_watershed -> background (+ enclosed pockets)
/// -> refine -> relabel.
Segmentation segment(const AffinityTensor& affinity, const SegmentConfig& config = {});

} // namespace stde
