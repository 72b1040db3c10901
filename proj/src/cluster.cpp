#include "stde/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <numeric>
#include <unordered_set>

namespace stde {

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0u); }

    std::uint32_t find(std::uint32_t x) {
        std::uint32_t root = x;
        while (parent_[root] != root) {
            root = parent_[root];
        }
        while (parent_[x] != root) {
            const std::uint32_t next = parent_[x];
            parent_[x] = root;
            x = next;
        }
        return root;
    }

    /// Links two roots; returns the surviving root.
    std::uint32_t link(std::uint32_t a, std::uint32_t b) {
        if (size_[a] < size_[b]) {
            std::swap(a, b);
        }
        parent_[b] = a;
        size_[a] += size_[b];
        return a;
    }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
};

bool forward_offset(const Offset& o) { return o.dy > 0 || (o.dy == 0 && o.dx > 0); }

} // namespace

int Segmentation::instance_count() const {
    int n = 0;
    for (std::size_t k = 1; k < sizes.size(); ++k) {
        n += sizes[k] > 0 ? 1 : 0;
    }
    return n;
}

void recount(Segmentation& seg) {
    std::int32_t max_label = 0;
    for (std::int32_t l : seg.labels.data()) {
        max_label = std::max(max_label, l);
    }
    seg.sizes.assign(static_cast<std::size_t>(max_label) + 1, 0);
    for (std::int32_t l : seg.labels.data()) {
        ++seg.sizes[l];
    }
}

AffinityGraph affinity_to_graph(const AffinityTensor& a, const GraphConfig& config) {
    AffinityGraph g;
    g.height = a.height();
    g.width = a.width();
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            const auto u = static_cast<std::uint32_t>(y * a.width() + x);
            for (int c = 0; c < a.channels(); ++c) {
                const Offset o = a.ranges().offset(c);
                if (!forward_offset(o) || !a.neighbor_in_bounds(y, x, c)) {
                    continue;
                }
                const auto v = static_cast<std::uint32_t>((y + o.dy) * a.width() + (x + o.dx));
                const double s = a(y, x, c);
                if (a.ranges().range_of(c) <= config.attractive_max_range) {
                    g.attractive.push_back({u, v, s});
                } else {
                    g.repulsive.push_back({u, v, 1.0 - s});
                    if (config.long_range_attraction) {
                        g.attractive.push_back({u, v, s});
                    }
                }
            }
        }
    }
    return g;
}

std::vector<std::int32_t> mutex_watershed_partition(const AffinityGraph& graph) {
    const std::size_t n = graph.node_count();
    struct Item {
        double weight;
        bool attractive;
        std::uint32_t lo;
        std::uint32_t hi;
    };
    std::vector<Item> items;
    items.reserve(graph.attractive.size() + graph.repulsive.size());
    for (const auto& e : graph.attractive) {
        if (e.u >= n || e.v >= n) {
            throw InvalidArgument("mutex_watershed: edge endpoint out of range");
        }
        if (e.u != e.v && e.weight > 0.0) {
            items.push_back({e.weight, true, std::min(e.u, e.v), std::max(e.u, e.v)});
        }
    }
    for (const auto& e : graph.repulsive) {
        if (e.u >= n || e.v >= n) {
            throw InvalidArgument("mutex_watershed: edge endpoint out of range");
        }
        if (e.u != e.v) {
            items.push_back({e.weight, false, std::min(e.u, e.v), std::max(e.u, e.v)});
        }
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        if (a.weight != b.weight) {
            return a.weight > b.weight;
        }
        if (a.attractive != b.attractive) {
            return a.attractive;
        }
        if (a.lo != b.lo) {
            return a.lo < b.lo;
        }
        return a.hi < b.hi;
    });

    UnionFind uf(n);
    // Mutex partners per cluster root, kept symmetric and root-indexed.
    std::vector<std::unordered_set<std::uint32_t>> mutex(n);
    for (const Item& it : items) {
        const std::uint32_t ra = uf.find(it.lo);
        const std::uint32_t rb = uf.find(it.hi);
        if (ra == rb) {
            continue;
        }
        if (!it.attractive) {
            mutex[ra].insert(rb);
            mutex[rb].insert(ra);
            continue;
        }
        const auto& small = mutex[ra].size() < mutex[rb].size() ? mutex[ra] : mutex[rb];
        const std::uint32_t other = mutex[ra].size() < mutex[rb].size() ? rb : ra;
        if (small.count(other) != 0) {
            continue;
        }
        const std::uint32_t root = uf.link(ra, rb);
        const std::uint32_t gone = root == ra ? rb : ra;
        for (std::uint32_t p : mutex[gone]) {
            mutex[p].erase(gone);
            mutex[p].insert(root);
            mutex[root].insert(p);
        }
        mutex[gone].clear();
    }

    std::vector<std::int32_t> ids(n, -1);
    std::vector<std::int32_t> root_id(n, -1);
    std::int32_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t r = uf.find(static_cast<std::uint32_t>(i));
        if (root_id[r] < 0) {
            root_id[r] = next++;
        }
        ids[i] = root_id[r];
    }
    return ids;
}

Segmentation mutex_watershed(const AffinityGraph& graph) {
    const auto ids = mutex_watershed_partition(graph);
    Segmentation seg;
    seg.labels = LabelMap(graph.height, graph.width, 1);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        seg.labels.data()[i] = ids[i] + 1;
    }
    recount(seg);
    return seg;
}

namespace {

// Maps old labels to new ones: keep_zero pins label 0; others ordered by
// (earliest column, earliest row).
Segmentation renumber(const Segmentation& seg, std::int32_t background_label) {
    const LabelMap& in = seg.labels;
    struct First {
        int col;
        int row;
    };
    std::map<std::int32_t, First> first;
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            const std::int32_t l = in(y, x);
            if (l == background_label) {
                continue;
            }
            auto [it, inserted] = first.emplace(l, First{x, y});
            if (!inserted && (x < it->second.col || (x == it->second.col && y < it->second.row))) {
                it->second = {x, y};
            }
        }
    }
    std::vector<std::pair<std::pair<int, int>, std::int32_t>> order;
    for (const auto& [l, f] : first) {
        order.push_back({{f.col, f.row}, l});
    }
    std::sort(order.begin(), order.end());
    std::map<std::int32_t, std::int32_t> remap;
    for (std::size_t i = 0; i < order.size(); ++i) {
        remap[order[i].second] = static_cast<std::int32_t>(i + 1);
    }
    Segmentation out;
    out.labels = LabelMap(in.height(), in.width(), 1);
    for (std::size_t i = 0; i < in.size(); ++i) {
        const std::int32_t l = in.data()[i];
        out.labels.data()[i] = l == background_label ? 0 : remap[l];
    }
    recount(out);
    return out;
}

} // namespace

Segmentation assign_background(const Segmentation& seg) {
    std::map<std::int32_t, std::pair<std::int64_t, std::size_t>> stats; // label -> (size, first index)
    for (std::size_t i = 0; i < seg.labels.size(); ++i) {
        auto [it, inserted] = stats.emplace(seg.labels.data()[i], std::make_pair(std::int64_t{0}, i));
        ++it->second.first;
    }
    std::int32_t best = -1;
    std::int64_t best_size = -1;
    std::size_t best_first = 0;
    for (const auto& [l, s] : stats) {
        if (s.first > best_size || (s.first == best_size && s.second < best_first)) {
            best = l;
            best_size = s.first;
            best_first = s.second;
        }
    }
    return renumber(seg, best);
}

Segmentation absorb_enclosed_background(const Segmentation& seg) {
    const LabelMap& lab = seg.labels;
    const int h = lab.height();
    const int w = lab.width();
    std::map<std::int32_t, std::set<std::int32_t>> adj;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::int32_t a = lab(y, x);
            adj[a];
            // Forward half of the 8-neighbourhood; edges are stored both ways.
            const int nbr[4][2] = {{y, x + 1}, {y + 1, x - 1}, {y + 1, x}, {y + 1, x + 1}};
            for (const auto& n : nbr) {
                if (lab.in_bounds(n[0], n[1]) && lab(n[0], n[1]) != a) {
                    adj[a].insert(lab(n[0], n[1]));
                    adj[lab(n[0], n[1])].insert(a);
                }
            }
        }
    }
    if (adj.count(0) == 0) {
        return seg;
    }
    std::map<std::int32_t, int> depth{{0, 0}};
    std::deque<std::int32_t> queue{0};
    while (!queue.empty()) {
        const std::int32_t c = queue.front();
        queue.pop_front();
        for (const std::int32_t n : adj[c]) {
            if (depth.emplace(n, depth[c] + 1).second) {
                queue.push_back(n);
            }
        }
    }
    Segmentation out = seg;
    bool changed = false;
    for (auto& l : out.labels.data()) {
        const auto it = depth.find(l);
        if (l != 0 && it != depth.end() && it->second % 2 == 0) {
            l = 0;
            changed = true;
        }
    }
    if (!changed) {
        return seg;
    }
    return renumber(out, 0);
}

Segmentation relabel_by_time(const Segmentation& seg) { return renumber(seg, 0); }

Segmentation refine_segments(const Segmentation& seg, std::int64_t min_size) {
    Segmentation cur = seg;
    recount(cur);
    LabelMap& lab = cur.labels;
    const int h = lab.height();
    const int w = lab.width();
    while (true) {
        std::int32_t victim = -1;
        for (std::size_t k = 1; k < cur.sizes.size(); ++k) {
            if (cur.sizes[k] > 0 && cur.sizes[k] < min_size &&
                (victim < 0 || cur.sizes[k] < cur.sizes[victim])) {
                victim = static_cast<std::int32_t>(k);
            }
        }
        if (victim < 0) {
            break;
        }
        // Shared boundary length = number of 4-adjacent pixel pairs.
        std::map<std::int32_t, std::int64_t> border;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (lab(y, x) != victim) {
                    continue;
                }
                const int nbr[4][2] = {{y - 1, x}, {y + 1, x}, {y, x - 1}, {y, x + 1}};
                for (const auto& n : nbr) {
                    if (lab.in_bounds(n[0], n[1]) && lab(n[0], n[1]) != victim) {
                        ++border[lab(n[0], n[1])];
                    }
                }
            }
        }
        std::int32_t target = 0;
        std::int64_t best = 0;
        for (const auto& [l, len] : border) {
            if (l != 0 && len > best) {
                target = l;
                best = len;
            }
        }
        for (auto& l : lab.data()) {
            if (l == victim) {
                l = target;
            }
        }
        cur.sizes[target] += cur.sizes[victim];
        cur.sizes[victim] = 0;
    }
    recount(cur);
    return cur;
}

std::int64_t default_min_size(int height, int width) {
    const double scaled = 50.0 * std::sqrt(static_cast<double>(height) * width / (512.0 * 512.0));
    return std::max<std::int64_t>(1, std::llround(scaled));
}

Segmentation segment(const AffinityTensor& affinity, const SegmentConfig& config) {
    const std::int64_t min_size =
        config.min_size < 0 ? default_min_size(affinity.height(), affinity.width()) : config.min_size;
    Segmentation seg = assign_background(mutex_watershed(affinity_to_graph(affinity, config.graph)));
    if (config.enclosed_background) {
        seg = absorb_enclosed_background(seg);
    }
    return relabel_by_time(refine_segments(seg, min_size));
}

} // namespace stde
