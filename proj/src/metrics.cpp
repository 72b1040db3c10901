#include "stde/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

namespace stde {

namespace {

struct Overlaps {
    std::map<std::pair<std::int32_t, std::int32_t>, std::int64_t> inter; // (pred, gt) -> count
    std::map<std::int32_t, std::int64_t> pred_size;
    std::map<std::int32_t, std::int64_t> gt_size;
};

void check_shapes(const LabelMap& pred, const LabelMap& gt) {
    if (pred.height() != gt.height() || pred.width() != gt.width()) {
        throw DataError("label maps differ in shape: " + std::to_string(pred.height()) + "x" +
                        std::to_string(pred.width()) + " vs " + std::to_string(gt.height()) + "x" +
                        std::to_string(gt.width()));
    }
}

Overlaps overlaps(const LabelMap& pred, const LabelMap& gt) {
    check_shapes(pred, gt);
    Overlaps o;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const std::int32_t p = pred.data()[i];
        const std::int32_t g = gt.data()[i];
        ++o.inter[{p, g}];
        ++o.pred_size[p];
        ++o.gt_size[g];
    }
    return o;
}

double overlap_score(std::int64_t inter, std::int64_t a, std::int64_t b, OverlapMeasure m) {
    if (m == OverlapMeasure::Dice) {
        return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
    }
    return static_cast<double>(inter) / static_cast<double>(a + b - inter);
}

// Prediction labels rewritten into gt label space; unmatched instances get
// distinct negative labels.
LabelMap mapped_prediction(const LabelMap& pred, const InstanceMatching& m) {
    LabelMap out(pred.height(), pred.width(), 1);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const std::int32_t p = pred.data()[i];
        if (p == 0) {
            out.data()[i] = 0;
            continue;
        }
        const auto it = m.pred_to_gt.find(p);
        out.data()[i] = it != m.pred_to_gt.end() ? it->second : -p;
    }
    return out;
}

std::vector<bool> class_boundary(const LabelMap& labels, std::int32_t cls) {
    const int h = labels.height();
    const int w = labels.width();
    std::vector<bool> b(labels.size(), false);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (labels(y, x) != cls) {
                continue;
            }
            bool edge = false;
            for (int dy = -1; dy <= 1 && !edge; ++dy) {
                for (int dx = -1; dx <= 1 && !edge; ++dx) {
                    if ((dy != 0 || dx != 0) && labels.in_bounds(y + dy, x + dx) && labels(y + dy, x + dx) != cls) {
                        edge = true;
                    }
                }
            }
            b[static_cast<std::size_t>(y) * w + x] = edge;
        }
    }
    return b;
}

// 1-D squared distance transform (Felzenszwalb & Huttenlocher lower envelope).
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == inf) {
            continue;
        }
        while (k >= 0) {
            const double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = k == 0 ? -inf : ((f[q] + q * q) - (f[v[k - 1]] + v[k - 1] * v[k - 1])) / (2.0 * q - 2.0 * v[k - 1]);
        z[k + 1] = inf;
    }
    if (k < 0) {
        std::fill(d, d + n, inf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) {
            ++j;
        }
        const double dq = q - v[j];
        d[q] = dq * dq + f[v[j]];
    }
}

} // namespace

std::vector<double> squared_distance_transform(const std::vector<bool>& mask, int height, int width) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> grid(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        grid[i] = mask[i] ? 0.0 : inf;
    }
    const int n = std::max(height, width);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);
    for (int x = 0; x < width; ++x) {
        for (int y = 0; y < height; ++y) {
            f[y] = grid[static_cast<std::size_t>(y) * width + x];
        }
        edt_1d(f.data(), d.data(), height, v, z);
        for (int y = 0; y < height; ++y) {
            grid[static_cast<std::size_t>(y) * width + x] = d[y];
        }
    }
    for (int y = 0; y < height; ++y) {
        double* row = grid.data() + static_cast<std::size_t>(y) * width;
        std::copy(row, row + width, f.begin());
        edt_1d(f.data(), d.data(), width, v, z);
        std::copy(d.begin(), d.begin() + width, row);
    }
    return grid;
}

InstanceMatching match_instances(const LabelMap& pred, const LabelMap& gt) {
    const Overlaps o = overlaps(pred, gt);
    std::vector<std::tuple<double, std::int32_t, std::int32_t>> cand; // (-iou, gt, pred)
    for (const auto& [key, inter] : o.inter) {
        const auto [p, g] = key;
        if (p == 0 || g == 0) {
            continue;
        }
        const double iou = overlap_score(inter, o.pred_size.at(p), o.gt_size.at(g), OverlapMeasure::IoU);
        cand.emplace_back(-iou, g, p);
    }
    std::sort(cand.begin(), cand.end());
    InstanceMatching m;
    std::set<std::int32_t> used_gt;
    for (const auto& [neg_iou, g, p] : cand) {
        if (m.pred_to_gt.count(p) != 0 || used_gt.count(g) != 0) {
            continue;
        }
        m.pred_to_gt[p] = g;
        used_gt.insert(g);
    }
    for (const auto& [p, size] : o.pred_size) {
        if (p != 0 && m.pred_to_gt.count(p) == 0) {
            m.unmatched_pred.push_back(p);
        }
    }
    return m;
}

PixelMetrics pixel_metrics(const LabelMap& pred, const LabelMap& gt) {
    check_shapes(pred, gt);
    const InstanceMatching m = match_instances(pred, gt);
    const LabelMap mapped = mapped_prediction(pred, m);
    const Overlaps o = overlaps(mapped, gt);

    PixelMetrics r;
    const auto total = static_cast<double>(gt.size());
    if (gt.size() == 0) {
        return r;
    }
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        correct += mapped.data()[i] == gt.data()[i] ? 1 : 0;
    }
    r.global_accuracy = static_cast<double>(correct) / total;

    double acc_sum = 0.0;
    double iou_sum = 0.0;
    double weighted = 0.0;
    for (const auto& [c, gsize] : o.gt_size) {
        const auto it = o.inter.find({c, c});
        const std::int64_t inter = it == o.inter.end() ? 0 : it->second;
        const auto ps = o.pred_size.find(c);
        const std::int64_t psize = ps == o.pred_size.end() ? 0 : ps->second;
        const double iou = overlap_score(inter, psize, gsize, OverlapMeasure::IoU);
        r.class_iou[c] = iou;
        r.class_dice[c] = overlap_score(inter, psize, gsize, OverlapMeasure::Dice);
        acc_sum += static_cast<double>(inter) / static_cast<double>(gsize);
        iou_sum += iou;
        weighted += iou * static_cast<double>(gsize);
    }
    const double n_gt = static_cast<double>(o.gt_size.size());
    r.mean_accuracy = acc_sum / n_gt;
    // Unmatched predictions are extra classes with IoU 0.
    r.mean_iou = iou_sum / (n_gt + static_cast<double>(m.unmatched_pred.size()));
    r.weighted_mean_iou = weighted / total;
    return r;
}

double bf_score(const LabelMap& pred, const LabelMap& gt, double tolerance) {
    check_shapes(pred, gt);
    if (tolerance < 0.0) {
        throw InvalidArgument("bf_score: tolerance must be >= 0");
    }
    const InstanceMatching m = match_instances(pred, gt);
    const LabelMap mapped = mapped_prediction(pred, m);
    std::set<std::int32_t> classes(gt.data().begin(), gt.data().end());
    for (std::int32_t p : m.unmatched_pred) {
        classes.insert(-p);
    }
    if (classes.empty()) {
        return 1.0;
    }
    const int h = gt.height();
    const int w = gt.width();
    const double tol2 = tolerance * tolerance;
    double sum = 0.0;
    for (std::int32_t c : classes) {
        const auto bp = class_boundary(mapped, c);
        const auto bg = class_boundary(gt, c);
        const auto np = std::count(bp.begin(), bp.end(), true);
        const auto ng = std::count(bg.begin(), bg.end(), true);
        if (np == 0 && ng == 0) {
            sum += 1.0;
            continue;
        }
        if (np == 0 || ng == 0) {
            continue;
        }
        const auto dist_to_gt = squared_distance_transform(bg, h, w);
        const auto dist_to_pred = squared_distance_transform(bp, h, w);
        std::int64_t hit_p = 0;
        std::int64_t hit_g = 0;
        for (std::size_t i = 0; i < bp.size(); ++i) {
            hit_p += bp[i] && dist_to_gt[i] <= tol2 ? 1 : 0;
            hit_g += bg[i] && dist_to_pred[i] <= tol2 ? 1 : 0;
        }
        const double precision = static_cast<double>(hit_p) / static_cast<double>(np);
        const double recall = static_cast<double>(hit_g) / static_cast<double>(ng);
        if (precision + recall > 0.0) {
            sum += 2.0 * precision * recall / (precision + recall);
        }
    }
    return sum / static_cast<double>(classes.size());
}

double best_overlap(const LabelMap& a, const LabelMap& b, OverlapMeasure measure) {
    const Overlaps o = overlaps(a, b);
    std::map<std::int32_t, double> best;
    for (const auto& [l, size] : o.pred_size) {
        if (l != 0) {
            best[l] = 0.0;
        }
    }
    for (const auto& [key, inter] : o.inter) {
        const auto [la, lb] = key;
        if (la == 0 || lb == 0) {
            continue;
        }
        const double s = overlap_score(inter, o.pred_size.at(la), o.gt_size.at(lb), measure);
        best[la] = std::max(best[la], s);
    }
    if (best.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& [l, s] : best) {
        sum += s;
    }
    return sum / static_cast<double>(best.size());
}

double sbd(const LabelMap& pred, const LabelMap& gt, OverlapMeasure measure) {
    check_shapes(pred, gt);
    const bool pred_any = std::any_of(pred.data().begin(), pred.data().end(), [](std::int32_t l) { return l != 0; });
    const bool gt_any = std::any_of(gt.data().begin(), gt.data().end(), [](std::int32_t l) { return l != 0; });
    if (!pred_any && !gt_any) {
        return 1.0;
    }
    if (!pred_any || !gt_any) {
        return 0.0;
    }
    return std::min(best_overlap(pred, gt, measure), best_overlap(gt, pred, measure));
}

double default_bf_tolerance(int height, int width) {
    return std::max(2.0, 0.0075 * std::hypot(static_cast<double>(height), static_cast<double>(width)));
}

MetricReport evaluate(const LabelMap& pred, const LabelMap& gt, double bf_tolerance) {
    const PixelMetrics pm = pixel_metrics(pred, gt);
    MetricReport r;
    r.global_accuracy = pm.global_accuracy;
    r.mean_accuracy = pm.mean_accuracy;
    r.mean_iou = pm.mean_iou;
    r.weighted_mean_iou = pm.weighted_mean_iou;
    r.bf_score = bf_score(pred, gt, bf_tolerance);
    r.sbd = sbd(pred, gt);
    return r;
}

std::string format_report(const MetricReport& r) {
    std::ostringstream os;
    os << std::setprecision(6) << std::fixed;
    os << "global_accuracy = " << r.global_accuracy << '\n'
       << "mean_accuracy = " << r.mean_accuracy << '\n'
       << "mean_iou = " << r.mean_iou << '\n'
       << "weighted_mean_iou = " << r.weighted_mean_iou << '\n'
       << "bf_score = " << r.bf_score << '\n'
       << "sbd = " << r.sbd << '\n';
    return os.str();
}

std::string report_csv_header() {
    return "global_accuracy,mean_accuracy,mean_iou,weighted_mean_iou,bf_score,sbd";
}

std::string report_csv_row(const MetricReport& r) {
    std::ostringstream os;
    os << std::setprecision(6) << std::fixed << r.global_accuracy << ',' << r.mean_accuracy << ',' << r.mean_iou
       << ',' << r.weighted_mean_iou << ',' << r.bf_score << ',' << r.sbd;
    return os.str();
}

} // namespace stde
