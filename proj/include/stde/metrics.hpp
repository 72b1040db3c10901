#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stde/image.hpp"

namespace stde {

/// Greedy one-to-one matching of predicted instances to ground-truth
/// instances by descending IoU (ties: lower gt label, then lower pred label).
/// Background 0 always maps to background 0.
struct InstanceMatching {
    std::map<std::int32_t, std::int32_t> pred_to_gt;
    std::vector<std::int32_t> unmatched_pred;
};

InstanceMatching match_instances(const LabelMap& pred, const LabelMap& gt);

struct PixelMetrics {
    double global_accuracy = 0.0;
    double mean_accuracy = 0.0;
    double mean_iou = 0.0;          ///< unweighted over gt classes and unmatched predictions
    double weighted_mean_iou = 0.0; ///< weighted by gt class pixel count
    std::map<std::int32_t, double> class_iou; ///< per gt class (0 = background)
    std::map<std::int32_t, double> class_dice;
};

PixelMetrics pixel_metrics(const LabelMap& pred, const LabelMap& gt);

/// Boundary F1 averaged over gt classes and unmatched predicted instances.
/// Boundary pixels are class pixels with an in-image 8-neighbour of another
/// class; a boundary pixel matches if a boundary pixel of the corresponding
/// class lies within `tolerance` (Euclidean).
double bf_score(const LabelMap& pred, const LabelMap& gt, double tolerance);

enum class OverlapMeasure { Dice, IoU };

/// Symmetric best Dice: min(BD(pred->gt), BD(gt->pred)), background excluded.
double sbd(const LabelMap& pred, const LabelMap& gt, OverlapMeasure measure = OverlapMeasure::Dice);

/// One-directional best overlap: mean over a's instances of the best overlap in b.
double best_overlap(const LabelMap& a, const LabelMap& b, OverlapMeasure measure = OverlapMeasure::Dice);

struct MetricReport {
    double global_accuracy = 0.0;
    double mean_accuracy = 0.0;
    double mean_iou = 0.0;
    double weighted_mean_iou = 0.0;
    double bf_score = 0.0;
    double sbd = 0.0;
};

/// BF tolerance default: 2 px up to 64x64 scenes, 0.75% of the diagonal above.
double default_bf_tolerance(int height, int width);

MetricReport evaluate(const LabelMap& pred, const LabelMap& gt, double bf_tolerance);

std::string format_report(const MetricReport& r);
std::string report_csv_header();
std::string report_csv_row(const MetricReport& r);

/// Squared Euclidean distance from every pixel to the nearest `true` pixel
/// (exact two-pass lower-envelope transform); +inf everywhere if none.
std::vector<double> squared_distance_transform(const std::vector<bool>& mask, int height, int width);

} // namespace stde
