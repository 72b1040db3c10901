#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "stde/adam.hpp"
#include "stde/affinity.hpp"
#include "stde/cluster.hpp"
#include "stde/losses.hpp"
#include "stde/network.hpp"

namespace stde {

/// One training example with its affinity targets at every pyramid level.
struct TrainingSample {
    Tensor3 input;   ///< 3 x H x W in [0, 1]
    LabelMap labels; ///< H x W
    AffinityTensor target;
    AffinityTensor weights;
    std::vector<AffinityTensor> scale_targets; ///< scale k at factor 2^(k+1)
    std::vector<AffinityTensor> scale_weights;
};

/// H and W must be multiples of `config.size_multiple()`.
TrainingSample make_sample(const Tensor3& input, const LabelMap& labels, const NetworkConfig& config,
                           const RangeSet& ranges, bool balanced_mse);

struct SampleLoss {
    LossComponents components;
    double total = 0.0;
};

/// Loss of one sample under the full objective.
SampleLoss sample_loss(const NetworkParams& params, const TrainingSample& sample, const RangeSet& ranges,
                       const LossWeights& weights);

/// Loss and parameter gradient of one sample.
SampleLoss sample_gradient(const NetworkParams& params, const TrainingSample& sample, const RangeSet& ranges,
                           const LossWeights& weights, NetworkParams& grad);

struct TrainConfig {
    LossWeights weights;
    RangeSet ranges;
    AdamConfig adam;
    int iterations = 1000;
    int batch_size = 1;
    std::uint64_t seed = 0;       ///< sample order
    int validate_every = 50;      ///< 0 disables periodic validation (final one still runs)
    SegmentConfig segment;
    bool record_wall_time = false;
};

struct TrainLogRow {
    int iteration = 0;
    LossComponents components;
    double discriminative = 0.0;
    double total = 0.0;
    double wall_time = -1.0; ///< seconds since start, < 0 when not recorded
};

struct ValidationPoint {
    int iteration = 0; ///< number of optimizer steps taken
    double sbd = 0.0;
};

struct TrainResult {
    NetworkParams final_params;
    NetworkParams best_params;
    int best_iteration = 0;
    double best_validation_sbd = -1.0;
    std::vector<TrainLogRow> log;
    std::vector<ValidationPoint> validation;
};

/// Mean symmetric best Dice of segment(predicted affinity) against the labels.
double evaluate_sbd(const NetworkParams& params, std::span<const TrainingSample> samples, const RangeSet& ranges,
                    const SegmentConfig& segment);

/// Embedding -> predicted affinity -> segmentation for one input.
Segmentation predict_segmentation(const NetworkParams& params, const Tensor3& input, const RangeSet& ranges,
                                  const SegmentConfig& segment);

using TrainCallback = std::function<void(const TrainLogRow&)>;

/// Mini-batch Adam over `train`. Each iteration logs the batch-mean loss at
/// the current parameters, then steps. Batches walk a seeded permutation of
/// the training set. The best checkpoint is the one with the highest mean
/// validation SBD (earliest on ties); without validation data it is the
/// final one. Throws DivergenceError on a non-finite loss.
TrainResult train(const NetworkParams& initial, std::span<const TrainingSample> train_set,
                  std::span<const TrainingSample> validation_set, const TrainConfig& config,
                  const TrainCallback& on_iteration = {});

void write_train_log_header(std::ostream& os);
void write_train_log_row(std::ostream& os, const TrainLogRow& row);

} // namespace stde
