#include "stde/train.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "stde/error.hpp"
#include "stde/kernels.hpp"
#include "stde/metrics.hpp"

namespace stde {

namespace {

void scale_values(std::vector<double>& v, double s) {
    for (double& x : v) {
        x *= s;
    }
}

void add_into(NetworkParams& dst, const NetworkParams& src) {
    for (std::size_t t = 0; t < dst.tensors.size(); ++t) {
        auto& d = dst.tensors[t].values;
        const auto& s = src.tensors[t].values;
        for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] += s[i];
        }
    }
}

struct Forward {
    EmbeddingPyramid pyramid;
    AffinityTensor pred;
    std::vector<AffinityTensor> scale_preds;
};

void check_sample(const TrainingSample& s, const NetworkParams& params) {
    if (s.scale_targets.size() != static_cast<std::size_t>(params.config.scales()) ||
        s.scale_weights.size() != s.scale_targets.size()) {
        throw DataError("training sample has " + std::to_string(s.scale_targets.size()) +
                        " pyramid targets, network has " + std::to_string(params.config.scales()) + " scales");
    }
}

SampleLoss combine(const LossComponents& c, const LossWeights& w) {
    SampleLoss out;
    out.components = c;
    out.total = loss_total(c, w);
    return out;
}

} // namespace

TrainingSample make_sample(const Tensor3& input, const LabelMap& labels, const NetworkConfig& config,
                           const RangeSet& ranges, bool balanced_mse) {
    if (input.channels() != 3 || input.height() != labels.height() || input.width() != labels.width()) {
        throw DataError("sample shape mismatch: input " + std::to_string(input.channels()) + "x" +
                        std::to_string(input.height()) + "x" + std::to_string(input.width()) + ", labels " +
                        std::to_string(labels.height()) + "x" + std::to_string(labels.width()));
    }
    const int m = config.size_multiple();
    if (input.height() % m != 0 || input.width() % m != 0) {
        throw DataError("training samples must be multiples of " + std::to_string(m) + " in both dimensions, got " +
                        std::to_string(input.height()) + "x" + std::to_string(input.width()));
    }
    TrainingSample s;
    s.input = input;
    s.labels = labels;
    s.target = encode_affinity(labels, ranges);
    s.weights = affinity_weights(s.target, balanced_mse);
    for (int k = 0; k < config.scales(); ++k) {
        const LabelMap down = downsample_labels(labels, 2 << k);
        s.scale_targets.push_back(encode_affinity(down, ranges));
        s.scale_weights.push_back(affinity_weights(s.scale_targets.back(), balanced_mse));
    }
    return s;
}

SampleLoss sample_loss(const NetworkParams& params, const TrainingSample& sample, const RangeSet& ranges,
                       const LossWeights& weights) {
    check_sample(sample, params);
    const EmbeddingPyramid pyr = forward(sample.input, params);
    LossComponents c;
    c.st = loss_st(predicted_affinity(pyr.full, ranges), sample.target, sample.weights);
    for (std::size_t k = 0; k < pyr.scales.size(); ++k) {
        c.pyramid += loss_st(predicted_affinity(pyr.scales[k], ranges), sample.scale_targets[k], sample.scale_weights[k]);
    }
    const InstanceStats stats = instance_stats(pyr.full, sample.labels);
    c.concentration = loss_concentration(pyr.full, sample.labels, stats);
    c.discrepancy = loss_discrepancy(stats);
    return combine(c, weights);
}

SampleLoss sample_gradient(const NetworkParams& params, const TrainingSample& sample, const RangeSet& ranges,
                           const LossWeights& weights, NetworkParams& grad) {
    check_sample(sample, params);
    ForwardCache cache;
    const EmbeddingPyramid pyr = forward(sample.input, params, &cache);
    LossComponents c;
    PyramidGrad pg;

    const AffinityTensor pred = predicted_affinity(pyr.full, ranges);
    AffinityTensor g(pred.height(), pred.width(), ranges);
    c.st = loss_st_backward(pred, sample.target, sample.weights, g);
    scale_values(g.values(), weights.alpha);
    pg.full = kernels::pairwise_cosine_backward(pyr.full, g);

    const DiscriminativeLoss dis = discriminative_loss_backward(pyr.full, sample.labels, weights.delta, weights.tau);
    c.concentration = dis.concentration;
    c.discrepancy = dis.discrepancy;
    for (std::size_t i = 0; i < pg.full.size(); ++i) {
        pg.full.data()[i] += weights.gamma * dis.grad.data()[i];
    }

    for (std::size_t k = 0; k < pyr.scales.size(); ++k) {
        const AffinityTensor pk = predicted_affinity(pyr.scales[k], ranges);
        AffinityTensor gk(pk.height(), pk.width(), ranges);
        c.pyramid += loss_st_backward(pk, sample.scale_targets[k], sample.scale_weights[k], gk);
        scale_values(gk.values(), weights.beta);
        pg.scales.push_back(kernels::pairwise_cosine_backward(pyr.scales[k], gk));
    }
    grad = backward(cache, params, pg);
    return combine(c, weights);
}

Segmentation predict_segmentation(const NetworkParams& params, const Tensor3& input, const RangeSet& ranges,
                                  const SegmentConfig& segment_config) {
    const EmbeddingPyramid pyr = forward(input, params);
    return segment(predicted_affinity(pyr.full, ranges), segment_config);
}

double evaluate_sbd(const NetworkParams& params, std::span<const TrainingSample> samples, const RangeSet& ranges,
                    const SegmentConfig& segment_config) {
    if (samples.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& s : samples) {
        sum += sbd(predict_segmentation(params, s.input, ranges, segment_config).labels, s.labels);
    }
    return sum / static_cast<double>(samples.size());
}

TrainResult train(const NetworkParams& initial, std::span<const TrainingSample> train_set,
                  std::span<const TrainingSample> validation_set, const TrainConfig& config,
                  const TrainCallback& on_iteration) {
    if (train_set.empty()) {
        throw DataError("training set is empty");
    }
    if (config.iterations < 0) {
        throw InvalidArgument("iteration count must be non-negative");
    }
    if (config.batch_size < 1 || static_cast<std::size_t>(config.batch_size) > train_set.size()) {
        throw InvalidArgument("batch size must lie in [1, " + std::to_string(train_set.size()) + "]");
    }
    if (config.validate_every < 0) {
        throw InvalidArgument("validate_every must be non-negative");
    }
    config.adam.validate();

    const auto start = std::chrono::steady_clock::now();
    TrainResult result;
    NetworkParams params = initial;
    AdamState state = AdamState::zeros_like(params);

    auto validate = [&](int step) {
        if (validation_set.empty()) {
            return;
        }
        const double s = evaluate_sbd(params, validation_set, config.ranges, config.segment);
        result.validation.push_back({step, s});
        if (s > result.best_validation_sbd) {
            result.best_validation_sbd = s;
            result.best_params = params;
            result.best_iteration = step;
        }
    };

    // Fisher-Yates over a seeded 64-bit stream so the order is library independent.
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::size_t cursor = order.size();
    auto next_index = [&]() {
        if (cursor == order.size()) {
            for (std::size_t i = 0; i < order.size(); ++i) {
                order[i] = i;
            }
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[rng() % i]);
            }
            cursor = 0;
        }
        return order[cursor++];
    };

    validate(0);
    for (int it = 1; it <= config.iterations; ++it) {
        NetworkParams batch_grad = params.zeros_like();
        LossComponents mean;
        double total = 0.0;
        for (int b = 0; b < config.batch_size; ++b) {
            NetworkParams g;
            const SampleLoss l = sample_gradient(params, train_set[next_index()], config.ranges, config.weights, g);
            add_into(batch_grad, g);
            mean.st += l.components.st;
            mean.pyramid += l.components.pyramid;
            mean.concentration += l.components.concentration;
            mean.discrepancy += l.components.discrepancy;
            total += l.total;
        }
        const double inv = 1.0 / config.batch_size;
        for (auto& t : batch_grad.tensors) {
            scale_values(t.values, inv);
        }
        TrainLogRow row;
        row.iteration = it;
        row.components = {mean.st * inv, mean.pyramid * inv, mean.concentration * inv, mean.discrepancy * inv};
        row.discriminative = loss_discriminative(row.components, config.weights);
        row.total = total * inv;
        if (!std::isfinite(row.total)) {
            throw DivergenceError("non-finite loss at iteration " + std::to_string(it));
        }
        adam_step(params, batch_grad, state, config.adam);
        if (config.record_wall_time) {
            row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
        result.log.push_back(row);
        if (on_iteration) {
            on_iteration(row);
        }
        if ((config.validate_every > 0 && it % config.validate_every == 0) || it == config.iterations) {
            if (result.validation.empty() || result.validation.back().iteration != it) {
                validate(it);
            }
        }
    }
    result.final_params = params;
    if (validation_set.empty()) {
        result.best_params = params;
        result.best_iteration = config.iterations;
    }
    return result;
}

void write_train_log_header(std::ostream& os) { os << "iter,L_ST,L_d,L_con,L_diff,L_dis,L_total,wall_time_s\n"; }

void write_train_log_row(std::ostream& os, const TrainLogRow& row) {
    std::ostringstream line;
    line << std::setprecision(17) << row.iteration << ',' << row.components.st << ',' << row.components.pyramid << ','
         << row.components.concentration << ',' << row.components.discrepancy << ',' << row.discriminative << ','
         << row.total << ',';
    if (row.wall_time >= 0.0) {
        line << std::setprecision(6) << row.wall_time;
    } else {
        line << "NA";
    }
    os << line.str() << '\n';
}

} // namespace stde
