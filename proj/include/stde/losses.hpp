#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stde/affinity.hpp"
#include "stde/image.hpp"
#include "stde/tensor.hpp"

namespace stde {

/// Balancing coefficients: total = alpha*L_ST + beta*L_d + gamma*(delta*L_con + tau*L_diff).
struct LossWeights {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double delta = 1.0;
    double tau = 1.0;
    /// Class-balanced affinity MSE; false gives plain MSE over in-bounds entries.
    bool balanced_mse = true;
};

/// S(a, b) = (1 + cos(a, b)) / 2. Either vector below the zero-norm
/// tolerance gives 0.5.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Adds scale * dS/da to `grad_a` and scale * dS/db to `grad_b`. No-op at zero norm.
void cosine_similarity_backward(std::span<const double> a, std::span<const double> b, double scale,
                                std::span<double> grad_a, std::span<double> grad_b);

/// Per-entry MSE weights for a ground-truth tensor. Out-of-bounds entries get 0.
/// Balanced: positives weigh #neg/#total and negatives #pos/#total.
AffinityTensor affinity_weights(const AffinityTensor& target, bool balanced);

/// sum w (pred - target)^2 / sum w; 0 when all weights vanish.
double loss_st(const AffinityTensor& pred, const AffinityTensor& target, const AffinityTensor& weights);

/// loss_st and its gradient with respect to `pred`.
double loss_st_backward(const AffinityTensor& pred, const AffinityTensor& target, const AffinityTensor& weights,
                        AffinityTensor& grad_pred);

/// Sum over pyramid scales of the per-scale loss_st.
double loss_pyramid(std::span<const AffinityTensor> preds, std::span<const AffinityTensor> targets,
                    std::span<const AffinityTensor> weights);

/// Instance statistics of the non-background labels of a map.
struct InstanceStats {
    std::vector<std::int32_t> labels;            ///< instance label per index, ascending
    std::vector<std::int64_t> counts;            ///< K_m
    std::vector<std::vector<double>> means;      ///< unnormalised mean embedding
    std::vector<std::vector<double>> unit_means; ///< mu_m (zero vector if the mean has zero norm)
    std::vector<std::pair<int, int>> columns;    ///< inclusive column extent
    std::vector<std::vector<int>> neighbors;     ///< N_d(m): indices whose column extents overlap

    std::size_t size() const { return labels.size(); }
    /// Index of `label`, or -1 for background / unknown labels.
    int index_of(std::int32_t label) const;
};

InstanceStats instance_stats(const Tensor3& embedding, const LabelMap& labels);

/// (1 / sum K_m) * sum_m sum_{p in m} (1 - S(e_p, mu_m)).
double loss_concentration(const Tensor3& embedding, const LabelMap& labels, const InstanceStats& stats);

/// (1/M) * sum_m (1/|N_d(m)|) * sum_{n in N_d(m)} S(mu_n, mu_m); empty N_d(m) contributes 0.
double loss_discrepancy(const InstanceStats& stats);

struct DiscriminativeLoss {
    double concentration = 0.0;
    double discrepancy = 0.0;
    Tensor3 grad; ///< d(delta*L_con + tau*L_diff)/dE
};

DiscriminativeLoss discriminative_loss_backward(const Tensor3& embedding, const LabelMap& labels, double delta,
                                                double tau);

struct LossComponents {
    double st = 0.0;
    double pyramid = 0.0;
    double concentration = 0.0;
    double discrepancy = 0.0;
};

double loss_discriminative(const LossComponents& c, const LossWeights& w);
double loss_total(const LossComponents& c, const LossWeights& w);

} // namespace stde
