#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stde/network.hpp"

namespace stde {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

/// First/second moments shaped like the parameter tensors.
struct AdamState {
    std::int64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    static AdamState zeros_like(const NetworkParams& params);
};

/// Bias-corrected Adam on flat arrays; `step` is the 1-based step number.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::int64_t step, const AdamConfig& config);

/// One optimizer step over every tensor. Throws DivergenceError on a
/// non-finite gradient (parameters and state are left untouched).
void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state, const AdamConfig& config);

/// Applies `grads` in sequence from a fresh state.
NetworkParams adam_replay(const NetworkParams& params, std::span<const NetworkParams> grads, const AdamConfig& config,
                          AdamState* final_state = nullptr);

} // namespace stde
