#include "stde/adam.hpp"

#include <cmath>

#include "stde/error.hpp"

namespace stde {

void AdamConfig::validate() const {
    if (!(learning_rate >= 0.0)) {
        throw InvalidArgument("Adam: learning rate must be non-negative");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw InvalidArgument("Adam: betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) {
        throw InvalidArgument("Adam: epsilon must be positive");
    }
}

AdamState AdamState::zeros_like(const NetworkParams& params) {
    AdamState s;
    for (const auto& t : params.tensors) {
        s.m.emplace_back(t.values.size(), 0.0);
        s.v.emplace_back(t.values.size(), 0.0);
    }
    return s;
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::int64_t step, const AdamConfig& cfg) {
    if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
        throw InvalidArgument("Adam: parameter, gradient and moment sizes differ");
    }
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        param[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state, const AdamConfig& cfg) {
    cfg.validate();
    if (grads.tensors.size() != params.tensors.size()) {
        throw InvalidArgument("Adam: gradient tensor count differs from parameters");
    }
    if (state.m.empty() && state.step == 0) {
        state = AdamState::zeros_like(params);
    }
    if (state.m.size() != params.tensors.size() || state.v.size() != params.tensors.size()) {
        throw InvalidArgument("Adam: state does not match parameters");
    }
    for (std::size_t t = 0; t < grads.tensors.size(); ++t) {
        if (grads.tensors[t].values.size() != params.tensors[t].values.size()) {
            throw InvalidArgument("Adam: gradient shape mismatch for " + params.tensors[t].name);
        }
        for (double g : grads.tensors[t].values) {
            if (!std::isfinite(g)) {
                throw DivergenceError("non-finite gradient in " + params.tensors[t].name);
            }
        }
    }
    ++state.step;
    for (std::size_t t = 0; t < params.tensors.size(); ++t) {
        adam_update(params.tensors[t].values, grads.tensors[t].values, state.m[t], state.v[t], state.step, cfg);
    }
}

NetworkParams adam_replay(const NetworkParams& params, std::span<const NetworkParams> grads, const AdamConfig& cfg,
                          AdamState* final_state) {
    NetworkParams p = params;
    AdamState s = AdamState::zeros_like(params);
    for (const auto& g : grads) {
        adam_step(p, g, s, cfg);
    }
    if (final_state != nullptr) {
        *final_state = std::move(s);
    }
    return p;
}

} // namespace stde
