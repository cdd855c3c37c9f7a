// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include "metaconcept/optim.hpp"

#include <cmath>
#include <string>

#include "metaconcept/error.hpp"

namespace metaconcept {

void sgd_update(Tensor& param, const Tensor& grad, Tensor& velocity, const SgdOptions& opts) {
    if (!(opts.lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
    if (!param.same_shape(grad) || !param.same_shape(velocity)) {
        throw DimensionError("sgd_update: parameter " + shape_string(param.shape()) + ", gradient " +
                             shape_string(grad.shape()) + ", velocity " + shape_string(velocity.shape()));
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
        velocity[i] = opts.momentum * velocity[i] + (grad[i] + opts.weight_decay * param[i]);
        param[i] -= opts.lr * velocity[i];
    }
    require_finite(param, "sgd_update");
}

void sgd_step(std::span<Var> params, SgdState& state, const SgdOptions& opts) {
    if (state.velocity.empty()) {
        state.velocity.reserve(params.size());
        for (const auto& p : params) state.velocity.emplace_back(p.shape());
    }
    if (state.velocity.size() != params.size()) {
        throw DimensionError("sgd_step: " + std::to_string(params.size()) + " parameters but " +
                             std::to_string(state.velocity.size()) + " velocity buffers");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Var& p = params[i];
        const Tensor grad = p.grad() ? *p.grad() : Tensor(p.shape());
        sgd_update(p.mutable_value(), grad, state.velocity[i], opts);
    }
}

double step_decay_lr(double base_lr, double decay, std::size_t period, std::size_t iteration) {
    if (period == 0) return base_lr;
    return base_lr * std::pow(decay, static_cast<double>(iteration / period));
}

}  // namespace metaconcept
