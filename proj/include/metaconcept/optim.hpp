// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "metaconcept/autodiff.hpp"
#include "metaconcept/tensor.hpp"

namespace metaconcept {

struct SgdOptions {
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
};

/// Momentum buffers, one per parameter, persisting across steps.
struct SgdState {
    std::vector<Tensor> velocity;
};

// v <- momentum * v + (grad + weight_decay * param); param <- param - lr * v
void sgd_update(Tensor& param, const Tensor& grad, Tensor& velocity, const SgdOptions& opts);

/// Applies sgd_update to every parameter using its accumulated grad(); a
/// parameter without a grad is treated as having a zero gradient. Velocity
/// buffers are created on first use.
void sgd_step(std::span<Var> params, SgdState& state, const SgdOptions& opts);

/// lr * decay^(floor(iteration / period)); period 0 disables decay.
double step_decay_lr(double base_lr, double decay, std::size_t period, std::size_t iteration);

}  // namespace metaconcept
