// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0
//
// Split feature embedding over input feature vectors: a shared low-level
// stack followed by a task-adaptable high-level stack. Each layer is
// affine followed by the configured activation.

#pragma once

#include <cstddef>
#include <vector>

#include "metaconcept/autodiff.hpp"

namespace metaconcept {

class Rng;

struct AffineLayer {
    Var weight;  ///< in x out
    Var bias;    ///< 1 x out
};

using LayerStack = std::vector<AffineLayer>;

struct EncoderConfig {
    std::size_t input_dim = 32;
    std::vector<std::size_t> layer_widths{64, 64, 64, 64};
    std::size_t low_layers = 2;  ///< L; the remaining layers form the high-level stack
    Activation activation = Activation::leaky_relu;
    double slope = 0.1;

    std::size_t total_layers() const noexcept { return layer_widths.size(); }
    std::size_t high_layers() const noexcept { return layer_widths.size() - low_layers; }
    /// Width after the low-level stack (input_dim when L = 0).
    std::size_t mid_dim() const;
    /// Width of the final feature (input_dim when there are no layers).
    std::size_t feature_dim() const;
    /// Throws ConfigError.
    void validate() const;
};

struct EncoderParams {
    LayerStack low;
    LayerStack high;
};

/// Weights uniform in [-a, a], a = sqrt(6 / (fan_in + fan_out)); zero biases.
AffineLayer init_affine(std::size_t fan_in, std::size_t fan_out, Rng& rng);
EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng);

/// act(x W + b) applied layer by layer.
Var forward_stack(const Var& x, const LayerStack& layers, Activation act, double slope);

Var embed_low(const Var& x, const EncoderParams& params, const EncoderConfig& cfg);
Var embed_high(const Var& z, const LayerStack& high, const EncoderConfig& cfg);

std::vector<Var> stack_parameters(const LayerStack& layers);
/// Fresh parameter leaves holding copies of the values.
LayerStack clone_detached(const LayerStack& layers);

}  // namespace metaconcept
