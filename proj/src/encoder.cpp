// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include "metaconcept/encoder.hpp"

#include <cmath>

#include "metaconcept/error.hpp"
#include "metaconcept/rng.hpp"

namespace metaconcept {

std::size_t EncoderConfig::mid_dim() const {
    return low_layers == 0 ? input_dim : layer_widths.at(low_layers - 1);
}

std::size_t EncoderConfig::feature_dim() const {
    return layer_widths.empty() ? input_dim : layer_widths.back();
}

void EncoderConfig::validate() const {
    if (input_dim == 0) throw ConfigError("encoder.input_dim must be positive");
    if (low_layers > layer_widths.size()) {
        throw ConfigError("encoder.low_layers = " + std::to_string(low_layers) + " exceeds the " +
                          std::to_string(layer_widths.size()) + " configured layers");
    }
    for (auto w : layer_widths)
        if (w == 0) throw ConfigError("encoder.layer_widths entries must be positive");
}

AffineLayer init_affine(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w({fan_in, fan_out});
    for (auto& v : w.data()) v = rng.uniform(-a, a);
    return {Var::parameter(std::move(w)), Var::parameter(Tensor({1, fan_out}))};
}

EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    EncoderParams p;
    std::size_t in = cfg.input_dim;
    for (std::size_t i = 0; i < cfg.layer_widths.size(); ++i) {
        auto layer = init_affine(in, cfg.layer_widths[i], rng);
        (i < cfg.low_layers ? p.low : p.high).push_back(std::move(layer));
        in = cfg.layer_widths[i];
    }
    return p;
}

Var forward_stack(const Var& x, const LayerStack& layers, Activation act, double slope) {
    Var h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& layer = layers[i];
        if (h.cols() != layer.weight.rows()) {
            throw DimensionError("layer " + std::to_string(i) + " expects " + std::to_string(layer.weight.rows()) +
                                 " input features, got " + std::to_string(h.cols()));
        }
        h = activate(add_row_bias(matmul(h, layer.weight), layer.bias), act, slope);
    }
    return h;
}

Var embed_low(const Var& x, const EncoderParams& params, const EncoderConfig& cfg) {
    if (x.cols() != cfg.input_dim) {
        throw DimensionError("encoder expects " + std::to_string(cfg.input_dim) + " input features, got " +
                             std::to_string(x.cols()));
    }
    return forward_stack(x, params.low, cfg.activation, cfg.slope);
}

Var embed_high(const Var& z, const LayerStack& high, const EncoderConfig& cfg) {
    return forward_stack(z, high, cfg.activation, cfg.slope);
}

std::vector<Var> stack_parameters(const LayerStack& layers) {
    std::vector<Var> out;
    for (const auto& l : layers) {
        out.push_back(l.weight);
        out.push_back(l.bias);
    }
    return out;
}

LayerStack clone_detached(const LayerStack& layers) {
    LayerStack out;
    for (const auto& l : layers) out.push_back({Var::parameter(l.weight.value()), Var::parameter(l.bias.value())});
    return out;
}

}  // namespace metaconcept
