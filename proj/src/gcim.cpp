// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include "metaconcept/gcim.hpp"

#include <string>

#include "metaconcept/error.hpp"
#include "metaconcept/rng.hpp"

namespace metaconcept {

std::size_t GcimConfig::embed_dim(std::size_t semantic_dim) const {
    return hop_widths.empty() ? semantic_dim : hop_widths.back();
}

void GcimConfig::validate(std::size_t semantic_dim) const {
    if (semantic_dim == 0) throw ConfigError("gcim: semantic dimension must be positive");
    for (auto w : hop_widths)
        if (w == 0) throw ConfigError("gcim.hop_widths entries must be positive");
    if (relation_widths.empty()) throw ConfigError("gcim.relation_widths must name at least one layer");
    for (auto w : relation_widths)
        if (w == 0) throw ConfigError("gcim.relation_widths entries must be positive");
    if (relation_widths.back() != embed_dim(semantic_dim)) {
        throw ConfigError("gcim: last relation width " + std::to_string(relation_widths.back()) +
                          " must equal the graph embedding width " + std::to_string(embed_dim(semantic_dim)));
    }
    if (!(beta >= 0.0)) throw ConfigError("gcim.beta must be non-negative");
    if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ConfigError("gcim.keep_prob must lie in (0, 1]");
    if (!(norm_eps > 0.0)) throw ConfigError("gcim.norm_eps must be positive");
}

GraphContext make_graph_context(const ConceptGraph& graph, const GcimConfig& cfg) {
    GraphContext ctx;
    ctx.propagation = Var::constant(propagation_operator(graph, cfg.self_loops));
    ctx.semantics = Var::constant(cfg.semantics == SemanticsMode::one_hot ? Tensor::identity(graph.size())
                                                                          : graph.semantics());
    return ctx;
}

std::size_t gcim_input_dim(const ConceptGraph& graph, const GcimConfig& cfg) {
    return cfg.semantics == SemanticsMode::one_hot ? graph.size() : graph.semantic_dim();
}

GcimParams init_gcim(const GcimConfig& cfg, std::size_t semantic_dim, std::size_t feature_dim, Rng& rng) {
    cfg.validate(semantic_dim);
    GcimParams p;
    std::size_t in = semantic_dim;
    for (auto w : cfg.hop_widths) {
        p.embed.push_back(init_affine(in, w, rng));
        in = w;
    }
    const std::size_t d_ge = in;
    std::size_t rin = 2 * d_ge;
    for (auto w : cfg.relation_widths) {
        p.relation.push_back(init_affine(rin, w, rng));
        rin = w;
    }
    p.output = init_affine(d_ge, feature_dim + 1, rng);
    return p;
}

std::vector<Var> gcim_parameters(const GcimParams& params) {
    std::vector<Var> out = stack_parameters(params.embed);
    for (auto& v : stack_parameters(params.relation)) out.push_back(v);
    out.push_back(params.output.weight);
    out.push_back(params.output.bias);
    return out;
}

void validate_class_ids(std::span<const std::size_t> ids, std::size_t num_nodes) {
    if (ids.empty()) throw SelectionError("empty class selection");
    std::vector<bool> used(num_nodes, false);
    for (auto id : ids) {
        if (id >= num_nodes) {
            throw SelectionError("class id " + std::to_string(id) + " out of range for " +
                                 std::to_string(num_nodes) + " nodes");
        }
        if (used[id]) throw SelectionError("class id " + std::to_string(id) + " selected twice");
        used[id] = true;
    }
}

namespace {

void require_rng(Rng* rng, bool training, double keep_prob) {
    if (training && keep_prob < 1.0 && rng == nullptr) throw ConfigError("gcim: training-mode dropout needs an Rng");
}

Var layer_forward(const Var& x, const AffineLayer& layer, const GcimConfig& cfg, Rng* rng, bool training) {
    if (x.cols() != layer.weight.rows()) {
        throw ConfigError("gcim: layer expects " + std::to_string(layer.weight.rows()) + " inputs, got " +
                          std::to_string(x.cols()));
    }
    Var h = activate(add_row_bias(matmul(x, layer.weight), layer.bias), cfg.activation, cfg.slope);
    if (training && cfg.keep_prob < 1.0) h = dropout(h, cfg.keep_prob, *rng, true);
    return h;
}

TaskClassifier split_classifier(const Var& output_rows, const GcimConfig& cfg, std::size_t feature_dim) {
    Var u = scale(l2_normalize_rows(output_rows, cfg.norm_eps), cfg.beta);
    return {slice_cols(u, 0, feature_dim), transpose(slice_cols(u, feature_dim, feature_dim + 1))};
}

void require_output_width(const AffineLayer& output, std::size_t feature_dim) {
    if (output.weight.cols() != feature_dim + 1) {
        throw ConfigError("gcim: output width " + std::to_string(output.weight.cols()) +
                          " must be feature_dim + 1 = " + std::to_string(feature_dim + 1));
    }
}

}  // namespace

Var graph_embed(const GraphContext& ctx, const LayerStack& hops, const GcimConfig& cfg, Rng* rng, bool training) {
    require_rng(rng, training, cfg.keep_prob);
    Var z = ctx.semantics;
    for (const auto& hop : hops) {
        if (z.cols() != hop.weight.rows()) {
            throw ConfigError("gcim: semantics width " + std::to_string(z.cols()) + " does not match hop input " +
                              std::to_string(hop.weight.rows()));
        }
        z = layer_forward(matmul(ctx.propagation, z), hop, cfg, rng, training);
    }
    return z;
}

Var relation_messages(const Var& z_task, const LayerStack& relation, const GcimConfig& cfg, Rng* rng,
                      bool training) {
    require_rng(rng, training, cfg.keep_prob);
    const std::size_t n = z_task.rows();
    std::vector<std::size_t> left, right;
    left.reserve(n * n);
    right.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            left.push_back(i);
            right.push_back(j);
        }
    }
    Var h = concat_cols(gather_rows(z_task, left), gather_rows(z_task, right));
    for (const auto& layer : relation) h = layer_forward(h, layer, cfg, rng, training);
    if (h.cols() != z_task.cols()) {
        throw ConfigError("gcim: relation output width " + std::to_string(h.cols()) +
                          " differs from the embedding width " + std::to_string(z_task.cols()));
    }
    // Row i of the averaging matrix picks pairs (i, 0..n-1) with weight 1/n.
    Tensor avg({n, n * n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) avg(i, i * n + j) = 1.0 / static_cast<double>(n);
    return matmul(Var::constant(std::move(avg)), h);
}

Var relation_refine(const Var& z_task, const LayerStack& relation, const GcimConfig& cfg, Rng* rng, bool training) {
    return add(z_task, relation_messages(z_task, relation, cfg, rng, training));
}

TaskClassifier emit_classifier(const GraphContext& ctx, const Var& z_context, const AffineLayer& output,
                               const GcimConfig& cfg, std::span<const std::size_t> class_ids,
                               std::size_t feature_dim) {
    require_output_width(output, feature_dim);
    validate_class_ids(class_ids, ctx.size());
    // Rows of P Z for the task classes only; the normalization is row-wise, so
    // selecting before the output layer gives the same rows as selecting after.
    Var propagated = matmul(gather_rows(ctx.propagation, class_ids), z_context);
    return split_classifier(add_row_bias(matmul(propagated, output.weight), output.bias), cfg, feature_dim);
}

TaskClassifier infer_classifier(const GraphContext& ctx, const GcimParams& params, const GcimConfig& cfg,
                                std::span<const std::size_t> class_ids, std::size_t feature_dim, Rng* rng,
                                bool training) {
    require_output_width(params.output, feature_dim);
    validate_class_ids(class_ids, ctx.size());
    Var z = graph_embed(ctx, params.embed, cfg, rng, training);
    Var z_task = gather_rows(z, class_ids);
    Var messages = relation_messages(z_task, params.relation, cfg, rng, training);
    if (cfg.placement == RefinePlacement::task_rows) {
        Var refined = add(z_task, messages);
        return split_classifier(add_row_bias(matmul(refined, params.output.weight), params.output.bias), cfg,
                                feature_dim);
    }
    Var z_context = add(z, scatter_rows(messages, class_ids, ctx.size()));
    return emit_classifier(ctx, z_context, params.output, cfg, class_ids, feature_dim);
}

}  // namespace metaconcept
