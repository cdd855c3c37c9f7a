// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0
//
// Graph convolutional inference: turns the concept graph and a task's class
// node ids into the task's initial linear classifier.
//
//   graph_embed      Z^{h+1} = act(P Z^h W^h + b^h), dropout after each hop
//   relation_refine  Z_i += mean_j MLP([Z_i | Z_j]) over all ordered pairs
//   emit_classifier  U = beta * normalize_rows(P Z W_o + b_o), rows of the
//                    task classes split into (weight row, bias)

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "metaconcept/autodiff.hpp"
#include "metaconcept/encoder.hpp"
#include "metaconcept/graph.hpp"

namespace metaconcept {

class Rng;

enum class SemanticsMode { embeddings, one_hot };
enum class RefinePlacement {
    write_back,  ///< refined task rows replace their rows before the output convolution
    task_rows,   ///< output layer applied to the refined task rows directly, no final propagation
};

struct GcimConfig {
    std::vector<std::size_t> hop_widths{64, 32};
    /// Relation MLP widths; the last must equal the graph-embedding width.
    std::vector<std::size_t> relation_widths{64, 32};
    double beta = 0.2;
    double keep_prob = 0.9;
    Activation activation = Activation::leaky_relu;
    double slope = 0.1;
    SemanticsMode semantics = SemanticsMode::embeddings;
    RefinePlacement placement = RefinePlacement::write_back;
    bool self_loops = true;
    double norm_eps = 1e-12;

    /// Width of the graph embedding given the semantic input width.
    std::size_t embed_dim(std::size_t semantic_dim) const;
    void validate(std::size_t semantic_dim) const;
};

struct GcimParams {
    LayerStack embed;     ///< one affine layer per hop
    LayerStack relation;  ///< relation MLP
    AffineLayer output;   ///< d_ge x (d_feat + 1)
};

/// Row i is the classifier for the i-th class of the episode's class list.
struct TaskClassifier {
    Var weight;  ///< N x d_feat
    Var bias;    ///< 1 x N
};

/// Constant graph inputs: propagation operator and the input semantics
/// (the identity in one-hot mode).
struct GraphContext {
    Var propagation;
    Var semantics;
    std::size_t size() const { return propagation.rows(); }
};

GraphContext make_graph_context(const ConceptGraph& graph, const GcimConfig& cfg);

/// Semantic input width seen by the first hop for `graph` under `cfg`.
std::size_t gcim_input_dim(const ConceptGraph& graph, const GcimConfig& cfg);

GcimParams init_gcim(const GcimConfig& cfg, std::size_t semantic_dim, std::size_t feature_dim, Rng& rng);
std::vector<Var> gcim_parameters(const GcimParams& params);

/// Throws SelectionError on duplicate or out-of-range ids.
void validate_class_ids(std::span<const std::size_t> ids, std::size_t num_nodes);

/// M x d_ge node representations. `rng` may be null when !training.
Var graph_embed(const GraphContext& ctx, const LayerStack& hops, const GcimConfig& cfg, Rng* rng, bool training);

/// mean_j MLP([Z_i | Z_j]) for every task row i (N x d_ge).
Var relation_messages(const Var& z_task, const LayerStack& relation, const GcimConfig& cfg, Rng* rng, bool training);
/// z_task + relation_messages(z_task).
Var relation_refine(const Var& z_task, const LayerStack& relation, const GcimConfig& cfg, Rng* rng, bool training);

/// Output convolution over the full M-row context, then selection of the
/// task rows. Throws ConfigError when the output width is not feature_dim + 1.
TaskClassifier emit_classifier(const GraphContext& ctx, const Var& z_context, const AffineLayer& output,
                               const GcimConfig& cfg, std::span<const std::size_t> class_ids,
                               std::size_t feature_dim);

/// Full pipeline: embed, refine the task rows, emit.
TaskClassifier infer_classifier(const GraphContext& ctx, const GcimParams& params, const GcimConfig& cfg,
                                std::span<const std::size_t> class_ids, std::size_t feature_dim, Rng* rng,
                                bool training);

}  // namespace metaconcept
