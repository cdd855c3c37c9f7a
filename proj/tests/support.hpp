// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0
//
// Shared test helpers: random tensors, central finite differences, the
// catalog of differentiable ops, and small hand-built hierarchies.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "metaconcept/autodiff.hpp"
#include "metaconcept/graph.hpp"
#include "metaconcept/meta.hpp"
#include "metaconcept/rng.hpp"
#include "metaconcept/synthetic.hpp"
#include "metaconcept/tensor.hpp"

namespace mctest {

using namespace metaconcept;

inline Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t({rows, cols});
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

/// Inputs are moved away from zero so kinked ops are not probed at a kink.
inline Tensor random_away_from_zero(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor t({rows, cols});
    for (auto& v : t.data()) {
        const double m = rng.uniform(0.1, 1.0);
        v = rng.bernoulli(0.5) ? m : -m;
    }
    return t;
}

using ScalarFn = std::function<Var(const std::vector<Var>&)>;

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over every
/// input entry. `f` must return a 1x1 value.
inline double fd_max_rel_error(const ScalarFn& f, const std::vector<Tensor>& inputs, double h = 1e-5,
                               double floor = 1e-3) {
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(Var::parameter(t));
    const auto analytic = grad(f(vars), vars);

    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            auto eval_at = [&](double delta) {
                std::vector<Var> shifted;
                for (std::size_t j = 0; j < inputs.size(); ++j) {
                    Tensor t = inputs[j];
                    if (j == k) t[i] += delta;
                    shifted.push_back(Var::parameter(std::move(t)));
                }
                return f(shifted).value().item();
            };
            const double numeric = (eval_at(h) - eval_at(-h)) / (2.0 * h);
            const double a = analytic[k].value()[i];
            const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

/// sum(out * weights) for a fixed random weighting, so every output entry
/// contributes to the checked gradient.
inline Var weighted_sum(const Var& out, const Tensor& weights) { return sum_all(mul(out, Var::constant(weights))); }

struct OpCase {
    std::string name;
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    std::function<Var(const std::vector<Var>&)> fn;
    bool positive = false;  ///< inputs drawn from [0.5, 2]
};

inline std::vector<OpCase> op_catalog() {
    static const std::vector<std::size_t> rows3 = {2, 0, 2, 1};
    static const int labels[3] = {1, 0, 3};
    return {
        {"add", {{3, 4}, {3, 4}}, [](const auto& v) { return add(v[0], v[1]); }},
        {"sub", {{3, 4}, {3, 4}}, [](const auto& v) { return sub(v[0], v[1]); }},
        {"mul", {{3, 4}, {3, 4}}, [](const auto& v) { return mul(v[0], v[1]); }},
        {"div", {{3, 4}, {3, 4}}, [](const auto& v) { return div(v[0], v[1]); }, true},
        {"neg", {{3, 4}}, [](const auto& v) { return neg(v[0]); }},
        {"scale", {{3, 4}}, [](const auto& v) { return scale(v[0], -1.7); }},
        {"exp", {{3, 4}}, [](const auto& v) { return exp(v[0]); }},
        {"log", {{3, 4}}, [](const auto& v) { return log(v[0]); }, true},
        {"matmul", {{3, 4}, {4, 2}}, [](const auto& v) { return matmul(v[0], v[1]); }},
        {"transpose", {{3, 4}}, [](const auto& v) { return transpose(v[0]); }},
        {"broadcast_rows", {{1, 4}}, [](const auto& v) { return broadcast_rows(v[0], 3); }},
        {"broadcast_cols", {{3, 1}}, [](const auto& v) { return broadcast_cols(v[0], 4); }},
        {"sum_rows", {{3, 4}}, [](const auto& v) { return sum_rows(v[0]); }},
        {"sum_cols", {{3, 4}}, [](const auto& v) { return sum_cols(v[0]); }},
        {"sum_all", {{3, 4}}, [](const auto& v) { return sum_all(v[0]); }},
        {"mean_rows", {{3, 4}}, [](const auto& v) { return mean_rows(v[0]); }},
        {"add_row_bias", {{3, 4}, {1, 4}}, [](const auto& v) { return add_row_bias(v[0], v[1]); }},
        {"relu", {{3, 4}}, [](const auto& v) { return relu(v[0]); }},
        {"leaky_relu", {{3, 4}}, [](const auto& v) { return leaky_relu(v[0], 0.1); }},
        {"identity", {{3, 4}}, [](const auto& v) { return identity(v[0]); }},
        {"gather_rows", {{3, 4}}, [](const auto& v) { return gather_rows(v[0], rows3); }},
        {"scatter_rows", {{3, 4}}, [](const auto& v) {
             static const std::vector<std::size_t> to = {4, 1, 2};
             return scatter_rows(v[0], to, 6);
         }},
        {"concat_cols", {{3, 4}, {3, 2}}, [](const auto& v) { return concat_cols(v[0], v[1]); }},
        {"concat_rows", {{3, 4}, {2, 4}}, [](const auto& v) { return concat_rows({v[0], v[1]}); }},
        {"stack_rows", {{1, 4}, {1, 4}, {1, 4}}, [](const auto& v) { return stack_rows({v[0], v[1], v[2]}); }},
        {"slice_cols", {{3, 4}}, [](const auto& v) { return slice_cols(v[0], 1, 3); }},
        {"slice_rows", {{3, 4}}, [](const auto& v) { return slice_rows(v[0], 1, 3); }},
        {"pad_cols", {{3, 4}}, [](const auto& v) { return pad_cols(v[0], 2, 7); }},
        {"pad_rows", {{3, 4}}, [](const auto& v) { return pad_rows(v[0], 1, 5); }},
        {"row_norms_clamped", {{3, 4}}, [](const auto& v) { return row_norms_clamped(v[0], 1e-12); }},
        {"l2_normalize_rows", {{3, 4}}, [](const auto& v) { return l2_normalize_rows(v[0], 1e-12); }},
        {"log_softmax_rows", {{3, 4}}, [](const auto& v) { return log_softmax_rows(v[0]); }},
        {"softmax_rows", {{3, 4}}, [](const auto& v) { return softmax_rows(v[0]); }},
        {"softmax_cross_entropy", {{3, 4}}, [](const auto& v) { return softmax_cross_entropy(v[0], labels); }},
        {"dropout", {{3, 4}}, [](const auto& v) {
             Rng mask(7);  // same mask on every call
             return dropout(v[0], 0.8, mask, true);
         }},
        // Composite: the backward rules must themselves be differentiable.
        {"second_order", {{3, 4}}, [](const auto& v) {
             Var y = sum_all(mul(exp(scale(v[0], 0.5)), v[0]));
             return grad(y, {v[0]}, true)[0];
         }},
    };
}

/// Inputs for an op case: random away from zero, or positive for div/log.
inline std::vector<Tensor> op_inputs(const OpCase& op, Rng& rng) {
    std::vector<Tensor> in;
    for (auto [r, c] : op.shapes) in.push_back(op.positive ? random_tensor(r, c, rng, 0.5, 2.0)
                                                           : random_away_from_zero(r, c, rng));
    return in;
}

/// Max relative FD error for one op on one seed.
inline double op_fd_error(const OpCase& op, std::uint64_t seed) {
    Rng rng(seed);
    const auto inputs = op_inputs(op, rng);
    Tensor weights;
    {
        std::vector<Var> probe;
        for (const auto& t : inputs) probe.push_back(Var::parameter(t));
        const Tensor out = op.fn(probe).value();
        weights = random_tensor(out.rows(), out.cols(), rng);
    }
    return fd_max_rel_error([&](const std::vector<Var>& v) { return weighted_sum(op.fn(v), weights); }, inputs);
}

/// Three-level chain 0 - 1 - 2 (root, concept, entity) with 1-D semantics.
inline ConceptGraph chain3(std::vector<double> semantics = {1.0, 2.0, 3.0}) {
    std::vector<NodeRecord> nodes = {{0, "root", 0, false, Split::weak},
                                     {1, "mid", 1, false, Split::weak},
                                     {2, "leaf", 2, true, Split::meta_train}};
    return ConceptGraph(nodes, {{0, 1}, {1, 2}}, Tensor({3, 1}, std::move(semantics)));
}

/// Random leveled forest with at most `max_nodes` nodes: every node below
/// level 0 gets one parent on the level above; the last level holds entities.
inline ConceptGraph random_hierarchy(Rng& rng, std::size_t max_nodes, std::size_t semantic_dim) {
    const int levels = 2 + static_cast<int>(rng.index(3));  // 2..4
    std::vector<std::size_t> per_level(static_cast<std::size_t>(levels), 1);
    std::size_t total = static_cast<std::size_t>(levels);
    while (total < max_nodes && rng.uniform() < 0.85) {
        ++per_level[rng.index(per_level.size())];
        ++total;
    }
    std::vector<NodeRecord> nodes;
    std::vector<Edge> edges;
    std::vector<std::size_t> prev;
    for (int l = 0; l < levels; ++l) {
        std::vector<std::size_t> cur;
        for (std::size_t i = 0; i < per_level[static_cast<std::size_t>(l)]; ++i) {
            const std::size_t id = nodes.size();
            const bool entity = l == levels - 1;
            nodes.push_back({id, "n" + std::to_string(id), l, entity,
                             entity ? (i % 2 ? Split::meta_test : Split::meta_train) : Split::weak});
            if (!prev.empty()) edges.emplace_back(prev[rng.index(prev.size())], id);
            cur.push_back(id);
        }
        prev = std::move(cur);
    }
    return ConceptGraph(std::move(nodes), std::move(edges), random_tensor(total, semantic_dim, rng));
}

/// One propagation hop written as explicit neighbor sums:
/// row i = act(((z_i + sum_{j ~ i} z_j) / (deg_i + 1)) W + b).
inline Tensor brute_force_hop(const ConceptGraph& g, const Tensor& z, const Tensor& w, const Tensor& b,
                              Activation act, double slope) {
    const std::size_t m = g.size(), d = z.cols(), out = w.cols();
    Tensor result({m, out});
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> agg(d, 0.0);
        for (std::size_t k = 0; k < d; ++k) agg[k] = z(i, k);
        for (std::size_t j : g.neighbors(i))
            for (std::size_t k = 0; k < d; ++k) agg[k] += z(j, k);
        const double inv = 1.0 / static_cast<double>(g.neighbors(i).size() + 1);
        for (std::size_t c = 0; c < out; ++c) {
            double s = b(0, c);
            for (std::size_t k = 0; k < d; ++k) s += agg[k] * inv * w(k, c);
            if (act == Activation::relu) s = s > 0 ? s : 0.0;
            if (act == Activation::leaky_relu) s = s > 0 ? s : slope * s;
            result(i, c) = s;
        }
    }
    return result;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// ---------------------------------------------------------------------------
// Small end-to-end models

inline SyntheticConfig tiny_synthetic(std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.branching = {3};
    cfg.levels = 3;
    cfg.input_dim = 4;
    cfg.semantic_dim = 3;
    cfg.samples_per_class = 20;
    cfg.weak_samples_per_class = 20;
    cfg.seed = seed;
    return cfg;
}

inline ModelConfig tiny_model() {
    ModelConfig m;
    m.encoder.input_dim = 4;
    m.encoder.layer_widths = {6, 5, 4};
    m.encoder.low_layers = 1;
    m.gcim.hop_widths = {5, 4};
    m.gcim.relation_widths = {6, 4};
    m.gcim.beta = 0.5;
    return m;
}

/// Same structure as `like`, leaves taken from `vars` in ModelParams::all() order.
inline ModelParams params_from(const ModelParams& like, const std::vector<Var>& vars) {
    ModelParams p = like;
    std::size_t k = 0;
    auto fill = [&](LayerStack& s) {
        for (auto& layer : s) {
            layer.weight = vars[k++];
            layer.bias = vars[k++];
        }
    };
    fill(p.encoder.low);
    fill(p.encoder.high);
    fill(p.gcim.embed);
    fill(p.gcim.relation);
    p.gcim.output.weight = vars[k++];
    p.gcim.output.bias = vars[k++];
    return p;
}

inline std::vector<Tensor> values_of(const std::vector<Var>& vars) {
    std::vector<Tensor> out;
    for (const auto& v : vars) out.push_back(v.value());
    return out;
}

/// FD error of an episode's query loss over every parameter of a freshly
/// initialized tiny model.
inline double episode_loss_fd_error(std::uint64_t seed, const InnerLoopConfig& inner) {
    const SyntheticData data = generate_synthetic(tiny_synthetic(seed));
    const ModelConfig cfg = tiny_model();
    Rng rng(seed);
    const ModelParams init = init_model(cfg, data.graph.semantic_dim(), rng);
    const GraphContext ctx = make_graph_context(data.graph, cfg.gcim);
    const Episode ep = sample_entity_episode(data.graph, data.dataset, Split::meta_train, {3, 2, 3}, rng);
    return fd_max_rel_error(
        [&](const std::vector<Var>& v) {
            return episode_loss(params_from(init, v), cfg, ctx, ep, inner, nullptr, false).loss;
        },
        values_of(init.all()));
}

}  // namespace mctest
