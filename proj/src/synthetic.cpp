// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include "metaconcept/synthetic.hpp"

#include <cmath>
#include <string>

#include "metaconcept/error.hpp"
#include "metaconcept/rng.hpp"

namespace metaconcept {

std::size_t SyntheticConfig::branching_at(int level) const {
    if (branching.size() == 1) return branching[0];
    return branching.at(static_cast<std::size_t>(level));
}

double SyntheticConfig::level_noise_at(int level) const {
    if (level_noise.size() == 1) return level_noise[0];
    return level_noise.at(static_cast<std::size_t>(level));
}

void SyntheticConfig::validate() const {
    if (levels < 2) throw ConfigError("data.levels must be at least 2");
    if (branching.size() != 1 && branching.size() != static_cast<std::size_t>(levels - 1)) {
        throw ConfigError("data.branching needs 1 or " + std::to_string(levels - 1) + " entries");
    }
    for (auto b : branching)
        if (b < 2) throw ConfigError("data.branching entries must be at least 2");
    if (level_noise.size() != 1 && level_noise.size() != static_cast<std::size_t>(levels)) {
        throw ConfigError("data.level_noise needs 1 or " + std::to_string(levels) + " entries");
    }
    for (auto s : level_noise)
        if (!(s >= 0.0)) throw ConfigError("data.level_noise entries must be non-negative");
    if (!(sample_noise >= 0.0) || !(semantic_noise >= 0.0)) throw ConfigError("data noise levels must be non-negative");
    if (input_dim == 0 || semantic_dim == 0) throw ConfigError("data dimensions must be positive");
    if (samples_per_class == 0) throw ConfigError("data.samples_per_class must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("data.train_fraction must lie in (0, 1)");
    if (mix_mode && !(weak_only_fraction > 0.0 && weak_only_fraction < 1.0)) {
        throw ConfigError("data.weak_only_fraction must lie in (0, 1)");
    }
    if (balanced_tree_size(*this) > (1u << 20)) throw ConfigError("data: synthetic tree is too large");
}

std::size_t balanced_tree_size(const SyntheticConfig& cfg) {
    std::size_t total = 1, width = 1;
    for (int l = 0; l + 1 < cfg.levels; ++l) {
        width *= cfg.branching_at(l);
        total += width;
    }
    return total;
}

std::size_t balanced_tree_leaves(const SyntheticConfig& cfg) {
    std::size_t width = 1;
    for (int l = 0; l + 1 < cfg.levels; ++l) width *= cfg.branching_at(l);
    return width;
}

namespace {

double as_float32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    const Rng root(cfg.seed);
    Rng proto_rng = root.fork(1);
    Rng split_rng = root.fork(2);
    Rng sample_rng = root.fork(3);
    Rng sem_rng = root.fork(4);

    // Tree in breadth-first order: node ids grow level by level.
    std::vector<NodeRecord> nodes;
    std::vector<Edge> edges;
    std::vector<std::size_t> parent_of;
    std::vector<std::size_t> frontier{0};
    nodes.push_back({0, "c0_0", 0, false, Split::none});
    parent_of.push_back(0);
    const int leaf_level = cfg.levels - 1;
    for (int l = 1; l < cfg.levels; ++l) {
        std::vector<std::size_t> next;
        std::size_t index = 0;
        for (auto p : frontier) {
            for (std::size_t c = 0; c < cfg.branching_at(l - 1); ++c) {
                const std::size_t id = nodes.size();
                const bool leaf = l == leaf_level;
                const std::string name = (leaf ? "e" : "c" + std::to_string(l)) + "_" + std::to_string(index++);
                nodes.push_back({id, name, l, leaf, Split::none});
                parent_of.push_back(p);
                edges.emplace_back(p, id);
                next.push_back(id);
            }
        }
        frontier = std::move(next);
    }
    const std::size_t m = nodes.size();
    const std::size_t d = cfg.input_dim;

    Tensor prototypes({m, d});
    for (std::size_t j = 0; j < d; ++j) prototypes(0, j) = proto_rng.normal();
    for (std::size_t i = 1; i < m; ++i) {
        const double sigma = cfg.level_noise_at(nodes[i].level);
        for (std::size_t j = 0; j < d; ++j) prototypes(i, j) = prototypes(parent_of[i], j) + sigma * proto_rng.normal();
    }

    // Leaf splits: optional weak-only reservation, then meta-train / meta-test.
    std::vector<std::size_t> leaves = frontier;
    split_rng.shuffle(leaves);
    std::size_t cursor = 0;
    if (cfg.mix_mode) {
        const auto weak_only = static_cast<std::size_t>(std::llround(cfg.weak_only_fraction * leaves.size()));
        for (; cursor < weak_only; ++cursor) nodes[leaves[cursor]].split = Split::weak;
    }
    const std::size_t remaining = leaves.size() - cursor;
    const auto n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * remaining));
    if (n_train == 0 || n_train == remaining) throw ConfigError("synthetic split leaves an empty meta-train or meta-test set");
    for (std::size_t k = 0; k < remaining; ++k) {
        nodes[leaves[cursor + k]].split = k < n_train ? Split::meta_train : Split::meta_test;
    }
    for (auto& n : nodes)
        if (!n.is_entity) n.split = Split::weak;

    auto draw = [&](std::size_t leaf, std::vector<double>& rows) {
        for (std::size_t j = 0; j < d; ++j) {
            rows.push_back(as_float32(prototypes(leaf, j) + cfg.sample_noise * sample_rng.normal()));
        }
    };

    std::vector<double> features;
    std::vector<std::size_t> labels;
    for (const auto& n : nodes) {
        if (!n.is_entity || n.split == Split::weak) continue;
        for (std::size_t s = 0; s < cfg.samples_per_class; ++s) {
            draw(n.id, features);
            labels.push_back(n.id);
        }
    }

    // Weak samples: a uniformly chosen descendant leaf's distribution, labeled
    // with the concept node.
    std::vector<std::vector<std::size_t>> below(m);
    for (auto leaf : frontier) {
        std::size_t cur = leaf;
        while (cur != 0) {
            cur = parent_of[cur];
            below[cur].push_back(leaf);
        }
    }
    for (const auto& n : nodes) {
        if (n.is_entity) continue;
        const auto& pool = below[n.id];
        for (std::size_t s = 0; s < cfg.weak_samples_per_class; ++s) {
            draw(pool[sample_rng.index(pool.size())], features);
            labels.push_back(n.id);
        }
    }

    Tensor projection({d, cfg.semantic_dim});
    const double proj_scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (auto& v : projection.data()) v = proj_scale * sem_rng.normal();
    Tensor semantics({m, cfg.semantic_dim});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < cfg.semantic_dim; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += prototypes(i, j) * projection(j, k);
            semantics(i, k) = s + cfg.semantic_noise * sem_rng.normal();
        }
    }

    const std::size_t count = labels.size();
    SyntheticData out{ConceptGraph(std::move(nodes), std::move(edges), std::move(semantics)),
                      Dataset(Tensor({count, d}, std::move(features)), std::move(labels)), std::move(prototypes)};
    return out;
}

}  // namespace metaconcept
