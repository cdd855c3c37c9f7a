// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic hierarchical benchmark: a balanced concept tree whose nodes carry
// latent prototypes, finely-labeled leaf samples, weakly-labeled concept
// samples pooled bottom-up from descendant leaves, and semantics that are a
// noisy linear view of the prototypes.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "metaconcept/dataset.hpp"
#include "metaconcept/graph.hpp"

namespace metaconcept {

struct SyntheticConfig {
    /// Children per node when descending from level l to l+1; one entry per
    /// non-leaf level, or a single entry used for all of them.
    std::vector<std::size_t> branching{4};
    int levels = 4;  ///< N^le
    std::size_t input_dim = 32;
    std::size_t semantic_dim = 32;
    /// Stddev of a level-l prototype around its parent's, l >= 1; entry 0 is
    /// unused (the root prototype is standard normal). One entry per level or
    /// a single entry used for all of them.
    std::vector<double> level_noise{1.0};
    /// Stddev of a leaf sample around its leaf prototype.
    double sample_noise = 1.0;
    double semantic_noise = 0.1;
    std::size_t samples_per_class = 40;
    /// Weakly-labeled samples per concept node.
    std::size_t weak_samples_per_class = 40;
    double train_fraction = 0.8;
    /// Reserve a fraction of the leaves as weak-only sources.
    bool mix_mode = false;
    double weak_only_fraction = 0.2;
    std::uint64_t seed = 0;

    std::size_t branching_at(int level) const;
    double level_noise_at(int level) const;
    void validate() const;
};

struct SyntheticData {
    ConceptGraph graph;
    Dataset dataset;
    Tensor prototypes;  ///< M x input_dim latent class centers
};

/// Pure function of the config (including its seed).
SyntheticData generate_synthetic(const SyntheticConfig& cfg);

/// Nodes of a balanced tree with the given branching and depth.
std::size_t balanced_tree_size(const SyntheticConfig& cfg);
std::size_t balanced_tree_leaves(const SyntheticConfig& cfg);

}  // namespace metaconcept
