// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "metaconcept/graph.hpp"
#include "metaconcept/tensor.hpp"

namespace metaconcept {

class Rng;

/**
 * Labeled feature vectors. A sample labeled with an entity node is finely
 * labeled; a sample labeled with a node on a concept level l belongs to the
 * weakly-labeled set of level l. Split membership lives in the graph.
 */
class Dataset {
public:
    Dataset() = default;
    Dataset(Tensor features, std::vector<std::size_t> node_ids);

    std::size_t size() const noexcept { return node_ids_.size(); }
    std::size_t input_dim() const { return features_.cols(); }
    const Tensor& features() const noexcept { return features_; }
    const std::vector<std::size_t>& node_ids() const noexcept { return node_ids_; }
    /// Sample indices labeled with `node`; empty when there are none.
    const std::vector<std::size_t>& samples_of(std::size_t node) const;
    /// Nodes on `level` with at least one sample, ascending.
    std::vector<std::size_t> classes_at_level(const ConceptGraph& graph, int level) const;

    /// Throws DataError when a label is not a node of `graph`, or when the
    /// graph's meta-train and meta-test classes overlap.
    void validate_against(const ConceptGraph& graph) const;

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.features_ == b.features_ && a.node_ids_ == b.node_ids_;
    }

private:
    Tensor features_;
    std::vector<std::size_t> node_ids_;
    std::vector<std::vector<std::size_t>> by_node_;
};

/// "MCDS", u32 version, u64 count, u32 d_in, count*d_in float32, count u32
/// node ids; all little-endian. Features must be float32-representable for an
/// exact round trip.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// One N-way K-shot task. Labels index class_ids.
struct Episode {
    int level = 0;
    std::vector<std::size_t> class_ids;
    Tensor support_x;
    std::vector<int> support_y;
    Tensor query_x;
    std::vector<int> query_y;
    std::vector<std::size_t> support_samples;  ///< dataset indices
    std::vector<std::size_t> query_samples;

    std::size_t ways() const noexcept { return class_ids.size(); }
};

struct EpisodeShape {
    std::size_t ways = 5;
    std::size_t shots = 1;
    std::size_t queries = 15;
};

/// Entity task over the entity classes of `split`. Classes are drawn
/// uniformly without replacement, then K+q samples per class without
/// replacement; the first K go to the support set.
Episode sample_entity_episode(const ConceptGraph& graph, const Dataset& ds, Split split, EpisodeShape shape,
                              Rng& rng);

/// Concept task over the level-`level` nodes using their weakly-labeled samples.
Episode sample_concept_episode(const ConceptGraph& graph, const Dataset& ds, int level, EpisodeShape shape,
                               Rng& rng);

/// Concept levels usable for episodes of `ways` classes: non-entity levels
/// with at least two classes that carry K+q samples; `ways` is clamped per
/// level to the number of such classes.
struct ConceptLevel {
    int level = 0;
    std::size_t ways = 0;
};
std::vector<ConceptLevel> usable_concept_levels(const ConceptGraph& graph, const Dataset& ds, EpisodeShape shape);

}  // namespace metaconcept
