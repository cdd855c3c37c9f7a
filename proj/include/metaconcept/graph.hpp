// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metaconcept/tensor.hpp"

namespace metaconcept {

/// Role of a node's class in the data: meta-train / meta-test entity classes,
/// classes that only appear in weakly-labeled data, or unused.
enum class Split { meta_train, meta_test, weak, none };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct NodeRecord {
    std::size_t id = 0;
    std::string name;
    int level = 0;
    bool is_entity = false;
    Split split = Split::none;

    friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

using Edge = std::pair<std::size_t, std::size_t>;

/**
 * Leveled concept hierarchy: level 0 holds the most abstract concepts and the
 * deepest level holds the concrete entities (leaves). Edges are undirected and
 * connect a node to its parent on the level above.
 *
 * Constructed only through validation, so every instance satisfies:
 *  - node ids are exactly 0..M-1
 *  - no self edges, no duplicate edges
 *  - every edge joins adjacent levels
 *  - every entity has a parent
 *  - the edge set is a forest (no undirected cycle)
 *  - the semantics matrix has one row per node
 */
class ConceptGraph {
public:
    ConceptGraph() = default;
    /// Throws LoadError naming the offending node or edge.
    ConceptGraph(std::vector<NodeRecord> nodes, std::vector<Edge> edges, Tensor semantics);

    std::size_t size() const noexcept { return nodes_.size(); }
    int entity_level() const noexcept { return entity_level_; }
    int num_levels() const noexcept { return entity_level_ + 1; }
    std::size_t semantic_dim() const { return semantics_.cols(); }

    const std::vector<NodeRecord>& nodes() const noexcept { return nodes_; }
    const NodeRecord& node(std::size_t id) const { return nodes_.at(id); }
    /// Canonical edges (smaller id first), sorted.
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<std::size_t>& neighbors(std::size_t id) const { return neighbors_.at(id); }
    /// Degree without the self-loop.
    std::size_t degree(std::size_t id) const { return neighbors_.at(id).size(); }
    const Tensor& semantics() const noexcept { return semantics_; }

    std::vector<std::size_t> nodes_at_level(int level) const;
    std::vector<std::size_t> parents(std::size_t id) const;
    std::vector<std::size_t> children(std::size_t id) const;
    /// Entity nodes below `id`; `{id}` itself when it is an entity.
    std::vector<std::size_t> descendant_entities(std::size_t id) const;
    std::vector<std::size_t> entities_in_split(Split split) const;

    friend bool operator==(const ConceptGraph& a, const ConceptGraph& b) {
        return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.semantics_ == b.semantics_;
    }

private:
    std::vector<NodeRecord> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> neighbors_;
    Tensor semantics_;
    int entity_level_ = 0;
};

enum class SemanticsStorage { inline_values, sidecar };

/// Reads the JSON graph document; a sidecar semantics file is resolved
/// relative to the document's directory.
ConceptGraph load_graph(const std::filesystem::path& path);

/// Writes the JSON graph document. With SemanticsStorage::sidecar the
/// semantics go to `<stem>.sem` next to it as little-endian float32, which
/// round-trips only values representable in float32.
void save_graph(const ConceptGraph& graph, const std::filesystem::path& path,
                SemanticsStorage storage = SemanticsStorage::inline_values);

/// Sidecar semantics: u32 M, u32 d, then M*d float32, all little-endian.
Tensor read_semantics_sidecar(const std::filesystem::path& path);
void write_semantics_sidecar(const Tensor& semantics, const std::filesystem::path& path);

/// Row-stochastic M x M operator D^-1 * A_hat, with A_hat = A + I when
/// `self_loops` is set and A_hat = A otherwise. Without self loops a node of
/// degree 0 makes the operator undefined and raises ConfigError.
Tensor propagation_operator(const ConceptGraph& graph, bool self_loops = true);

/// Rows `ids` of `x` in the given order. Ids must be distinct and in range,
/// otherwise SelectionError.
Tensor select_task_rows(const Tensor& x, std::span<const std::size_t> ids);

/// Copy of `graph` whose node i becomes node perm[i]; semantics rows and
/// edges follow.
ConceptGraph relabel(const ConceptGraph& graph, std::span<const std::size_t> perm);

/// Same hierarchy with the semantics replaced by the M x M identity.
ConceptGraph with_one_hot_semantics(const ConceptGraph& graph);

struct GraphSummary {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    int levels = 0;
    std::size_t semantic_dim = 0;
    std::vector<std::size_t> nodes_per_level;
    std::map<std::string, std::size_t> split_counts;
};

GraphSummary summarize(const ConceptGraph& graph);

}  // namespace metaconcept
