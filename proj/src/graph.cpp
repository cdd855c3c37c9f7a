// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include "metaconcept/graph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "binary_io.hpp"
#include "metaconcept/error.hpp"

namespace metaconcept {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Split split) {
    switch (split) {
        case Split::meta_train: return "meta-train";
        case Split::meta_test: return "meta-test";
        case Split::weak: return "weak";
        case Split::none: return "none";
    }
    return "none";
}

Split parse_split(std::string_view text) {
    if (text == "meta-train") return Split::meta_train;
    if (text == "meta-test") return Split::meta_test;
    if (text == "weak") return Split::weak;
    if (text == "none") return Split::none;
    throw LoadError("unknown split '" + std::string(text) + "'");
}

namespace {

std::string describe(const NodeRecord& n) { return "node " + std::to_string(n.id) + " ('" + n.name + "')"; }

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

}  // namespace

ConceptGraph::ConceptGraph(std::vector<NodeRecord> nodes, std::vector<Edge> edges, Tensor semantics)
    : nodes_(std::move(nodes)), semantics_(std::move(semantics)) {
    const std::size_t m = nodes_.size();
    if (m == 0) throw LoadError("concept graph has no nodes");

    std::sort(nodes_.begin(), nodes_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < m; ++i) {
        if (nodes_[i].id != i) {
            throw LoadError("node ids must be exactly 0.." + std::to_string(m - 1) + "; found id " +
                            std::to_string(nodes_[i].id) + " at position " + std::to_string(i));
        }
        if (nodes_[i].level < 0) throw LoadError(describe(nodes_[i]) + " has a negative level");
    }
    entity_level_ = 0;
    for (const auto& n : nodes_) entity_level_ = std::max(entity_level_, n.level);
    for (const auto& n : nodes_) {
        if (n.is_entity != (n.level == entity_level_)) {
            throw LoadError(describe(n) + (n.is_entity ? " is marked as an entity but is not on the entity level "
                                                       : " is on the entity level but not marked as an entity ") +
                            std::to_string(entity_level_));
        }
    }

    if (semantics_.rank() != 2 || semantics_.rows() != m) {
        throw LoadError("semantics matrix " + shape_string(semantics_.shape()) + " does not have one row per node (M=" +
                        std::to_string(m) + ")");
    }
    if (!semantics_.all_finite()) throw LoadError("semantics matrix contains non-finite values");

    std::set<Edge> seen;
    for (auto [a, b] : edges) {
        if (a >= m || b >= m) {
            throw LoadError("edge (" + std::to_string(a) + ", " + std::to_string(b) + ") references a missing node");
        }
        if (a == b) throw LoadError("self edge on " + describe(nodes_[a]));
        if (a > b) std::swap(a, b);
        if (!seen.insert({a, b}).second) {
            throw LoadError("duplicate edge (" + std::to_string(a) + ", " + std::to_string(b) + ")");
        }
        if (std::abs(nodes_[a].level - nodes_[b].level) != 1) {
            throw LoadError("cross-level edge between " + describe(nodes_[a]) + " at level " +
                            std::to_string(nodes_[a].level) + " and " + describe(nodes_[b]) + " at level " +
                            std::to_string(nodes_[b].level));
        }
    }
    edges_.assign(seen.begin(), seen.end());

    DisjointSets sets(m);
    for (const auto& [a, b] : edges_) {
        if (!sets.unite(a, b)) {
            throw LoadError("hierarchy contains a cycle through edge (" + std::to_string(a) + ", " +
                            std::to_string(b) + ")");
        }
    }

    neighbors_.assign(m, {});
    for (const auto& [a, b] : edges_) {
        neighbors_[a].push_back(b);
        neighbors_[b].push_back(a);
    }
    for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());

    if (entity_level_ > 0) {
        for (const auto& n : nodes_) {
            if (n.is_entity && parents(n.id).empty()) throw LoadError("entity " + describe(n) + " has no parent");
        }
    }
}

std::vector<std::size_t> ConceptGraph::nodes_at_level(int level) const {
    std::vector<std::size_t> out;
    for (const auto& n : nodes_)
        if (n.level == level) out.push_back(n.id);
    return out;
}

std::vector<std::size_t> ConceptGraph::parents(std::size_t id) const {
    std::vector<std::size_t> out;
    for (auto nb : neighbors_.at(id))
        if (nodes_[nb].level == nodes_[id].level - 1) out.push_back(nb);
    return out;
}

std::vector<std::size_t> ConceptGraph::children(std::size_t id) const {
    std::vector<std::size_t> out;
    for (auto nb : neighbors_.at(id))
        if (nodes_[nb].level == nodes_[id].level + 1) out.push_back(nb);
    return out;
}

std::vector<std::size_t> ConceptGraph::descendant_entities(std::size_t id) const {
    std::vector<std::size_t> out;
    std::vector<std::size_t> frontier{id};
    while (!frontier.empty()) {
        const std::size_t cur = frontier.back();
        frontier.pop_back();
        if (nodes_[cur].is_entity) {
            out.push_back(cur);
            continue;
        }
        for (auto c : children(cur)) frontier.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> ConceptGraph::entities_in_split(Split split) const {
    std::vector<std::size_t> out;
    for (const auto& n : nodes_)
        if (n.is_entity && n.split == split) out.push_back(n.id);
    return out;
}

// ---------------------------------------------------------------------------
// File format

Tensor read_semantics_sidecar(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open semantics file " + path.string());
    try {
        const auto m = io::read_le<std::uint32_t>(in);
        const auto d = io::read_le<std::uint32_t>(in);
        if (m == 0 || d == 0) throw LoadError("semantics file " + path.string() + " has an empty header");
        Tensor t({m, d});
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(io::read_f32(in));
        if (in.peek() != std::char_traits<char>::eof()) {
            throw LoadError("semantics file " + path.string() + " has trailing bytes");
        }
        return t;
    } catch (const LoadError&) {
        throw;
    } catch (const DataError& e) {
        throw LoadError("semantics file " + path.string() + ": " + e.what());
    }
}

void write_semantics_sidecar(const Tensor& semantics, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write semantics file " + path.string());
    io::write_le(out, static_cast<std::uint32_t>(semantics.rows()));
    io::write_le(out, static_cast<std::uint32_t>(semantics.cols()));
    for (double v : semantics.data()) io::write_f32(out, static_cast<float>(v));
}

ConceptGraph load_graph(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open graph file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw LoadError("graph file " + path.string() + " does not parse: " + e.what());
    }
    try {
        if (doc.value("format", "") != "metaconcept.graph") throw LoadError("not a metaconcept graph document");
        if (doc.value("version", 0) != 1) throw LoadError("unsupported graph document version");

        std::vector<NodeRecord> nodes;
        for (const auto& jn : doc.at("nodes")) {
            NodeRecord n;
            n.id = jn.at("id").get<std::size_t>();
            n.name = jn.value("name", std::to_string(n.id));
            n.level = jn.at("level").get<int>();
            n.is_entity = jn.at("entity").get<bool>();
            n.split = parse_split(jn.value("split", "none"));
            nodes.push_back(std::move(n));
        }
        std::vector<Edge> edges;
        for (const auto& je : doc.at("edges")) {
            if (!je.is_array() || je.size() != 2) throw LoadError("edges must be [id, id] pairs");
            edges.emplace_back(je[0].get<std::size_t>(), je[1].get<std::size_t>());
        }

        const auto& js = doc.at("semantics");
        const auto rows = js.at("rows").get<std::size_t>();
        const auto dim = js.at("dim").get<std::size_t>();
        Tensor semantics;
        if (js.contains("file")) {
            semantics = read_semantics_sidecar(path.parent_path() / js.at("file").get<std::string>());
            if (semantics.rows() != rows || semantics.cols() != dim) {
                throw LoadError("semantics sidecar shape " + shape_string(semantics.shape()) +
                                " disagrees with the declared " + std::to_string(rows) + "x" + std::to_string(dim));
            }
        } else {
            const auto& values = js.at("values");
            if (values.size() != rows) throw LoadError("semantics declares " + std::to_string(rows) + " rows but lists " +
                                                       std::to_string(values.size()));
            std::vector<double> data;
            data.reserve(rows * dim);
            for (const auto& r : values) {
                if (r.size() != dim) throw LoadError("semantics row of length " + std::to_string(r.size()) +
                                                     ", expected dim " + std::to_string(dim));
                for (const auto& v : r) data.push_back(v.get<double>());
            }
            semantics = Tensor({rows, dim}, std::move(data));
        }
        return ConceptGraph(std::move(nodes), std::move(edges), std::move(semantics));
    } catch (const json::exception& e) {
        throw LoadError("graph file " + path.string() + ": " + e.what());
    } catch (const DimensionError& e) {
        throw LoadError("graph file " + path.string() + ": " + e.what());
    }
}

void save_graph(const ConceptGraph& graph, const fs::path& path, SemanticsStorage storage) {
    json doc;
    doc["format"] = "metaconcept.graph";
    doc["version"] = 1;
    doc["entity_level"] = graph.entity_level();
    json nodes = json::array();
    for (const auto& n : graph.nodes()) {
        nodes.push_back({{"id", n.id}, {"name", n.name}, {"level", n.level}, {"entity", n.is_entity},
                         {"split", std::string(to_string(n.split))}});
    }
    doc["nodes"] = std::move(nodes);
    json edges = json::array();
    for (const auto& [a, b] : graph.edges()) edges.push_back({a, b});
    doc["edges"] = std::move(edges);

    const Tensor& z = graph.semantics();
    json sem{{"rows", z.rows()}, {"dim", z.cols()}};
    if (storage == SemanticsStorage::sidecar) {
        fs::path side = path;
        side.replace_extension(".sem");
        write_semantics_sidecar(z, side);
        sem["file"] = side.filename().string();
    } else {
        json values = json::array();
        for (std::size_t i = 0; i < z.rows(); ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < z.cols(); ++j) row.push_back(z(i, j));
            values.push_back(std::move(row));
        }
        sem["values"] = std::move(values);
    }
    doc["semantics"] = std::move(sem);

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write graph file " + path.string());
    out << doc.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// Operators

Tensor propagation_operator(const ConceptGraph& graph, bool self_loops) {
    const std::size_t m = graph.size();
    Tensor p({m, m});
    for (std::size_t i = 0; i < m; ++i) {
        const auto& nb = graph.neighbors(i);
        const std::size_t deg = nb.size() + (self_loops ? 1 : 0);
        if (deg == 0) {
            throw ConfigError("propagation without self loops is undefined for isolated " +
                              describe(graph.node(i)));
        }
        const double w = 1.0 / static_cast<double>(deg);
        if (self_loops) p(i, i) = w;
        for (auto j : nb) p(i, j) = w;
    }
    return p;
}

Tensor select_task_rows(const Tensor& x, std::span<const std::size_t> ids) {
    const std::size_t m = x.rows(), d = x.cols();
    if (ids.empty()) throw SelectionError("empty class selection");
    std::vector<bool> used(m, false);
    Tensor out({ids.size(), d});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= m) {
            throw SelectionError("class id " + std::to_string(ids[i]) + " out of range for " + std::to_string(m) +
                                 " nodes");
        }
        if (used[ids[i]]) throw SelectionError("class id " + std::to_string(ids[i]) + " selected twice");
        used[ids[i]] = true;
        std::copy_n(x.data().data() + ids[i] * d, d, out.data().data() + i * d);
    }
    return out;
}

ConceptGraph relabel(const ConceptGraph& graph, std::span<const std::size_t> perm) {
    const std::size_t m = graph.size();
    if (perm.size() != m) throw DimensionError("relabel: permutation length differs from node count");
    std::vector<bool> hit(m, false);
    for (auto p : perm) {
        if (p >= m || hit[p]) throw IndexError("relabel: not a permutation");
        hit[p] = true;
    }
    std::vector<NodeRecord> nodes = graph.nodes();
    for (std::size_t i = 0; i < m; ++i) nodes[i].id = perm[i];
    std::vector<Edge> edges;
    for (const auto& [a, b] : graph.edges()) edges.emplace_back(perm[a], perm[b]);
    const Tensor& z = graph.semantics();
    Tensor sem(z.shape());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < z.cols(); ++j) sem(perm[i], j) = z(i, j);
    return ConceptGraph(std::move(nodes), std::move(edges), std::move(sem));
}

ConceptGraph with_one_hot_semantics(const ConceptGraph& graph) {
    return ConceptGraph(graph.nodes(), graph.edges(), Tensor::identity(graph.size()));
}

GraphSummary summarize(const ConceptGraph& graph) {
    GraphSummary s;
    s.nodes = graph.size();
    s.edges = graph.edges().size();
    s.levels = graph.num_levels();
    s.semantic_dim = graph.semantic_dim();
    s.nodes_per_level.assign(static_cast<std::size_t>(s.levels), 0);
    for (const auto& n : graph.nodes()) {
        ++s.nodes_per_level[static_cast<std::size_t>(n.level)];
        ++s.split_counts[std::string(to_string(n.split))];
    }
    return s;
}

}  // namespace metaconcept
