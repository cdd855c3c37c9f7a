// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include "metaconcept/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "binary_io.hpp"
#include "metaconcept/error.hpp"
#include "metaconcept/rng.hpp"

namespace metaconcept {

namespace fs = std::filesystem;

namespace {

const std::vector<std::size_t> kNoSamples;
constexpr char kDatasetMagic[4] = {'M', 'C', 'D', 'S'};

}  // namespace

Dataset::Dataset(Tensor features, std::vector<std::size_t> node_ids)
    : features_(std::move(features)), node_ids_(std::move(node_ids)) {
    if (features_.rank() != 2 || features_.rows() != node_ids_.size()) {
        throw DataError("dataset has " + std::to_string(node_ids_.size()) + " labels for features " +
                        shape_string(features_.shape()));
    }
    if (!features_.all_finite()) throw DataError("dataset contains non-finite features");
    for (std::size_t i = 0; i < node_ids_.size(); ++i) {
        const std::size_t node = node_ids_[i];
        if (node >= by_node_.size()) by_node_.resize(node + 1);
        by_node_[node].push_back(i);
    }
}

const std::vector<std::size_t>& Dataset::samples_of(std::size_t node) const {
    return node < by_node_.size() ? by_node_[node] : kNoSamples;
}

std::vector<std::size_t> Dataset::classes_at_level(const ConceptGraph& graph, int level) const {
    std::vector<std::size_t> out;
    for (auto id : graph.nodes_at_level(level))
        if (!samples_of(id).empty()) out.push_back(id);
    return out;
}

void Dataset::validate_against(const ConceptGraph& graph) const {
    for (std::size_t i = 0; i < node_ids_.size(); ++i) {
        if (node_ids_[i] >= graph.size()) {
            throw DataError("sample " + std::to_string(i) + " is labeled with node " + std::to_string(node_ids_[i]) +
                            ", which the graph (M=" + std::to_string(graph.size()) + ") does not contain");
        }
    }
    for (const auto& n : graph.nodes()) {
        if (!n.is_entity && n.split != Split::weak && n.split != Split::none) {
            throw DataError("concept node " + std::to_string(n.id) + " carries entity split '" +
                            std::string(to_string(n.split)) + "'");
        }
    }
    if (!features_.empty() && input_dim() == 0) throw DataError("dataset has zero-width features");
}

void save_dataset(const Dataset& ds, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write dataset file " + path.string());
    out.write(kDatasetMagic, 4);
    io::write_le(out, std::uint32_t{1});
    io::write_le(out, static_cast<std::uint64_t>(ds.size()));
    io::write_le(out, static_cast<std::uint32_t>(ds.input_dim()));
    for (double v : ds.features().data()) io::write_f32(out, static_cast<float>(v));
    for (auto id : ds.node_ids()) io::write_le(out, static_cast<std::uint32_t>(id));
}

Dataset load_dataset(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open dataset file " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kDatasetMagic)) {
        throw LoadError(path.string() + " is not a dataset file");
    }
    if (io::read_le<std::uint32_t>(in) != 1) throw LoadError("unsupported dataset version in " + path.string());
    const auto count = io::read_le<std::uint64_t>(in);
    const auto dim = io::read_le<std::uint32_t>(in);
    if (count == 0 || dim == 0) throw LoadError("dataset " + path.string() + " is empty");
    Tensor features({static_cast<std::size_t>(count), dim});
    for (std::size_t i = 0; i < features.size(); ++i) features[i] = static_cast<double>(io::read_f32(in));
    std::vector<std::size_t> ids(count);
    for (auto& id : ids) id = io::read_le<std::uint32_t>(in);
    if (in.peek() != std::char_traits<char>::eof()) throw LoadError("dataset " + path.string() + " has trailing bytes");
    return Dataset(std::move(features), std::move(ids));
}

namespace {

Episode build_episode(const Dataset& ds, int level, const std::vector<std::size_t>& candidates, EpisodeShape shape,
                      Rng& rng, const std::string& what) {
    if (shape.ways == 0 || shape.shots == 0) throw ConfigError("episodes need at least one way and one shot");
    const std::size_t per_class = shape.shots + shape.queries;
    if (candidates.size() < shape.ways) {
        throw SamplingError(what + ": " + std::to_string(shape.ways) + "-way episode requested but only " +
                            std::to_string(candidates.size()) + " classes are available");
    }
    for (auto c : candidates) {
        if (ds.samples_of(c).size() < per_class) {
            throw SamplingError(what + ": class " + std::to_string(c) + " has " +
                                std::to_string(ds.samples_of(c).size()) + " samples, " + std::to_string(per_class) +
                                " needed (K=" + std::to_string(shape.shots) + ", q=" + std::to_string(shape.queries) +
                                ")");
        }
    }

    Episode ep;
    ep.level = level;
    for (auto i : rng.sample_without_replacement(candidates.size(), shape.ways)) ep.class_ids.push_back(candidates[i]);

    const std::size_t d = ds.input_dim();
    ep.support_x = Tensor({shape.ways * shape.shots, d});
    if (shape.queries > 0) ep.query_x = Tensor({shape.ways * shape.queries, d});
    std::size_t s_row = 0, q_row = 0;
    for (std::size_t c = 0; c < shape.ways; ++c) {
        const auto& pool = ds.samples_of(ep.class_ids[c]);
        const auto picks = rng.sample_without_replacement(pool.size(), per_class);
        for (std::size_t k = 0; k < per_class; ++k) {
            const std::size_t sample = pool[picks[k]];
            const double* src = ds.features().data().data() + sample * d;
            if (k < shape.shots) {
                std::copy_n(src, d, ep.support_x.data().data() + (s_row++) * d);
                ep.support_y.push_back(static_cast<int>(c));
                ep.support_samples.push_back(sample);
            } else {
                std::copy_n(src, d, ep.query_x.data().data() + (q_row++) * d);
                ep.query_y.push_back(static_cast<int>(c));
                ep.query_samples.push_back(sample);
            }
        }
    }
    return ep;
}

}  // namespace

Episode sample_entity_episode(const ConceptGraph& graph, const Dataset& ds, Split split, EpisodeShape shape,
                              Rng& rng) {
    if (split != Split::meta_train && split != Split::meta_test) {
        throw ConfigError("entity episodes are drawn from the meta-train or meta-test split");
    }
    return build_episode(ds, graph.entity_level(), graph.entities_in_split(split), shape, rng,
                         std::string("entity episode (") + std::string(to_string(split)) + ")");
}

Episode sample_concept_episode(const ConceptGraph& graph, const Dataset& ds, int level, EpisodeShape shape,
                               Rng& rng) {
    if (level == graph.entity_level()) throw SamplingError("concept episodes must use non-leaf levels");
    if (level < 0 || level > graph.entity_level()) {
        throw SamplingError("level " + std::to_string(level) + " does not exist in the graph");
    }
    return build_episode(ds, level, ds.classes_at_level(graph, level), shape, rng,
                         "concept episode (level " + std::to_string(level) + ")");
}

std::vector<ConceptLevel> usable_concept_levels(const ConceptGraph& graph, const Dataset& ds, EpisodeShape shape) {
    std::vector<ConceptLevel> out;
    const std::size_t per_class = shape.shots + shape.queries;
    for (int l = 0; l < graph.entity_level(); ++l) {
        const auto classes = ds.classes_at_level(graph, l);
        const bool enough = std::all_of(classes.begin(), classes.end(),
                                        [&](std::size_t c) { return ds.samples_of(c).size() >= per_class; });
        if (enough && classes.size() >= 2) out.push_back({l, std::min(shape.ways, classes.size())});
    }
    return out;
}

}  // namespace metaconcept
