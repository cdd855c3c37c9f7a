// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include "metaconcept/config.hpp"

#include <fstream>
#include <set>

#include "metaconcept/error.hpp"

namespace metaconcept {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::leaky_relu: return "leaky_relu";
    }
    return "leaky_relu";
}

Activation parse_activation(const std::string& s, const std::string& field) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    if (s == "leaky_relu") return Activation::leaky_relu;
    throw ConfigError(field + ": unknown activation '" + s + "'");
}

// Reads one JSON object strictly: every key must be consumed.
class Section {
public:
    Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
        if (!doc_.is_object()) throw ConfigError(path_ + ": expected an object");
    }
    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (auto it = doc_.begin(); it != doc_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown key");
        }
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = doc_.find(key);
        return it == doc_.end() ? nullptr : &*it;
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        const json* v = find(key);
        if (!v) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v->is_boolean()) throw ConfigError(field(key) + ": expected true or false");
            } else if constexpr (std::is_unsigned_v<T>) {
                if (!v->is_number_integer() || v->get<long long>() < 0) {
                    throw ConfigError(field(key) + ": expected a non-negative integer");
                }
            } else if constexpr (std::is_integral_v<T>) {
                if (!v->is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v->is_number()) throw ConfigError(field(key) + ": expected a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
            }
            out = v->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(field(key) + ": " + e.what());
        }
    }

    template <typename T>
    void get_list(const std::string& key, std::vector<T>& out) {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_array()) throw ConfigError(field(key) + ": expected a list");
        std::vector<T> tmp;
        for (const auto& item : *v) {
            if constexpr (std::is_unsigned_v<T>) {
                if (!item.is_number_integer() || item.get<long long>() < 0) {
                    throw ConfigError(field(key) + ": expected non-negative integers");
                }
            } else {
                if (!item.is_number()) throw ConfigError(field(key) + ": expected numbers");
            }
            tmp.push_back(item.get<T>());
        }
        out = std::move(tmp);
    }

private:
    const json& doc_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

void ExperimentConfig::normalize() {
    train.second_order = !first_order;
    model.encoder.input_dim = data.input_dim;
}

void ExperimentConfig::validate() const {
    data.validate();
    model.encoder.validate();
    model.gcim.validate(model.gcim.semantics == SemanticsMode::one_hot ? balanced_tree_size(data) : data.semantic_dim);
    train.validate();
    if (eval.episodes == 0) throw ConfigError("eval.episodes must be positive");
    if (eval.shape.ways < 2) throw ConfigError("eval.ways must be at least 2");
    if (eval.shape.shots == 0 || eval.shape.queries == 0) throw ConfigError("eval.shots and eval.queries must be positive");
    if (eval.workers == 0) throw ConfigError("eval.workers must be positive");
    if (eval.inner_lr < 0.0) throw ConfigError("eval.inner_lr must be non-negative");
    if (model.encoder.input_dim != data.input_dim) {
        throw ConfigError("model.encoder input width " + std::to_string(model.encoder.input_dim) +
                          " differs from data.input_dim " + std::to_string(data.input_dim));
    }
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.data.sample_noise = 2.0;
    cfg.train.iterations = 2000;
    cfg.train.lr_period = 500;
    cfg.data.seed = 1;
    cfg.train.seed = 1;
    cfg.eval.seed = 999;
    cfg.normalize();
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["paths"] = {{"graph", cfg.paths.graph},
                    {"dataset", cfg.paths.dataset},
                    {"checkpoint_dir", cfg.paths.checkpoint_dir},
                    {"metrics_dir", cfg.paths.metrics_dir}};

    const auto& d = cfg.data;
    doc["data"] = {{"branching", d.branching},
                   {"levels", d.levels},
                   {"input_dim", d.input_dim},
                   {"semantic_dim", d.semantic_dim},
                   {"level_noise", d.level_noise},
                   {"sample_noise", d.sample_noise},
                   {"semantic_noise", d.semantic_noise},
                   {"samples_per_class", d.samples_per_class},
                   {"weak_samples_per_class", d.weak_samples_per_class},
                   {"train_fraction", d.train_fraction},
                   {"mix_mode", d.mix_mode},
                   {"weak_only_fraction", d.weak_only_fraction},
                   {"seed", d.seed}};

    const auto& e = cfg.model.encoder;
    doc["encoder"] = {{"layer_widths", e.layer_widths},
                      {"low_layers", e.low_layers},
                      {"activation", activation_name(e.activation)},
                      {"slope", e.slope}};

    const auto& g = cfg.model.gcim;
    doc["gcim"] = {{"hop_widths", g.hop_widths},
                   {"relation_widths", g.relation_widths},
                   {"beta", g.beta},
                   {"keep_prob", g.keep_prob},
                   {"activation", activation_name(g.activation)},
                   {"slope", g.slope},
                   {"norm_eps", g.norm_eps}};

    const auto& t = cfg.train;
    json levels = json::object();
    for (const auto& [level, w] : t.level_weights) levels[std::to_string(level)] = w;
    doc["train"] = {{"lambda_e", t.lambda_e},
                    {"lambda_c", t.lambda_c},
                    {"level_weights", levels},
                    {"inner_lr", t.inner_lr},
                    {"outer_lr", t.outer_lr},
                    {"momentum", t.momentum},
                    {"weight_decay", t.weight_decay},
                    {"lr_decay", t.lr_decay},
                    {"lr_period", t.lr_period},
                    {"k_train", t.k_train},
                    {"iterations", t.iterations},
                    {"ways", t.shape.ways},
                    {"shots", t.shape.shots},
                    {"queries", t.shape.queries},
                    {"entity_batch", t.entity_batch},
                    {"concept_batch", t.concept_batch},
                    {"seed", t.seed}};

    const auto& v = cfg.eval;
    doc["eval"] = {{"episodes", v.episodes},
                   {"ways", v.shape.ways},
                   {"shots", v.shape.shots},
                   {"queries", v.shape.queries},
                   {"k_test", v.k_test},
                   {"inner_lr", v.inner_lr},
                   {"split", std::string(to_string(v.split))},
                   {"level", v.level ? json(*v.level) : json(nullptr)},
                   {"seed", v.seed},
                   {"workers", v.workers}};

    doc["flags"] = {{"first_order", cfg.first_order},
                    {"self_loops", g.self_loops},
                    {"semantics", g.semantics == SemanticsMode::one_hot ? "one_hot" : "embeddings"},
                    {"refine_placement", g.placement == RefinePlacement::task_rows ? "task_rows" : "write_back"}};
    return doc;
}

ExperimentConfig config_from_json(const json& doc) {
    ExperimentConfig cfg = default_config();
    Section root(doc, "");

    if (const json* p = root.find("paths")) {
        Section s(*p, "paths");
        s.get("graph", cfg.paths.graph);
        s.get("dataset", cfg.paths.dataset);
        s.get("checkpoint_dir", cfg.paths.checkpoint_dir);
        s.get("metrics_dir", cfg.paths.metrics_dir);
    }

    if (const json* p = root.find("data")) {
        Section s(*p, "data");
        auto& d = cfg.data;
        s.get_list("branching", d.branching);
        s.get("levels", d.levels);
        s.get("input_dim", d.input_dim);
        s.get("semantic_dim", d.semantic_dim);
        s.get_list("level_noise", d.level_noise);
        s.get("sample_noise", d.sample_noise);
        s.get("semantic_noise", d.semantic_noise);
        s.get("samples_per_class", d.samples_per_class);
        s.get("weak_samples_per_class", d.weak_samples_per_class);
        s.get("train_fraction", d.train_fraction);
        s.get("mix_mode", d.mix_mode);
        s.get("weak_only_fraction", d.weak_only_fraction);
        s.get("seed", d.seed);
    }

    if (const json* p = root.find("encoder")) {
        Section s(*p, "encoder");
        auto& e = cfg.model.encoder;
        s.get_list("layer_widths", e.layer_widths);
        s.get("low_layers", e.low_layers);
        std::string act = activation_name(e.activation);
        s.get("activation", act);
        e.activation = parse_activation(act, "encoder.activation");
        s.get("slope", e.slope);
    }

    if (const json* p = root.find("gcim")) {
        Section s(*p, "gcim");
        auto& g = cfg.model.gcim;
        s.get_list("hop_widths", g.hop_widths);
        s.get_list("relation_widths", g.relation_widths);
        s.get("beta", g.beta);
        s.get("keep_prob", g.keep_prob);
        std::string act = activation_name(g.activation);
        s.get("activation", act);
        g.activation = parse_activation(act, "gcim.activation");
        s.get("slope", g.slope);
        s.get("norm_eps", g.norm_eps);
    }

    if (const json* p = root.find("train")) {
        Section s(*p, "train");
        auto& t = cfg.train;
        s.get("lambda_e", t.lambda_e);
        s.get("lambda_c", t.lambda_c);
        if (const json* lw = s.find("level_weights")) {
            if (!lw->is_object()) throw ConfigError("train.level_weights: expected an object keyed by level");
            t.level_weights.clear();
            for (auto it = lw->begin(); it != lw->end(); ++it) {
                int level = 0;
                try {
                    std::size_t used = 0;
                    level = std::stoi(it.key(), &used);
                    if (used != it.key().size()) throw std::invalid_argument("trailing");
                } catch (const std::exception&) {
                    throw ConfigError("train.level_weights." + it.key() + ": key must be a level number");
                }
                if (!it->is_number()) throw ConfigError("train.level_weights." + it.key() + ": expected a number");
                t.level_weights[level] = it->get<double>();
            }
        }
        s.get("inner_lr", t.inner_lr);
        s.get("outer_lr", t.outer_lr);
        s.get("momentum", t.momentum);
        s.get("weight_decay", t.weight_decay);
        s.get("lr_decay", t.lr_decay);
        s.get("lr_period", t.lr_period);
        s.get("k_train", t.k_train);
        s.get("iterations", t.iterations);
        s.get("ways", t.shape.ways);
        s.get("shots", t.shape.shots);
        s.get("queries", t.shape.queries);
        s.get("entity_batch", t.entity_batch);
        s.get("concept_batch", t.concept_batch);
        s.get("seed", t.seed);
    }

    if (const json* p = root.find("eval")) {
        Section s(*p, "eval");
        auto& v = cfg.eval;
        s.get("episodes", v.episodes);
        s.get("ways", v.shape.ways);
        s.get("shots", v.shape.shots);
        s.get("queries", v.shape.queries);
        s.get("k_test", v.k_test);
        s.get("inner_lr", v.inner_lr);
        std::string split(to_string(v.split));
        s.get("split", split);
        try {
            v.split = parse_split(split);
        } catch (const Error&) {
            throw ConfigError("eval.split: unknown split '" + split + "'");
        }
        if (const json* lv = s.find("level")) {
            if (lv->is_null()) {
                v.level.reset();
            } else if (lv->is_number_integer()) {
                v.level = lv->get<int>();
            } else {
                throw ConfigError("eval.level: expected an integer or null");
            }
        }
        s.get("seed", v.seed);
        s.get("workers", v.workers);
    }

    if (const json* p = root.find("flags")) {
        Section s(*p, "flags");
        auto& g = cfg.model.gcim;
        s.get("first_order", cfg.first_order);
        s.get("self_loops", g.self_loops);
        std::string sem = g.semantics == SemanticsMode::one_hot ? "one_hot" : "embeddings";
        s.get("semantics", sem);
        if (sem == "one_hot") g.semantics = SemanticsMode::one_hot;
        else if (sem == "embeddings") g.semantics = SemanticsMode::embeddings;
        else throw ConfigError("flags.semantics: expected 'embeddings' or 'one_hot', got '" + sem + "'");
        std::string place = g.placement == RefinePlacement::task_rows ? "task_rows" : "write_back";
        s.get("refine_placement", place);
        if (place == "write_back") g.placement = RefinePlacement::write_back;
        else if (place == "task_rows") g.placement = RefinePlacement::task_rows;
        else throw ConfigError("flags.refine_placement: expected 'write_back' or 'task_rows', got '" + place + "'");
    }

    cfg.normalize();
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(doc);
}

void save_config(const ExperimentConfig& cfg, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write config file " + path.string());
    out << to_json(cfg).dump(2) << '\n';
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + item + "' is not of the form key=value");
        const std::string key = item.substr(0, eq);
        const std::string text = item.substr(eq + 1);

        json* node = &doc;
        std::size_t start = 0;
        while (true) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty() || !node->is_object()) throw ConfigError("override key '" + key + "' is malformed");
            // level_weights is an open map; every other key must already exist.
            const bool open = key.rfind("train.level_weights.", 0) == 0 && dot == std::string::npos;
            if (!node->contains(part) && !open) throw ConfigError("override key '" + key + "' names no config field");
            node = &(*node)[part];
            if (dot == std::string::npos) break;
            start = dot + 1;
        }

        json value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;
        *node = std::move(value);
    }
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    json doc = to_json(cfg);
    // Extending a run's iteration budget keeps its checkpoints resumable.
    doc["train"].erase("iterations");
    json keyed = {{"encoder", doc["encoder"]}, {"gcim", doc["gcim"]}, {"train", doc["train"]},
                  {"flags", doc["flags"]}, {"input_dim", cfg.data.input_dim}, {"semantic_dim", cfg.data.semantic_dim}};
    const std::string text = keyed.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace metaconcept
