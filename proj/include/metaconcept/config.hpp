// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: one JSON document holding paths, the synthetic
// data generator, model, training, evaluation and deviation flags. Unknown
// keys are rejected with the offending field path.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "metaconcept/meta.hpp"
#include "metaconcept/synthetic.hpp"

namespace metaconcept {

struct PathsConfig {
    std::string graph = "data/graph.json";
    std::string dataset = "data/dataset.bin";
    std::string checkpoint_dir = "runs/checkpoints";
    std::string metrics_dir = "runs/metrics";
};

struct ExperimentConfig {
    PathsConfig paths;
    SyntheticConfig data;
    ModelConfig model;
    TrainConfig train;
    EvalConfig eval;
    /// Outer-loop gradient mode; false enables second-order meta-gradients.
    bool first_order = true;

    /// Derived: train.second_order follows first_order, and the encoder input
    /// width follows the data block.
    void normalize();
    void validate() const;
};

/// Defaults: desk-scale benchmark (branching 4, 4 levels, 64 leaves, d_in 32,
/// sample noise 2) with the standard optimizer and inner-loop settings and a
/// schedule shortened tenfold (2000 iterations, decay every 500).
ExperimentConfig default_config();

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults. Throws ConfigError naming the field.
ExperimentConfig config_from_json(const nlohmann::json& doc);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Applies "a.b.c=value" overrides to a config document. The value is parsed
/// as JSON when possible and taken as a string otherwise. Throws ConfigError
/// when the path does not name an existing field.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

/// FNV-1a over the model, training and flag sections; identifies which runs
/// a checkpoint may resume.
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace metaconcept
