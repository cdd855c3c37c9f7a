// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0
//
// Benchmark runs and ablation sweeps. A run generates the synthetic benchmark
// from the config's data block, meta-trains, and evaluates on meta-test entity
// episodes. Variants of a sweep share data, training and evaluation seeds.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "metaconcept/config.hpp"

namespace metaconcept {

struct RunOutcome {
    EvalResult eval;
    std::vector<StepMetrics> log;
    double train_seconds = 0.0;
    double eval_seconds = 0.0;
};

/// Train and evaluate on already-loaded data.
RunOutcome run_experiment(const ExperimentConfig& cfg, const ConceptGraph& graph, const Dataset& dataset);

/// Generate data from cfg.data, then run_experiment.
RunOutcome run_benchmark(const ExperimentConfig& cfg);

/// Sets data.seed and train.seed to `seed`; the evaluation seed is untouched.
ExperimentConfig with_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// Re-parses `cfg` with "key=value" overrides applied.
ExperimentConfig with_overrides(const ExperimentConfig& cfg, const std::vector<std::string>& overrides);

struct SweepVariant {
    std::string label;
    std::vector<std::string> overrides;
};

/// mlca, semantics, partition, lambda_c, beta, weak_only.
std::vector<std::string> sweep_names();
/// Throws ConfigError for an unknown sweep.
std::vector<SweepVariant> sweep_variants(const std::string& sweep, const ExperimentConfig& base);

struct AblationRow {
    std::string variant;
    std::uint64_t seed = 0;
    double mean = 0.0;
    double half_width = 0.0;
    double train_seconds = 0.0;
};

using AblationProgress = std::function<void(const AblationRow&)>;

/// Every variant on every seed, on freshly generated benchmark data.
std::vector<AblationRow> run_ablation(const ExperimentConfig& base, const std::string& sweep,
                                      std::span<const std::uint64_t> seeds, const AblationProgress& progress = {});

/// variant,seed,accuracy,half_width,train_seconds
std::string ablation_csv(const std::vector<AblationRow>& rows);
/// Per-variant mean accuracy over seeds, one line each.
std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace metaconcept
