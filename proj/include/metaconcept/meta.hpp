// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0
//
// Meta concept inference: per task, the graph module emits an initial
// classifier, the high-level encoder and that classifier are adapted by k
// gradient steps on the support set, and the query set is scored with the
// adapted pair. Meta-training minimizes the lambda-weighted sum of entity and
// per-level concept query losses with momentum SGD.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metaconcept/autodiff.hpp"
#include "metaconcept/dataset.hpp"
#include "metaconcept/encoder.hpp"
#include "metaconcept/gcim.hpp"
#include "metaconcept/graph.hpp"
#include "metaconcept/optim.hpp"
#include "metaconcept/rng.hpp"

namespace metaconcept {

struct ModelConfig {
    EncoderConfig encoder;
    GcimConfig gcim;
};

struct ModelParams {
    EncoderParams encoder;  ///< low = shared, high = task-adaptable
    GcimParams gcim;

    std::vector<Var> low() const { return stack_parameters(encoder.low); }
    std::vector<Var> high() const { return stack_parameters(encoder.high); }
    std::vector<Var> graph() const { return gcim_parameters(gcim); }
    /// low, high, graph, in that order. The order is the checkpoint layout.
    std::vector<Var> all() const;
    void zero_grad() const;
};

ModelParams init_model(const ModelConfig& cfg, std::size_t semantic_dim, Rng& rng);
/// Deep copy with fresh parameter leaves.
ModelParams clone_params(const ModelParams& params);

struct InnerLoopConfig {
    std::size_t steps = 5;
    double lr = 0.01;
    /// Differentiate through the inner-loop gradients. Off: the gradients are
    /// constants and the adapted parameters depend on their initialization
    /// through the additive update only.
    bool second_order = false;
};

/// Task-scoped adapted copies; never written back into ModelParams.
struct AdaptedState {
    LayerStack high;
    TaskClassifier classifier;
};

/// features * W^T + b
Var classifier_logits(const Var& features, const TaskClassifier& classifier);

/// k plain gradient steps on the support cross-entropy over {high, classifier}.
/// `support_low` is the low-level embedding of the support inputs. Throws
/// NumericalError naming the step if the support loss becomes non-finite.
AdaptedState inner_adapt(const LayerStack& high, const TaskClassifier& init, const Var& support_low,
                         std::span<const int> support_labels, const EncoderConfig& encoder,
                         const InnerLoopConfig& inner);

/// Class probabilities (batch x N) for query inputs under an adapted state.
Tensor predict(const ModelParams& params, const ModelConfig& cfg, const AdaptedState& adapted, const Tensor& x);

struct EpisodeOutcome {
    Var loss;  ///< query cross-entropy, differentiable w.r.t. all parameter groups
    double accuracy = 0.0;
};

/// Emit, adapt, score. `rng` drives dropout and may be null when !training.
EpisodeOutcome episode_loss(const ModelParams& params, const ModelConfig& cfg, const GraphContext& ctx,
                            const Episode& episode, const InnerLoopConfig& inner, Rng* rng, bool training);

/// Argmax accuracy of logits against labels; ties go to the lowest index.
double accuracy_of(const Tensor& logits, std::span<const int> labels);

struct TrainConfig {
    double lambda_e = 1.0;
    double lambda_c = 1.0;
    /// Per-level overrides of lambda_c.
    std::map<int, double> level_weights;
    double inner_lr = 0.01;
    double outer_lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    double lr_decay = 0.1;
    std::size_t lr_period = 5000;
    std::size_t k_train = 5;
    std::size_t iterations = 20000;
    EpisodeShape shape{5, 1, 15};
    std::size_t entity_batch = 1;
    std::size_t concept_batch = 1;
    bool second_order = false;
    std::uint64_t seed = 0;

    double weight_for_level(int level) const;
    void validate() const;
};

struct LevelMetrics {
    int level = 0;
    double loss = 0.0;
    double accuracy = 0.0;
};

struct StepMetrics {
    std::size_t iteration = 0;
    double lr = 0.0;
    double total_loss = 0.0;
    std::optional<double> entity_loss;
    std::optional<double> entity_accuracy;
    std::vector<LevelMetrics> concepts;
};

struct ConceptBatch {
    int level = 0;
    std::vector<Episode> episodes;
};

struct Objective {
    Var total;
    StepMetrics metrics;  ///< iteration and lr left at zero
};

/// lambda_e * mean(entity losses) + sum_l lambda_l * mean(level-l losses).
/// Terms with zero weight are not computed. Throws ConfigError when a term
/// with positive weight has no episodes, or when nothing is weighted.
Objective mlca_objective(const ModelParams& params, const ModelConfig& cfg, const GraphContext& ctx,
                         const std::vector<Episode>& entity, const std::vector<ConceptBatch>& concepts,
                         const TrainConfig& train, Rng* rng, bool training);

/// mlca_objective, backward, one SGD step at learning rate `lr`.
StepMetrics mlca_step(ModelParams& params, SgdState& optimizer, const ModelConfig& cfg, const GraphContext& ctx,
                      const std::vector<Episode>& entity, const std::vector<ConceptBatch>& concepts,
                      const TrainConfig& train, double lr, Rng* rng);

/**
 * Meta-training state. Episode sampling, dropout and initialization draw from
 * separate streams of the training seed, so configurations that differ only
 * in loss weights see the same entity episodes and the same initial weights.
 */
class Trainer {
public:
    Trainer(const ConceptGraph& graph, const Dataset& dataset, ModelConfig model, TrainConfig train);

    /// Runs one iteration and returns its metrics.
    StepMetrics step();
    std::size_t iteration() const noexcept { return iteration_; }
    double current_lr() const;

    const ModelParams& params() const noexcept { return params_; }
    const SgdState& optimizer() const noexcept { return optimizer_; }
    const ModelConfig& model_config() const noexcept { return model_; }
    const TrainConfig& train_config() const noexcept { return train_; }
    const std::vector<ConceptLevel>& concept_levels() const noexcept { return levels_; }

    void save_checkpoint(const std::filesystem::path& path, std::uint64_t config_hash) const;
    /// Restores parameters, optimizer, iteration and random streams. Throws
    /// DataError when the checkpoint was written under a different config hash.
    void load_checkpoint(const std::filesystem::path& path, std::uint64_t config_hash);

private:
    const ConceptGraph& graph_;
    const Dataset& dataset_;
    ModelConfig model_;
    TrainConfig train_;
    GraphContext ctx_;
    std::vector<ConceptLevel> levels_;
    ModelParams params_;
    SgdState optimizer_;
    std::size_t iteration_ = 0;
    Rng entity_rng_;
    Rng concept_rng_;
    Rng dropout_rng_;
};

struct TrainHooks {
    std::function<void(const StepMetrics&)> on_step;
    /// Checkpoint written every `checkpoint_every` iterations and at the end
    /// when non-empty.
    std::filesystem::path checkpoint_path;
    std::size_t checkpoint_every = 0;
    std::uint64_t config_hash = 0;
    /// Resume from this checkpoint when set; the log then holds only the new
    /// iterations.
    std::filesystem::path resume_from;
};

struct TrainResult {
    ModelParams params;
    SgdState optimizer;
    std::vector<StepMetrics> log;
    std::vector<ConceptLevel> concept_levels;
};

TrainResult train(const ConceptGraph& graph, const Dataset& dataset, const ModelConfig& model,
                  const TrainConfig& cfg, const TrainHooks& hooks = {});

struct EvalConfig {
    std::size_t episodes = 600;
    EpisodeShape shape{5, 1, 15};
    std::size_t k_test = 20;
    double inner_lr = 0.01;
    Split split = Split::meta_test;
    /// Concept level to evaluate; entity tasks when unset.
    std::optional<int> level;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

struct EvalResult {
    double mean = 0.0;
    double half_width = 0.0;
    std::vector<double> accuracies;
};

/// 1.96 * sample stddev / sqrt(n); zero for fewer than two values.
double ci_half_width(std::span<const double> values);
double mean_of(std::span<const double> values);

/// Accuracy of one episode with dropout off; reads `params` without
/// modifying them.
double evaluate_episode(const ModelParams& params, const ModelConfig& cfg, const GraphContext& ctx,
                        const Episode& episode, const InnerLoopConfig& inner);

/// Episodes are drawn sequentially from `seed`, then scored (in parallel when
/// workers > 1) against the frozen parameters; results are kept in episode
/// order.
EvalResult evaluate(const ModelParams& params, const ModelConfig& cfg, const ConceptGraph& graph,
                    const Dataset& dataset, const EvalConfig& eval);

/// Metrics log columns: iteration, lr, total_loss, entity_loss, entity_acc,
/// then concept_loss_l<l>, concept_acc_l<l> per concept level.
std::string metrics_csv_header(const std::vector<ConceptLevel>& levels);
std::string metrics_csv_row(const StepMetrics& m, const std::vector<ConceptLevel>& levels);

}  // namespace metaconcept
