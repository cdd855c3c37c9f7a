// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include "metaconcept/meta.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "metaconcept/error.hpp"

namespace metaconcept {

std::vector<Var> ModelParams::all() const {
    std::vector<Var> out = low();
    for (auto& v : high()) out.push_back(v);
    for (auto& v : graph()) out.push_back(v);
    return out;
}

void ModelParams::zero_grad() const {
    for (auto v : all()) v.zero_grad();
}

ModelParams init_model(const ModelConfig& cfg, std::size_t semantic_dim, Rng& rng) {
    ModelParams p;
    p.encoder = init_encoder(cfg.encoder, rng);
    p.gcim = init_gcim(cfg.gcim, semantic_dim, cfg.encoder.feature_dim(), rng);
    return p;
}

ModelParams clone_params(const ModelParams& params) {
    ModelParams out;
    out.encoder.low = clone_detached(params.encoder.low);
    out.encoder.high = clone_detached(params.encoder.high);
    out.gcim.embed = clone_detached(params.gcim.embed);
    out.gcim.relation = clone_detached(params.gcim.relation);
    out.gcim.output = {Var::parameter(params.gcim.output.weight.value()),
                       Var::parameter(params.gcim.output.bias.value())};
    return out;
}

Var classifier_logits(const Var& features, const TaskClassifier& classifier) {
    if (features.cols() != classifier.weight.cols()) {
        throw DimensionError("classifier expects " + std::to_string(classifier.weight.cols()) + " features, got " +
                             std::to_string(features.cols()));
    }
    return add_row_bias(matmul(features, transpose(classifier.weight)), classifier.bias);
}

AdaptedState inner_adapt(const LayerStack& high, const TaskClassifier& init, const Var& support_low,
                         std::span<const int> support_labels, const EncoderConfig& encoder,
                         const InnerLoopConfig& inner) {
    AdaptedState state{high, init};
    if (inner.steps == 0 || inner.lr == 0.0) return state;
    for (std::size_t step = 0; step < inner.steps; ++step) {
        std::vector<Var> targets = stack_parameters(state.high);
        targets.push_back(state.classifier.weight);
        targets.push_back(state.classifier.bias);
        std::vector<Var> updated(targets.size());
        try {
            Var logits = classifier_logits(embed_high(support_low, state.high, encoder), state.classifier);
            Var loss = softmax_cross_entropy(logits, support_labels);
            std::vector<Var> grads = grad(loss, targets, inner.second_order);
            for (std::size_t i = 0; i < targets.size(); ++i) updated[i] = sub(targets[i], scale(grads[i], inner.lr));
        } catch (const NumericalError& e) {
            throw NumericalError("inner-loop adaptation failed at step " + std::to_string(step + 1) + " of " +
                                 std::to_string(inner.steps) + " (lr " + std::to_string(inner.lr) + ", " +
                                 std::to_string(support_labels.size()) + " support samples): " + e.what());
        }
        for (std::size_t l = 0; l < state.high.size(); ++l) state.high[l] = {updated[2 * l], updated[2 * l + 1]};
        state.classifier = {updated[updated.size() - 2], updated.back()};
    }
    return state;
}

Tensor predict(const ModelParams& params, const ModelConfig& cfg, const AdaptedState& adapted, const Tensor& x) {
    GradModeGuard no_grad(false);
    Var features = embed_high(embed_low(Var::constant(x), params.encoder, cfg.encoder), adapted.high, cfg.encoder);
    return softmax_values(classifier_logits(features, adapted.classifier).value());
}

double accuracy_of(const Tensor& logits, std::span<const int> labels) {
    const std::size_t n = logits.rows(), c = logits.cols();
    if (labels.size() != n) throw DimensionError("accuracy: label count differs from row count");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j)
            if (logits(i, j) > logits(i, best)) best = j;
        if (static_cast<int>(best) == labels[i]) ++correct;
    }
    return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
}

EpisodeOutcome episode_loss(const ModelParams& params, const ModelConfig& cfg, const GraphContext& ctx,
                            const Episode& episode, const InnerLoopConfig& inner, Rng* rng, bool training) {
    if (episode.query_y.empty()) throw ConfigError("episode has an empty query set");
    const std::size_t d_feat = cfg.encoder.feature_dim();
    TaskClassifier init = infer_classifier(ctx, params.gcim, cfg.gcim, episode.class_ids, d_feat, rng, training);
    Var support_low = embed_low(Var::constant(episode.support_x), params.encoder, cfg.encoder);
    AdaptedState adapted = inner_adapt(params.encoder.high, init, support_low, episode.support_y, cfg.encoder, inner);
    Var query = embed_high(embed_low(Var::constant(episode.query_x), params.encoder, cfg.encoder), adapted.high,
                           cfg.encoder);
    Var logits = classifier_logits(query, adapted.classifier);
    EpisodeOutcome out;
    out.loss = softmax_cross_entropy(logits, episode.query_y);
    out.accuracy = accuracy_of(logits.value(), episode.query_y);
    return out;
}

// ---------------------------------------------------------------------------
// Objective and training

double TrainConfig::weight_for_level(int level) const {
    auto it = level_weights.find(level);
    return it != level_weights.end() ? it->second : lambda_c;
}

void TrainConfig::validate() const {
    if (!(lambda_e >= 0.0) || !(lambda_c >= 0.0)) throw ConfigError("train: lambda_e and lambda_c must be non-negative");
    for (const auto& [l, w] : level_weights)
        if (!(w >= 0.0)) throw ConfigError("train.level_weights: weight for level " + std::to_string(l) + " is negative");
    if (!(inner_lr >= 0.0) || !(outer_lr >= 0.0)) throw ConfigError("train: learning rates must be non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
    if (!(lr_decay > 0.0)) throw ConfigError("train.lr_decay must be positive");
    if (shape.ways < 2 || shape.shots == 0 || shape.queries == 0) {
        throw ConfigError("train: episodes need ways >= 2, shots >= 1 and queries >= 1");
    }
    if (entity_batch == 0 && lambda_e > 0.0) throw ConfigError("train.entity_batch must be positive when lambda_e > 0");
    if (concept_batch == 0 && lambda_c > 0.0) throw ConfigError("train.concept_batch must be positive when lambda_c > 0");
}

Objective mlca_objective(const ModelParams& params, const ModelConfig& cfg, const GraphContext& ctx,
                         const std::vector<Episode>& entity, const std::vector<ConceptBatch>& concepts,
                         const TrainConfig& train, Rng* rng, bool training) {
    const InnerLoopConfig inner{train.k_train, train.inner_lr, train.second_order};
    Objective obj;
    std::vector<Var> terms;

    auto batch_mean = [&](const std::vector<Episode>& eps, double& loss, double& acc) {
        std::vector<Var> losses;
        acc = 0.0;
        for (const auto& ep : eps) {
            auto out = episode_loss(params, cfg, ctx, ep, inner, rng, training);
            losses.push_back(out.loss);
            acc += out.accuracy;
        }
        acc /= static_cast<double>(eps.size());
        Var sum = losses.front();
        for (std::size_t i = 1; i < losses.size(); ++i) sum = add(sum, losses[i]);
        Var mean = scale(sum, 1.0 / static_cast<double>(eps.size()));
        loss = mean.value().item();
        return mean;
    };

    if (train.lambda_e > 0.0) {
        if (entity.empty()) throw ConfigError("lambda_e > 0 but the entity episode batch is empty");
        double loss = 0.0, acc = 0.0;
        Var mean = batch_mean(entity, loss, acc);
        obj.metrics.entity_loss = loss;
        obj.metrics.entity_accuracy = acc;
        terms.push_back(scale(mean, train.lambda_e));
    }
    for (const auto& batch : concepts) {
        const double w = train.weight_for_level(batch.level);
        if (w == 0.0) continue;
        if (batch.episodes.empty()) {
            throw ConfigError("concept batch for level " + std::to_string(batch.level) + " is empty");
        }
        LevelMetrics lm;
        lm.level = batch.level;
        Var mean = batch_mean(batch.episodes, lm.loss, lm.accuracy);
        obj.metrics.concepts.push_back(lm);
        terms.push_back(scale(mean, w));
    }
    if (terms.empty()) throw ConfigError("objective has no weighted terms (check lambda_e, lambda_c and the batches)");
    Var total = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
    obj.total = total;
    obj.metrics.total_loss = total.value().item();
    return obj;
}

StepMetrics mlca_step(ModelParams& params, SgdState& optimizer, const ModelConfig& cfg, const GraphContext& ctx,
                      const std::vector<Episode>& entity, const std::vector<ConceptBatch>& concepts,
                      const TrainConfig& train, double lr, Rng* rng) {
    Objective obj = mlca_objective(params, cfg, ctx, entity, concepts, train, rng, true);
    params.zero_grad();
    obj.total.backward();
    std::vector<Var> all = params.all();
    sgd_step(all, optimizer, {lr, train.momentum, train.weight_decay});
    obj.metrics.lr = lr;
    return obj.metrics;
}

Trainer::Trainer(const ConceptGraph& graph, const Dataset& dataset, ModelConfig model, TrainConfig train)
    : graph_(graph),
      dataset_(dataset),
      model_(std::move(model)),
      train_(std::move(train)),
      entity_rng_(Rng(train_.seed).fork(11)),
      concept_rng_(Rng(train_.seed).fork(12)),
      dropout_rng_(Rng(train_.seed).fork(13)) {
    train_.validate();
    model_.encoder.validate();
    if (dataset_.input_dim() != model_.encoder.input_dim) {
        throw DataError("dataset features have width " + std::to_string(dataset_.input_dim()) +
                        " but the encoder expects " + std::to_string(model_.encoder.input_dim));
    }
    dataset_.validate_against(graph_);
    ctx_ = make_graph_context(graph_, model_.gcim);
    if (train_.lambda_c > 0.0 || !train_.level_weights.empty()) levels_ = usable_concept_levels(graph_, dataset_, train_.shape);
    Rng init_rng = Rng(train_.seed).fork(10);
    params_ = init_model(model_, gcim_input_dim(graph_, model_.gcim), init_rng);
    if (train_.lambda_e > 0.0 && graph_.entities_in_split(Split::meta_train).size() < train_.shape.ways) {
        throw DataError("meta-train split has fewer than " + std::to_string(train_.shape.ways) + " entity classes");
    }
    bool any_concept = false;
    for (const auto& l : levels_) any_concept = any_concept || train_.weight_for_level(l.level) > 0.0;
    if (train_.lambda_e == 0.0 && !any_concept) {
        throw DataError("lambda_e = 0 and no concept level has enough weakly-labeled data to train on");
    }
}

double Trainer::current_lr() const {
    return step_decay_lr(train_.outer_lr, train_.lr_decay, train_.lr_period, iteration_);
}

StepMetrics Trainer::step() {
    std::vector<Episode> entity;
    if (train_.lambda_e > 0.0) {
        for (std::size_t b = 0; b < train_.entity_batch; ++b) {
            entity.push_back(sample_entity_episode(graph_, dataset_, Split::meta_train, train_.shape, entity_rng_));
        }
    }
    std::vector<ConceptBatch> concepts;
    for (const auto& level : levels_) {
        if (train_.weight_for_level(level.level) == 0.0) continue;
        ConceptBatch batch{level.level, {}};
        EpisodeShape shape = train_.shape;
        shape.ways = level.ways;
        for (std::size_t b = 0; b < train_.concept_batch; ++b) {
            batch.episodes.push_back(sample_concept_episode(graph_, dataset_, level.level, shape, concept_rng_));
        }
        concepts.push_back(std::move(batch));
    }
    const double lr = current_lr();
    StepMetrics m = mlca_step(params_, optimizer_, model_, ctx_, entity, concepts, train_, lr, &dropout_rng_);
    m.iteration = iteration_;
    ++iteration_;
    return m;
}

TrainResult train(const ConceptGraph& graph, const Dataset& dataset, const ModelConfig& model,
                  const TrainConfig& cfg, const TrainHooks& hooks) {
    Trainer trainer(graph, dataset, model, cfg);
    if (!hooks.resume_from.empty()) trainer.load_checkpoint(hooks.resume_from, hooks.config_hash);
    TrainResult result;
    while (trainer.iteration() < cfg.iterations) {
        StepMetrics m;
        try {
            m = trainer.step();
        } catch (const NumericalError& e) {
            throw NumericalError("training diverged at iteration " + std::to_string(trainer.iteration()) + ": " +
                                 e.what());
        }
        if (hooks.on_step) hooks.on_step(m);
        result.log.push_back(std::move(m));
        if (!hooks.checkpoint_path.empty() && hooks.checkpoint_every > 0 &&
            trainer.iteration() % hooks.checkpoint_every == 0) {
            trainer.save_checkpoint(hooks.checkpoint_path, hooks.config_hash);
        }
    }
    if (!hooks.checkpoint_path.empty()) trainer.save_checkpoint(hooks.checkpoint_path, hooks.config_hash);
    result.params = trainer.params();
    result.optimizer = trainer.optimizer();
    result.concept_levels = trainer.concept_levels();
    return result;
}

// ---------------------------------------------------------------------------
// Evaluation

double mean_of(std::span<const double> values) {
    if (values.empty()) return 0.0;
    // Neumaier summation: 600 copies of 0.2 average to exactly 0.2.
    double s = 0.0, c = 0.0;
    for (double v : values) {
        const double t = s + v;
        c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    return (s + c) / static_cast<double>(values.size());
}

double ci_half_width(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) return 0.0;
    const double mu = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - mu) * (v - mu);
    const double stddev = std::sqrt(ss / static_cast<double>(n - 1));
    return 1.96 * stddev / std::sqrt(static_cast<double>(n));
}

double evaluate_episode(const ModelParams& params, const ModelConfig& cfg, const GraphContext& ctx,
                        const Episode& episode, const InnerLoopConfig& inner) {
    const std::size_t d_feat = cfg.encoder.feature_dim();
    TaskClassifier init;
    Var support_low, query_low;
    {
        GradModeGuard no_grad(false);
        TaskClassifier emitted = infer_classifier(ctx, params.gcim, cfg.gcim, episode.class_ids, d_feat, nullptr, false);
        init = {Var::parameter(emitted.weight.value()), Var::parameter(emitted.bias.value())};
        support_low = embed_low(Var::constant(episode.support_x), params.encoder, cfg.encoder);
        query_low = embed_low(Var::constant(episode.query_x), params.encoder, cfg.encoder);
    }
    // Adapt task-local copies so the shared parameters are only ever read.
    LayerStack high = clone_detached(params.encoder.high);
    InnerLoopConfig first_order = inner;
    first_order.second_order = false;
    AdaptedState adapted = inner_adapt(high, init, support_low, episode.support_y, cfg.encoder, first_order);
    GradModeGuard no_grad(false);
    Var logits = classifier_logits(embed_high(query_low, adapted.high, cfg.encoder), adapted.classifier);
    return accuracy_of(logits.value(), episode.query_y);
}

EvalResult evaluate(const ModelParams& params, const ModelConfig& cfg, const ConceptGraph& graph,
                    const Dataset& dataset, const EvalConfig& eval) {
    if (eval.episodes == 0) throw ConfigError("eval.episodes must be positive");
    const GraphContext ctx = make_graph_context(graph, cfg.gcim);
    Rng rng(eval.seed);
    std::vector<Episode> episodes;
    episodes.reserve(eval.episodes);
    for (std::size_t i = 0; i < eval.episodes; ++i) {
        if (eval.level && *eval.level != graph.entity_level()) {
            episodes.push_back(sample_concept_episode(graph, dataset, *eval.level, eval.shape, rng));
        } else {
            episodes.push_back(sample_entity_episode(graph, dataset, eval.split, eval.shape, rng));
        }
    }
    const InnerLoopConfig inner{eval.k_test, eval.inner_lr, false};
    EvalResult result;
    result.accuracies.assign(episodes.size(), 0.0);
    const std::size_t workers = std::max<std::size_t>(1, std::min(eval.workers, episodes.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < episodes.size(); ++i)
            result.accuracies[i] = evaluate_episode(params, cfg, ctx, episodes[i], inner);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < episodes.size(); i += workers)
                        result.accuracies[i] = evaluate_episode(params, cfg, ctx, episodes[i], inner);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    result.mean = mean_of(result.accuracies);
    result.half_width = ci_half_width(result.accuracies);
    return result;
}

// ---------------------------------------------------------------------------
// Metrics log

namespace {

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : ""; }

}  // namespace

std::string metrics_csv_header(const std::vector<ConceptLevel>& levels) {
    std::string h = "iteration,lr,total_loss,entity_loss,entity_acc";
    for (const auto& l : levels) {
        h += ",concept_loss_l" + std::to_string(l.level) + ",concept_acc_l" + std::to_string(l.level);
    }
    return h;
}

std::string metrics_csv_row(const StepMetrics& m, const std::vector<ConceptLevel>& levels) {
    std::string row = std::to_string(m.iteration) + "," + fmt_num(m.lr) + "," + fmt_num(m.total_loss) + "," +
                      fmt_opt(m.entity_loss) + "," + fmt_opt(m.entity_accuracy);
    for (const auto& l : levels) {
        auto it = std::find_if(m.concepts.begin(), m.concepts.end(), [&](const LevelMetrics& x) { return x.level == l.level; });
        if (it != m.concepts.end()) {
            row += "," + fmt_num(it->loss) + "," + fmt_num(it->accuracy);
        } else {
            row += ",,";
        }
    }
    return row;
}

}  // namespace metaconcept
