// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include "metaconcept/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <map>

#include "metaconcept/error.hpp"
#include "metaconcept/synthetic.hpp"

namespace metaconcept {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg, const ConceptGraph& graph, const Dataset& dataset) {
    RunOutcome out;
    auto t0 = std::chrono::steady_clock::now();
    TrainResult trained = train(graph, dataset, cfg.model, cfg.train);
    out.train_seconds = seconds_since(t0);
    out.log = std::move(trained.log);

    t0 = std::chrono::steady_clock::now();
    out.eval = evaluate(trained.params, cfg.model, graph, dataset, cfg.eval);
    out.eval_seconds = seconds_since(t0);
    return out;
}

RunOutcome run_benchmark(const ExperimentConfig& cfg) {
    cfg.validate();
    SyntheticData data = generate_synthetic(cfg.data);
    return run_experiment(cfg, data.graph, data.dataset);
}

ExperimentConfig with_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    ExperimentConfig out = cfg;
    out.data.seed = seed;
    out.train.seed = seed;
    return out;
}

ExperimentConfig with_overrides(const ExperimentConfig& cfg, const std::vector<std::string>& overrides) {
    nlohmann::json doc = to_json(cfg);
    apply_overrides(doc, overrides);
    return config_from_json(doc);
}

std::vector<std::string> sweep_names() { return {"mlca", "semantics", "partition", "lambda_c", "beta", "weak_only"}; }

std::vector<SweepVariant> sweep_variants(const std::string& sweep, const ExperimentConfig& base) {
    std::vector<SweepVariant> out;
    if (sweep == "mlca") {
        out = {{"mlca", {"train.lambda_c=1.0"}}, {"no_mlca", {"train.lambda_c=0.0"}}};
    } else if (sweep == "semantics") {
        out = {{"embeddings", {"flags.semantics=embeddings"}}, {"one_hot", {"flags.semantics=one_hot"}}};
    } else if (sweep == "partition") {
        for (std::size_t l = 0; l <= base.model.encoder.total_layers(); ++l) {
            out.push_back({"L=" + std::to_string(l), {"encoder.low_layers=" + std::to_string(l)}});
        }
    } else if (sweep == "lambda_c") {
        for (const char* v : {"0.25", "0.5", "1.0", "1.5", "2.0", "2.5"}) {
            out.push_back({std::string("lambda_c=") + v, {std::string("train.lambda_c=") + v}});
        }
    } else if (sweep == "beta") {
        for (const char* v : {"0.1", "0.2", "0.4", "0.6", "0.8", "1.0"}) {
            out.push_back({std::string("beta=") + v, {std::string("gcim.beta=") + v}});
        }
    } else if (sweep == "weak_only") {
        out = {{"lambda_e=1", {"train.lambda_e=1.0", "train.lambda_c=1.0"}},
               {"lambda_e=0", {"train.lambda_e=0.0", "train.lambda_c=1.0"}}};
    } else {
        std::string names;
        for (const auto& n : sweep_names()) names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("unknown sweep '" + sweep + "' (expected one of: " + names + ")");
    }
    return out;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& base, const std::string& sweep,
                                      std::span<const std::uint64_t> seeds, const AblationProgress& progress) {
    const auto variants = sweep_variants(sweep, base);
    if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
    std::vector<ExperimentConfig> configs;
    for (const auto& v : variants) {
        configs.push_back(with_overrides(base, v.overrides));
        configs.back().validate();
    }

    std::vector<AblationRow> rows;
    for (std::uint64_t seed : seeds) {
        ExperimentConfig seeded = with_seed(base, seed);
        SyntheticData data = generate_synthetic(seeded.data);
        for (std::size_t i = 0; i < variants.size(); ++i) {
            RunOutcome r = run_experiment(with_seed(configs[i], seed), data.graph, data.dataset);
            AblationRow row{variants[i].label, seed, r.eval.mean, r.eval.half_width, r.train_seconds};
            if (progress) progress(row);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string out = "variant,seed,accuracy,half_width,train_seconds\n";
    for (const auto& r : rows) {
        out += r.variant + "," + std::to_string(r.seed) + "," + fmt("%.10g", r.mean) + "," +
               fmt("%.10g", r.half_width) + "," + fmt("%.3f", r.train_seconds) + "\n";
    }
    return out;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> acc;
    for (const auto& r : rows) {
        if (!acc.count(r.variant)) order.push_back(r.variant);
        acc[r.variant].push_back(r.mean);
    }
    std::string out;
    for (const auto& v : order) {
        const auto& xs = acc[v];
        char line[160];
        std::snprintf(line, sizeof line, "%-16s mean %6.2f%%  over %zu seed(s)\n", v.c_str(), 100.0 * mean_of(xs),
                      xs.size());
        out += line;
    }
    return out;
}

}  // namespace metaconcept
