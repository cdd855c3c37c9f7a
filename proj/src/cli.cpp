// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0

#include "metaconcept/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "metaconcept/checkpoint.hpp"
#include "metaconcept/config.hpp"
#include "metaconcept/error.hpp"
#include "metaconcept/experiment.hpp"
#include "metaconcept/synthetic.hpp"

namespace metaconcept {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEffectiveConfig = "effective_config.json";
constexpr const char* kCheckpointName = "model.ckpt";

struct Options {
    std::string config_path;
    std::vector<std::string> overrides;

    // gen-data
    bool sidecar = false;
    // train
    bool resume = false;
    std::size_t log_every = 100;
    std::size_t checkpoint_every = 500;
    // eval
    std::string checkpoint;
    bool untrained = false;
    // inspect-graph
    std::string graph;
    // ablate
    std::string sweep;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

ExperimentConfig resolve_config(const Options& opt) {
    ExperimentConfig base = opt.config_path.empty() ? default_config() : load_config(opt.config_path);
    nlohmann::json doc = to_json(base);
    apply_overrides(doc, opt.overrides);
    ExperimentConfig cfg = config_from_json(doc);
    cfg.validate();
    return cfg;
}

fs::path dir_of(const fs::path& file) { return file.has_parent_path() ? file.parent_path() : fs::path("."); }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw ConfigError(std::string(what) + " path is empty");
    if (!fs::is_regular_file(path)) throw LoadError(std::string(what) + " file " + path + " does not exist");
}

std::string describe_summary(const ConceptGraph& graph) {
    const GraphSummary s = summarize(graph);
    std::ostringstream os;
    os << "nodes: " << s.nodes << "\n";
    os << "edges: " << s.edges << "\n";
    os << "levels: " << s.levels << "\n";
    os << "semantic dim: " << s.semantic_dim << "\n";
    for (std::size_t l = 0; l < s.nodes_per_level.size(); ++l) {
        os << "  level " << l << ": " << s.nodes_per_level[l] << " node(s)"
           << (static_cast<int>(l + 1) == s.levels ? " (entities)" : "") << "\n";
    }
    os << "splits:\n";
    for (const auto& [name, count] : s.split_counts) os << "  " << name << ": " << count << "\n";
    return os.str();
}

int cmd_gen_data(const Options& opt, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(opt);
    SyntheticData data = generate_synthetic(cfg.data);

    const fs::path graph_path = cfg.paths.graph;
    const fs::path dataset_path = cfg.paths.dataset;
    ensure_dir(dir_of(graph_path));
    ensure_dir(dir_of(dataset_path));
    save_graph(data.graph, graph_path, opt.sidecar ? SemanticsStorage::sidecar : SemanticsStorage::inline_values);
    save_dataset(data.dataset, dataset_path);

    std::ostringstream report;
    report << describe_summary(data.graph);
    report << "samples: " << data.dataset.size() << " x " << data.dataset.input_dim() << "\n";
    const fs::path summary_path = dir_of(graph_path) / "summary.txt";
    write_text(summary_path, report.str());
    save_config(cfg, dir_of(graph_path) / kEffectiveConfig);
    if (dir_of(dataset_path) != dir_of(graph_path)) save_config(cfg, dir_of(dataset_path) / kEffectiveConfig);

    out << report.str();
    out << "wrote " << graph_path.string() << ", " << dataset_path.string() << ", " << summary_path.string() << "\n";
    return kExitOk;
}

struct LoadedData {
    ConceptGraph graph;
    Dataset dataset;
};

LoadedData load_data(const ExperimentConfig& cfg) {
    require_file(cfg.paths.graph, "graph");
    require_file(cfg.paths.dataset, "dataset");
    LoadedData d{load_graph(cfg.paths.graph), load_dataset(cfg.paths.dataset)};
    d.dataset.validate_against(d.graph);
    if (d.dataset.input_dim() != cfg.model.encoder.input_dim) {
        throw DataError("dataset " + cfg.paths.dataset + " has feature width " + std::to_string(d.dataset.input_dim()) +
                        " but data.input_dim is " + std::to_string(cfg.model.encoder.input_dim));
    }
    return d;
}

int cmd_train(const Options& opt, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(opt);
    LoadedData data = load_data(cfg);

    const fs::path ckpt_dir = cfg.paths.checkpoint_dir;
    const fs::path metrics_dir = cfg.paths.metrics_dir;
    ensure_dir(ckpt_dir);
    ensure_dir(metrics_dir);
    save_config(cfg, ckpt_dir / kEffectiveConfig);
    save_config(cfg, metrics_dir / kEffectiveConfig);

    const fs::path ckpt = ckpt_dir / kCheckpointName;
    const fs::path csv_path = metrics_dir / "train_metrics.csv";
    TrainHooks hooks;
    hooks.checkpoint_path = ckpt;
    hooks.checkpoint_every = opt.checkpoint_every;
    hooks.config_hash = config_hash(cfg);
    const bool resuming = opt.resume && fs::exists(ckpt);
    if (resuming) hooks.resume_from = ckpt;

    std::vector<ConceptLevel> levels;
    if (cfg.train.lambda_c > 0.0 || !cfg.train.level_weights.empty()) {
        levels = usable_concept_levels(data.graph, data.dataset, cfg.train.shape);
    }
    std::ofstream csv(csv_path, resuming ? std::ios::app : std::ios::trunc);
    if (!csv) throw DataError("cannot write " + csv_path.string());
    if (!resuming || fs::file_size(csv_path) == 0) csv << metrics_csv_header(levels) << '\n';

    hooks.on_step = [&](const StepMetrics& m) {
        csv << metrics_csv_row(m, levels) << '\n';
        if (opt.log_every > 0 && (m.iteration % opt.log_every == 0 || m.iteration + 1 == cfg.train.iterations)) {
            char line[256];
            std::snprintf(line, sizeof line, "iter %6zu  lr %.4g  loss %.4f", m.iteration, m.lr, m.total_loss);
            out << line;
            if (m.entity_accuracy) out << "  entity acc " << *m.entity_accuracy;
            out << "\n" << std::flush;
        }
    };

    if (resuming) out << "resuming from " << ckpt.string() << "\n";
    train(data.graph, data.dataset, cfg.model, cfg.train, hooks);
    out << "wrote " << ckpt.string() << " and " << csv_path.string() << "\n";
    return kExitOk;
}

int cmd_eval(const Options& opt, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(opt);
    LoadedData data = load_data(cfg);

    Rng init_rng = Rng(cfg.train.seed).fork(10);
    ModelParams params = init_model(cfg.model, gcim_input_dim(data.graph, cfg.model.gcim), init_rng);
    if (!opt.untrained) {
        const std::string ckpt =
            opt.checkpoint.empty() ? (fs::path(cfg.paths.checkpoint_dir) / kCheckpointName).string() : opt.checkpoint;
        require_file(ckpt, "checkpoint");
        const CheckpointData stored = read_checkpoint(ckpt);
        if (stored.config_hash != config_hash(cfg)) {
            throw DataError("checkpoint " + ckpt + " was written under a different model or training config");
        }
        assign_parameters(params, stored.params);
    }

    const EvalResult r = evaluate(params, cfg.model, data.graph, data.dataset, cfg.eval);

    const fs::path metrics_dir = cfg.paths.metrics_dir;
    ensure_dir(metrics_dir);
    save_config(cfg, metrics_dir / kEffectiveConfig);
    std::string csv = "episode,accuracy\n";
    for (std::size_t i = 0; i < r.accuracies.size(); ++i) {
        char line[64];
        std::snprintf(line, sizeof line, "%zu,%.10g\n", i, r.accuracies[i]);
        csv += line;
    }
    const fs::path csv_path = metrics_dir / "eval_episodes.csv";
    write_text(csv_path, csv);

    char line[200];
    std::snprintf(line, sizeof line, "accuracy %.2f%% \xC2\xB1 %.2f%% (%zu-way %zu-shot, %zu episodes, %s)\n",
                  100.0 * r.mean, 100.0 * r.half_width, cfg.eval.shape.ways, cfg.eval.shape.shots,
                  r.accuracies.size(),
                  cfg.eval.level ? ("concept level " + std::to_string(*cfg.eval.level)).c_str() : "entities");
    out << line;
    out << "wrote " << csv_path.string() << "\n";
    return kExitOk;
}

int cmd_inspect(const Options& opt, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(opt);
    const std::string path = opt.graph.empty() ? cfg.paths.graph : opt.graph;
    require_file(path, "graph");
    const ConceptGraph graph = load_graph(path);
    out << "graph: " << path << "\n";
    out << describe_summary(graph);
    out << "validation: ok\n";
    return kExitOk;
}

int cmd_ablate(const Options& opt, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(opt);
    const auto variants = sweep_variants(opt.sweep, cfg);
    out << "sweep " << opt.sweep << ": " << variants.size() << " variant(s) x " << opt.seeds.size() << " seed(s)\n";

    const auto rows = run_ablation(cfg, opt.sweep, opt.seeds, [&](const AblationRow& r) {
        char line[160];
        std::snprintf(line, sizeof line, "  seed %-4llu %-16s %6.2f%% \xC2\xB1 %.2f%%  (%.1fs)\n",
                      static_cast<unsigned long long>(r.seed), r.variant.c_str(), 100.0 * r.mean,
                      100.0 * r.half_width, r.train_seconds);
        out << line << std::flush;
    });

    const fs::path metrics_dir = cfg.paths.metrics_dir;
    ensure_dir(metrics_dir);
    save_config(cfg, metrics_dir / kEffectiveConfig);
    const fs::path csv_path = metrics_dir / ("ablate_" + opt.sweep + ".csv");
    write_text(csv_path, ablation_csv(rows));
    out << ablation_table(rows);
    out << "wrote " << csv_path.string() << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Meta concept learning: synthetic data, training, evaluation and ablations"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("-c,--config", opt.config_path, "Experiment config (JSON); defaults apply when omitted")
        ->check(CLI::ExistingFile);
    app.add_option("-s,--set", opt.overrides, "Override a config field, e.g. --set train.iterations=500")
        ->take_all();
    app.fallthrough();

    auto* gen = app.add_subcommand("gen-data", "Generate the synthetic benchmark graph and dataset");
    gen->add_flag("--sidecar", opt.sidecar, "Store semantics in a binary file next to the graph");

    auto* trn = app.add_subcommand("train", "Meta-train and write checkpoints and a metrics CSV");
    trn->add_flag("--resume", opt.resume, "Continue from the checkpoint in paths.checkpoint_dir if present");
    trn->add_option("--log-every", opt.log_every, "Print progress every N iterations (0: never)");
    trn->add_option("--checkpoint-every", opt.checkpoint_every, "Write a checkpoint every N iterations");

    auto* evl = app.add_subcommand("eval", "Evaluate on sampled test episodes");
    evl->add_option("--checkpoint", opt.checkpoint, "Checkpoint file (default: paths.checkpoint_dir/model.ckpt)");
    evl->add_flag("--untrained", opt.untrained, "Evaluate freshly initialized parameters");

    auto* ins = app.add_subcommand("inspect-graph", "Validate a concept graph and print its structure");
    ins->add_option("--graph", opt.graph, "Graph file (default: paths.graph)");

    auto* abl = app.add_subcommand("ablate", "Run an ablation sweep on the synthetic benchmark");
    abl->add_option("sweep", opt.sweep, "mlca | semantics | partition | lambda_c | beta | weak_only")->required();
    abl->add_option("--seeds", opt.seeds, "Seeds shared by every variant")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*gen) return cmd_gen_data(opt, out);
        if (*trn) return cmd_train(opt, out);
        if (*evl) return cmd_eval(opt, out);
        if (*ins) return cmd_inspect(opt, out);
        if (*abl) return cmd_ablate(opt, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const DimensionError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace metaconcept
