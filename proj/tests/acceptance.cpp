// Copyright (c) 2026, MetaConcept contributors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. The benchmark criteria train 20 models on
// the desk-scale synthetic benchmark and take several minutes.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include "metaconcept/cli.hpp"
#include "metaconcept/config.hpp"
#include "metaconcept/experiment.hpp"
#include "metaconcept/gcim.hpp"
#include "support.hpp"

using namespace metaconcept;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::printf("criterion %2d %s: %s [%.1fs] %s\n", id, v.pass ? "PASS" : "FAIL", name.c_str(), secs,
                v.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string pct(double v) { return fmt("%.2f", 100.0 * v); }

GcimConfig small_gcim() {
    GcimConfig cfg;
    cfg.hop_widths = {5, 4};
    cfg.relation_widths = {6, 4};
    cfg.keep_prob = 1.0;
    return cfg;
}

std::vector<std::size_t> shuffled_identity(std::size_t n, Rng& rng) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    rng.shuffle(p);
    return p;
}

Tensor stacked(const TaskClassifier& c) { return concat_cols(c.weight, transpose(c.bias)).value(); }

// ---------------------------------------------------------------------------

Verdict gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::string worst_name;
    std::size_t checks = 0;
    for (const auto& op : mctest::op_catalog()) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const double e = mctest::op_fd_error(op, seed);
            ++checks;
            if (e > worst) {
                worst = e;
                worst_name = op.name;
            }
        }
    }
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const double e = mctest::episode_loss_fd_error(seed, {0, 0.0, false});
        ++checks;
        if (e > worst) {
            worst = e;
            worst_name = "episode_loss";
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst < 1e-4 && secs < 120.0, std::to_string(checks) + " checks, worst rel err " + fmt("%.2e", worst) +
                                              " (" + worst_name + "), " + fmt("%.1f", secs) + "s"};
}

Verdict message_passing() {
    GcimConfig analytic;
    analytic.hop_widths = {1};
    analytic.relation_widths = {1};
    analytic.activation = Activation::identity;
    analytic.keep_prob = 1.0;
    const ConceptGraph path = mctest::chain3({1.0, 2.0, 3.0});
    const LayerStack unit = {{Var::parameter(Tensor::scalar(1.0)), Var::parameter(Tensor::scalar(0.0))}};
    const Tensor z = graph_embed(make_graph_context(path, analytic), unit, analytic, nullptr, false).value();
    const double path_err = mctest::max_abs_diff(z, Tensor({3, 1}, std::vector<double>{1.5, 2.0, 2.5}));

    double oracle_err = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        const ConceptGraph g = mctest::random_hierarchy(rng, 12, 3);
        const GcimConfig cfg = small_gcim();
        GcimParams p = init_gcim(cfg, 3, 2, rng);
        for (auto& l : p.embed) l.bias.mutable_value() = mctest::random_tensor(1, l.bias.cols(), rng);
        Tensor expect = g.semantics();
        for (const auto& hop : p.embed)
            expect = mctest::brute_force_hop(g, expect, hop.weight.value(), hop.bias.value(), cfg.activation, cfg.slope);
        oracle_err = std::max(oracle_err,
                              mctest::max_abs_diff(graph_embed(make_graph_context(g, cfg), p.embed, cfg, nullptr, false).value(), expect));
    }
    return {path_err <= 1e-12 && oracle_err <= 1e-12,
            "path err " + fmt("%.1e", path_err) + ", oracle err " + fmt("%.1e", oracle_err) + " on 10 hierarchies"};
}

Verdict normalization() {
    double worst_excess = -1.0;
    for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
        Rng rng(seed);
        const ConceptGraph g = mctest::random_hierarchy(rng, 12, 3);
        GcimConfig cfg = small_gcim();
        cfg.beta = seed % 2 ? 0.2 : rng.uniform(0.0, 2.0);
        cfg.keep_prob = seed % 3 ? 1.0 : 0.9;
        const GcimParams p = init_gcim(cfg, 3, 4, rng);
        const std::size_t n = 1 + rng.index(std::min<std::size_t>(5, g.size()));
        const auto ids = rng.sample_without_replacement(g.size(), n);
        const Tensor c = stacked(infer_classifier(make_graph_context(g, cfg), p, cfg, ids, 4, &rng, seed % 3 == 0));
        for (std::size_t r = 0; r < c.rows(); ++r) {
            double sq = 0.0;
            for (std::size_t k = 0; k < c.cols(); ++k) sq += c(r, k) * c(r, k);
            worst_excess = std::max(worst_excess, std::sqrt(sq) - cfg.beta);
        }
    }

    GcimConfig unit;
    unit.hop_widths = {1};
    unit.relation_widths = {1};
    unit.beta = 0.2;
    const GraphContext ctx{Var::constant(Tensor::scalar(1.0)), Var::constant(Tensor::scalar(1.0))};
    const AffineLayer out{Var::parameter(Tensor::matrix({{3, 4}})), Var::parameter(Tensor::zeros(1, 2))};
    const std::vector<std::size_t> ids = {0};
    const TaskClassifier c = emit_classifier(ctx, Var::constant(Tensor::scalar(1.0)), out, unit, ids, 1);
    const double e345 = std::max(std::abs(c.weight.value().item() - 0.12), std::abs(c.bias.value().item() - 0.16));
    return {worst_excess <= 1e-9 && e345 <= 1e-15,
            "max(norm - beta) " + fmt("%.2e", worst_excess) + " over 1000 emissions, 3-4-5 err " + fmt("%.1e", e345)};
}

Verdict chance_level() {
    ExperimentConfig cfg = default_config();
    cfg.model.gcim.beta = 0.0;
    cfg.eval.k_test = 0;
    const SyntheticData data = generate_synthetic(cfg.data);
    Rng init = Rng(cfg.train.seed).fork(10);
    const ModelParams params = init_model(cfg.model, gcim_input_dim(data.graph, cfg.model.gcim), init);
    const GraphContext ctx = make_graph_context(data.graph, cfg.model.gcim);

    double loss_err = 0.0;
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const Episode ep = sample_entity_episode(data.graph, data.dataset, Split::meta_test, cfg.eval.shape, rng);
        const double l = episode_loss(params, cfg.model, ctx, ep, {0, 0.01, false}, nullptr, false).loss.value().item();
        loss_err = std::max(loss_err, std::abs(l - std::log(static_cast<double>(ep.ways()))));
    }
    const EvalResult r = evaluate(params, cfg.model, data.graph, data.dataset, cfg.eval);
    const double chance = 1.0 / static_cast<double>(cfg.eval.shape.ways);
    return {loss_err <= 1e-10 && std::abs(r.mean - chance) <= r.half_width,
            "loss err " + fmt("%.1e", loss_err) + ", accuracy " + pct(r.mean) + "% +- " + pct(r.half_width) +
                "% over " + std::to_string(r.accuracies.size()) + " episodes (chance " + pct(chance) + "%)"};
}

Episode reorder_classes(const Episode& ep, const std::vector<std::size_t>& order) {
    Episode out = ep;
    std::vector<int> new_label(ep.ways());
    for (std::size_t j = 0; j < order.size(); ++j) {
        out.class_ids[j] = ep.class_ids[order[j]];
        new_label[order[j]] = static_cast<int>(j);
    }
    for (auto& y : out.support_y) y = new_label[static_cast<std::size_t>(y)];
    for (auto& y : out.query_y) y = new_label[static_cast<std::size_t>(y)];
    return out;
}

Verdict equivariance() {
    double gcim_err = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        const ConceptGraph g = mctest::random_hierarchy(rng, 12, 3);
        const auto perm = shuffled_identity(g.size(), rng);
        const ConceptGraph h = relabel(g, perm);
        const GcimConfig cfg = small_gcim();
        const GcimParams p = init_gcim(cfg, 3, 4, rng);
        const std::size_t n = std::min<std::size_t>(1 + rng.index(5), g.size());
        const auto ids = rng.sample_without_replacement(g.size(), n);
        const auto order = shuffled_identity(n, rng);
        std::vector<std::size_t> mapped(n);
        for (std::size_t j = 0; j < n; ++j) mapped[j] = perm[ids[order[j]]];

        const Tensor a = stacked(infer_classifier(make_graph_context(g, cfg), p, cfg, ids, 4, nullptr, false));
        const Tensor b = stacked(infer_classifier(make_graph_context(h, cfg), p, cfg, mapped, 4, nullptr, false));
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < a.cols(); ++k) gcim_err = std::max(gcim_err, std::abs(b(j, k) - a(order[j], k)));
    }

    std::size_t mismatches = 0;
    const SyntheticData data = generate_synthetic(mctest::tiny_synthetic(3));
    const ModelConfig model = mctest::tiny_model();
    const GraphContext ctx = make_graph_context(data.graph, model.gcim);
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        const ModelParams params = init_model(model, data.graph.semantic_dim(), rng);
        const Episode ep = sample_entity_episode(data.graph, data.dataset, Split::meta_train, {5, 1, 5}, rng);
        const Episode re = reorder_classes(ep, shuffled_identity(ep.ways(), rng));
        const InnerLoopConfig inner{5, 0.1, false};
        if (evaluate_episode(params, model, ctx, ep, inner) != evaluate_episode(params, model, ctx, re, inner)) ++mismatches;
    }
    return {gcim_err <= 1e-12 && mismatches == 0,
            "relabel + class-order max diff " + fmt("%.1e", gcim_err) + " on 100 trials, accuracy mismatches " +
                std::to_string(mismatches) + "/100"};
}

// ---------------------------------------------------------------------------
// Benchmark

struct SeedRuns {
    std::uint64_t seed = 0;
    RunOutcome mlca, no_mlca, one_hot, weak_only;
};

std::vector<SeedRuns> benchmark_runs() {
    ExperimentConfig base = default_config();
    base.eval.workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<SeedRuns> runs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const ExperimentConfig cfg = with_seed(base, seed);
        const SyntheticData data = generate_synthetic(cfg.data);
        SeedRuns r;
        r.seed = seed;
        r.mlca = run_experiment(cfg, data.graph, data.dataset);
        r.no_mlca = run_experiment(with_overrides(cfg, {"train.lambda_c=0"}), data.graph, data.dataset);
        r.one_hot = run_experiment(with_overrides(cfg, {"flags.semantics=one_hot"}), data.graph, data.dataset);
        r.weak_only = run_experiment(with_overrides(cfg, {"train.lambda_e=0", "train.lambda_c=1"}), data.graph,
                                     data.dataset);
        std::printf("  seed %llu: mlca %s%%, no-mlca %s%%, one-hot %s%%, weak-only %s%%\n",
                    static_cast<unsigned long long>(seed), pct(r.mlca.eval.mean).c_str(),
                    pct(r.no_mlca.eval.mean).c_str(), pct(r.one_hot.eval.mean).c_str(),
                    pct(r.weak_only.eval.mean).c_str());
        std::fflush(stdout);
        runs.push_back(std::move(r));
    }
    return runs;
}

Verdict mlca_gap(const std::vector<SeedRuns>& runs) {
    int wins = 0;
    double seconds = 0.0;
    std::string gaps;
    for (const auto& r : runs) {
        const double gap = r.mlca.eval.mean - r.no_mlca.eval.mean;
        wins += gap >= 0.02;
        seconds += r.mlca.train_seconds + r.mlca.eval_seconds + r.no_mlca.train_seconds + r.no_mlca.eval_seconds;
        gaps += (gaps.empty() ? "" : " ") + fmt("%+.2f", 100.0 * gap);
    }
    return {wins >= 4 && seconds < 1800.0, "gaps [" + gaps + "] points, " + std::to_string(wins) +
                                               "/5 seeds >= 2, runtime " + fmt("%.0f", seconds) + "s"};
}

Verdict semantics_gap(const std::vector<SeedRuns>& runs) {
    int strictly = 0;
    double emb = 0.0, hot = 0.0;
    std::string gaps;
    for (const auto& r : runs) {
        strictly += r.mlca.eval.mean > r.one_hot.eval.mean;
        emb += r.mlca.eval.mean / runs.size();
        hot += r.one_hot.eval.mean / runs.size();
        gaps += (gaps.empty() ? "" : " ") + fmt("%+.2f", 100.0 * (r.mlca.eval.mean - r.one_hot.eval.mean));
    }
    return {emb >= hot - 0.005 && 2 * strictly > static_cast<int>(runs.size()),
            "mean embeddings " + pct(emb) + "% vs one-hot " + pct(hot) + "%, per-seed gaps [" + gaps + "], " +
                std::to_string(strictly) + "/5 strictly greater"};
}

Verdict weak_only(const std::vector<SeedRuns>& runs) {
    int wins = 0;
    std::string accs;
    for (const auto& r : runs) {
        wins += r.weak_only.eval.mean - 0.2 >= 0.10;
        accs += (accs.empty() ? "" : " ") + pct(r.weak_only.eval.mean);
    }
    return {wins == 5, "accuracies [" + accs + "]%, " + std::to_string(wins) + "/5 seeds >= chance + 10"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"metaconcept"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

Verdict determinism() {
    std::string csv[2][2];
    for (int run = 0; run < 2; ++run) {
        const fs::path dir = fs::temp_directory_path() / ("mc_accept_rerun" + std::to_string(run));
        fs::remove_all(dir);
        const std::vector<std::string> paths = {"--set",
                                                "paths.graph=" + (dir / "data/graph.json").string(),
                                                "paths.dataset=" + (dir / "data/dataset.bin").string(),
                                                "paths.checkpoint_dir=" + (dir / "ckpt").string(),
                                                "paths.metrics_dir=" + (dir / "metrics").string()};
        for (const char* cmd : {"gen-data", "train", "eval"}) {
            std::vector<std::string> args = paths;
            args.push_back(cmd);
            if (std::string(cmd) == "train") args.insert(args.end(), {"--log-every", "0"});
            if (const int code = cli(args); code != 0) return {false, std::string(cmd) + " exited " + std::to_string(code)};
        }
        csv[run][0] = slurp(dir / "metrics/train_metrics.csv");
        csv[run][1] = slurp(dir / "metrics/eval_episodes.csv");
    }
    const bool same = csv[0][0] == csv[1][0] && csv[0][1] == csv[1][1] && !csv[0][0].empty();
    return {same, "train_metrics.csv " + std::to_string(csv[0][0].size()) + " bytes " +
                      (csv[0][0] == csv[1][0] ? "identical" : "differ") + ", eval_episodes.csv " +
                      (csv[0][1] == csv[1][1] ? "identical" : "differ")};
}

double closed_form_half_width(const std::vector<double>& v) {
    const long double n = static_cast<long double>(v.size());
    long double s = 0, s2 = 0;
    for (double x : v) {
        s += x;
        s2 += static_cast<long double>(x) * x;
    }
    const long double var = (s2 - s * s / n) / (n - 1);
    return static_cast<double>(1.96L * std::sqrt(std::max(var, 0.0L)) / std::sqrt(n));
}

Verdict ci_formula(const std::vector<SeedRuns>& runs) {
    std::vector<std::vector<double>> cases;
    std::vector<double> half(600, 0.0);
    std::fill(half.begin(), half.begin() + 300, 1.0);
    cases.push_back(half);
    cases.push_back(std::vector<double>(600, 0.4));
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> v(600);
        for (auto& x : v) x = static_cast<double>(rng.index(76)) / 75.0;
        cases.push_back(std::move(v));
    }
    double worst = 0.0;
    for (const auto& v : cases) worst = std::max(worst, std::abs(ci_half_width(v) - closed_form_half_width(v)));
    for (const auto& r : runs)
        worst = std::max(worst, std::abs(r.mlca.eval.half_width - closed_form_half_width(r.mlca.eval.accuracies)));
    const double anchor = std::abs(ci_half_width(half) - 1.96 * std::sqrt(0.25 * 600.0 / 599.0) / std::sqrt(600.0));
    return {worst <= 1e-12 && anchor <= 1e-12, std::to_string(cases.size() + runs.size()) +
                                                   " vectors, max diff " + fmt("%.1e", worst) + " (0/1 split " +
                                                   fmt("%.4f", ci_half_width(half)) + ")"};
}

}  // namespace

int main() {
    report(2, "gradient correctness", gradients);
    report(3, "message-passing oracle", message_passing);
    report(4, "normalization contract", normalization);
    report(5, "chance-level exactness", chance_level);
    report(6, "equivariance", equivariance);

    std::vector<SeedRuns> runs;
    std::string bench_error;
    try {
        runs = benchmark_runs();
    } catch (const std::exception& e) {
        bench_error = e.what();
    }
    auto with_runs = [&](Verdict (*f)(const std::vector<SeedRuns>&)) {
        return [&, f]() -> Verdict {
            if (runs.size() != 5) return {false, "benchmark failed: " + bench_error};
            return f(runs);
        };
    };
    report(7, "MLCA improves entity accuracy", with_runs(mlca_gap));
    report(8, "semantic embeddings vs one-hot", with_runs(semantics_gap));
    report(9, "weak-only training beats chance", with_runs(weak_only));
    report(10, "rerun determinism", determinism);
    report(11, "confidence interval formula", with_runs(ci_formula));

    std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
