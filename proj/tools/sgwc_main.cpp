#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sgwc/pipeline.hpp"
#include "sgwc/util.hpp"

namespace fs = std::filesystem;
using namespace sgwc;

namespace {

struct VerbArgs {
    std::string config_path, manifest, kind, cache_dir, out_dir;
    int q = 0, resolution = 0, k = 0, repetitions = 0, threads = 0;
    double epsilon = 0.0, test_fraction = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> c_grid;
    bool vocab_per_run = false;

    CLI::Option *o_manifest = nullptr, *o_q = nullptr, *o_resolution = nullptr,
                *o_k = nullptr, *o_epsilon = nullptr, *o_kind = nullptr,
                *o_test_fraction = nullptr, *o_repetitions = nullptr,
                *o_seed = nullptr, *o_c_grid = nullptr, *o_cache_dir = nullptr,
                *o_out_dir = nullptr, *o_threads = nullptr,
                *o_vocab_per_run = nullptr;
};

void add_common(CLI::App* cmd, VerbArgs& a)
{
    cmd->add_option("--config", a.config_path,
                    "JSON config file; explicit flags override its fields");
    a.o_manifest = cmd->add_option(
        "--manifest", a.manifest,
        "dataset manifest: CSV lines `path,class`, or a directory whose "
        "subdirectories are the classes");
    a.o_q = cmd->add_option("--q", a.q, "eigenpairs per mesh (capped at m-1)");
    a.o_resolution =
        cmd->add_option("--resolution", a.resolution, "wavelet resolution R");
    a.o_k = cmd->add_option("--k", a.k, "vocabulary size");
    a.o_epsilon = cmd->add_option("--epsilon", a.epsilon, "geodesic kernel width");
    a.o_kind = cmd->add_option("--kind", a.kind,
                               "descriptor kind: sgwc-bof, ga-bof-hks, shape-dna, "
                               "cshape-dna, gps-embedding");
    a.o_test_fraction = cmd->add_option("--test-fraction", a.test_fraction,
                                        "held-out fraction per class");
    a.o_repetitions = cmd->add_option("--repetitions", a.repetitions,
                                      "split/train/test repetitions");
    a.o_seed = cmd->add_option("--seed", a.seed, "base random seed");
    a.o_c_grid = cmd->add_option("--c-grid", a.c_grid,
                                 "SVM C candidates, comma separated")
                     ->delimiter(',');
    a.o_cache_dir = cmd->add_option(
        "--cache-dir", a.cache_dir,
        "cache root (default: $SGWC_CACHE_DIR, else <out-dir>/cache)");
    a.o_out_dir = cmd->add_option("--out-dir", a.out_dir, "output directory");
    a.o_threads =
        cmd->add_option("--threads", a.threads, "worker threads (0 = hardware)");
    a.o_vocab_per_run = cmd->add_flag(
        "--vocab-per-run", a.vocab_per_run,
        "rebuild the vocabulary from each repetition's train split");
}

ExperimentConfig resolve(const VerbArgs& a)
{
    ExperimentConfig cfg;
    if (!a.config_path.empty())
        cfg = config_from_json_file(a.config_path);
    if (a.o_manifest->count()) cfg.manifest = a.manifest;
    if (a.o_q->count()) cfg.q = a.q;
    if (a.o_resolution->count()) cfg.resolution = a.resolution;
    if (a.o_k->count()) cfg.vocab_size = a.k;
    if (a.o_epsilon->count()) cfg.epsilon = a.epsilon;
    if (a.o_kind->count()) cfg.kind = parse_kind(a.kind);
    if (a.o_test_fraction->count()) cfg.test_fraction = a.test_fraction;
    if (a.o_repetitions->count()) cfg.repetitions = a.repetitions;
    if (a.o_seed->count()) cfg.seed = a.seed;
    if (a.o_c_grid->count()) cfg.c_grid = a.c_grid;
    if (a.o_cache_dir->count()) cfg.cache_dir = a.cache_dir;
    if (a.o_out_dir->count()) cfg.out_dir = a.out_dir;
    if (a.o_threads->count()) cfg.threads = a.threads;
    if (a.o_vocab_per_run->count()) cfg.vocab_per_run = a.vocab_per_run;
    validate_config(cfg);
    return cfg;
}

void print_failures(const DescriptorStore& store)
{
    for (const auto& shape : store.shapes)
        if (!shape.error.empty())
            std::cerr << "failed: " << shape.path << ": " << shape.error << "\n";
}

int partial_exit(const DescriptorStore& store)
{
    return store.failure_count() > 0 ? 2 : 0;
}

int cmd_describe(const VerbArgs& a)
{
    PipelineContext ctx = make_context(resolve(a));
    ensure_described(ctx);
    save_timers(ctx.config.out_dir, ctx.timers);
    std::cout << "described " << ctx.store.successful().size() << "/"
              << ctx.store.shapes.size() << " shapes ("
              << ctx.timers.eigensolve_count << " eigensolves, "
              << ctx.timers.describe_seconds << " s)\n";
    print_failures(ctx.store);
    return partial_exit(ctx.store);
}

int cmd_vocab(const VerbArgs& a)
{
    PipelineContext ctx = make_context(resolve(a));
    if (!kind_uses_bof(ctx.config.kind)) {
        std::cout << "descriptor kind '" << kind_name(ctx.config.kind)
                  << "' has no vocabulary stage\n";
        return 0;
    }
    ensure_codebook(ctx);
    save_timers(ctx.config.out_dir, ctx.timers);
    std::cout << "codebook " << ctx.codebook->dimension() << "x"
              << ctx.codebook->k() << ", alpha " << ctx.codebook->alpha << " ("
              << ctx.timers.vocab_seconds << " s)\n";
    print_failures(ctx.store);
    return partial_exit(ctx.store);
}

int cmd_encode(const VerbArgs& a)
{
    PipelineContext ctx = make_context(resolve(a));
    ensure_dataset(ctx);
    save_timers(ctx.config.out_dir, ctx.timers);
    std::cout << "dataset " << ctx.dataset.X.rows() << "x" << ctx.dataset.X.cols()
              << " over " << ctx.dataset.class_count() << " classes ("
              << ctx.timers.encode_seconds << " s)\n";
    print_failures(ctx.store);
    return partial_exit(ctx.store);
}

int cmd_train(const VerbArgs& a)
{
    PipelineContext ctx = make_context(resolve(a));
    ensure_dataset(ctx);
    const double c_value = select_c(ctx.config, ctx.dataset, ctx.config.seed);
    const OvaSvmModel model =
        train_ova_svm(ctx.dataset, c_value, ctx.config.seed,
                      resolve_thread_count(ctx.config.threads));
    const fs::path model_path = fs::path(ctx.config.out_dir) / "model.bin";
    save_model(model_path.string(), model);
    save_timers(ctx.config.out_dir, ctx.timers);
    std::cout << "trained " << model.class_count() << "-class model (C=" << c_value
              << ") -> " << model_path.string() << "\n";
    print_failures(ctx.store);
    return partial_exit(ctx.store);
}

int cmd_evaluate(const VerbArgs& a)
{
    const ExperimentConfig cfg = resolve(a);
    const RunReport report = run_experiment(cfg);
    std::cout << report_summary((fs::path(cfg.out_dir) / "report.json").string());
    return report.failures.empty() ? 0 : 2;
}

int cmd_sweep(const VerbArgs& a, const std::vector<double>& eps_grid,
              const std::vector<int>& k_grid)
{
    const ExperimentConfig cfg = resolve(a);
    for (const auto& row : run_sweep(cfg, eps_grid, k_grid))
        std::cout << row << "\n";
    return 0;
}

int cmd_report(const VerbArgs& a)
{
    const ExperimentConfig cfg = resolve(a);
    std::cout << report_summary((fs::path(cfg.out_dir) / "report.json").string());
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"spectral graph wavelet shape classification pipeline"};
    app.require_subcommand(1);

    VerbArgs args[7];
    CLI::App* describe = app.add_subcommand(
        "describe", "compute and cache per-shape spectral descriptors");
    add_common(describe, args[0]);
    CLI::App* vocab =
        app.add_subcommand("vocab", "build the k-means vocabulary");
    add_common(vocab, args[1]);
    CLI::App* encode = app.add_subcommand(
        "encode", "encode every shape into the labeled feature matrix");
    add_common(encode, args[2]);
    CLI::App* train = app.add_subcommand(
        "train", "train a one-vs-all SVM on the full dataset and save it");
    add_common(train, args[3]);
    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "run the full repeated split/train/test experiment");
    add_common(evaluate, args[4]);
    CLI::App* sweep = app.add_subcommand(
        "sweep", "run the experiment over an (epsilon, k) grid");
    add_common(sweep, args[5]);
    std::vector<double> eps_grid;
    std::vector<int> k_grid;
    sweep->add_option("--epsilon-grid", eps_grid,
                      "epsilon values, comma separated")
        ->delimiter(',');
    sweep->add_option("--k-grid", k_grid, "vocabulary sizes, comma separated")
        ->delimiter(',');
    CLI::App* report = app.add_subcommand(
        "report", "print the summary of an existing report.json");
    add_common(report, args[6]);

    CLI11_PARSE(app, argc, argv);

    try {
        if (describe->parsed()) return cmd_describe(args[0]);
        if (vocab->parsed()) return cmd_vocab(args[1]);
        if (encode->parsed()) return cmd_encode(args[2]);
        if (train->parsed()) return cmd_train(args[3]);
        if (evaluate->parsed()) return cmd_evaluate(args[4]);
        if (sweep->parsed()) return cmd_sweep(args[5], eps_grid, k_grid);
        if (report->parsed()) return cmd_report(args[6]);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
