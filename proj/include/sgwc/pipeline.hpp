#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgwc/bof.hpp"
#include "sgwc/classify.hpp"

namespace sgwc {

enum class DescriptorKind { SgwcBof, GaBofHks, ShapeDna, CShapeDna, GpsEmbedding };

std::string kind_name(DescriptorKind kind);
DescriptorKind parse_kind(const std::string& name);
bool kind_uses_bof(DescriptorKind kind);

struct ExperimentConfig {
    std::string manifest;        // CSV manifest or class-per-directory root
    int q = 201;                 // eigenpairs per mesh (capped at m-1)
    int resolution = 2;          // wavelet resolution R
    int vocab_size = 128;        // codewords k
    double epsilon = 0.1;        // geodesic kernel width
    DescriptorKind kind = DescriptorKind::SgwcBof;
    double test_fraction = 0.5;
    int repetitions = 10;
    std::uint64_t seed = 42;
    std::vector<double> c_grid = {1.0};  // >1 entry: 5-fold CV on the train split
    std::string cache_dir;       // empty: $SGWC_CACHE_DIR, else <out_dir>/cache
    std::string out_dir = "sgwc-out";
    int threads = 0;             // 0 = hardware concurrency
    bool vocab_per_run = false;  // rebuild the codebook from each train split
};

void validate_config(const ExperimentConfig& config);
std::string resolved_cache_dir(const ExperimentConfig& config);

/// Serialized with the same field names the CLI flags use.
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json_file(const std::string& path);

struct DatasetManifest {
    std::vector<std::string> paths;
    std::vector<int> labels;                // 1-based, aligned with paths
    std::vector<std::string> class_names;   // sorted unique
};

/// CSV lines `path,class` (paths relative to the manifest's directory), or a
/// directory whose immediate subdirectories are the classes.
DatasetManifest load_manifest(const std::string& path);

/// Wall clock per stage plus the observable work counters the cache contract
/// is tested against.
struct RunTimers {
    double describe_seconds = 0.0;
    double vocab_seconds = 0.0;
    double encode_seconds = 0.0;
    double evaluate_seconds = 0.0;
    int eigensolve_count = 0;  // cache misses that ran the solver
};

void save_timers(const std::string& out_dir, const RunTimers& timers);
RunTimers load_timers(const std::string& out_dir);

/// Per-shape spectral features retained in memory after `describe`.
/// Eigenfunctions stay on disk in the cache; `local` is the p x m descriptor
/// bank (wavelet signatures, or heat signatures for the GA baseline), left
/// empty for the global-vector kinds.
struct ShapeFeatures {
    std::string path;
    int label = 0;
    std::uint64_t content_hash = 0;
    double total_area = 0.0;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd local;
    std::string error;  // nonempty: this shape failed and is excluded
};

struct DescriptorStore {
    std::vector<ShapeFeatures> shapes;  // manifest order
    std::vector<std::string> class_names;
    double bank_lambda_max = 0.0;  // from the first successful shape

    std::uint64_t content_hash(const ExperimentConfig& config) const;
    std::vector<int> successful() const;  // indices with no error
    int failure_count() const;
};

// ---- Pure pipeline stages ----

DescriptorStore run_describe(const ExperimentConfig& config,
                             const DatasetManifest& manifest, RunTimers& timers);

/// K-means codebook over the concatenated descriptor banks of the given
/// shapes (default: all successful ones).
Codebook run_vocab(const ExperimentConfig& config, const DescriptorStore& store,
                   RunTimers& timers, const std::vector<int>* shape_subset = nullptr,
                   std::optional<std::uint64_t> seed_override = std::nullopt);

/// Feature matrix assembly: BoF kinds encode against `codebook`; global
/// kinds ignore it and stack their spectral vectors. Shapes that fail here
/// get their error recorded in the store and are excluded.
LabeledDataset run_encode(const ExperimentConfig& config, DescriptorStore& store,
                          const Codebook* codebook, RunTimers& timers);

struct RunReport {
    std::vector<double> accuracies;  // one per repetition
    std::vector<double> chosen_c;
    double mean_accuracy = 0.0;
    double min_accuracy = 0.0;
    double max_accuracy = 0.0;
    ConfusionMatrix aggregate;  // summed over repetitions
    std::vector<std::string> class_names;
    std::vector<std::string> failures;
    RunTimers timers;
};

/// Repetition loop: split / (optional per-run vocab+encode) / train / test.
RunReport run_evaluate(const ExperimentConfig& config, DescriptorStore& store,
                       const LabeledDataset& dataset, RunTimers& timers);

/// First grid entry, or the winner of stratified 5-fold cross-validation on
/// `data` when the grid has several candidates (ties to the earlier entry).
double select_c(const ExperimentConfig& config, const LabeledDataset& data,
                std::uint64_t seed);

// ---- Cached orchestration used by the CLI verbs ----

/// Stage products accumulated across verbs; persisted artifacts under
/// out_dir are reused when their content fingerprints still match.
struct PipelineContext {
    ExperimentConfig config;
    DatasetManifest manifest;
    DescriptorStore store;
    std::optional<Codebook> codebook;
    LabeledDataset dataset;
    RunTimers timers;
    bool described = false;
    bool encoded = false;
};

PipelineContext make_context(const ExperimentConfig& config);
void ensure_described(PipelineContext& ctx);
void ensure_codebook(PipelineContext& ctx);  // no-op for global kinds
void ensure_dataset(PipelineContext& ctx);

/// report.json, confusion.csv, accuracy.csv under out_dir.
void write_report(const ExperimentConfig& config, const RunReport& report);
std::string report_summary(const std::string& report_json_path);

/// Full pipeline for one configuration: describe, vocabulary, encode,
/// evaluate, artifacts. Returns the report.
RunReport run_experiment(const ExperimentConfig& config);

/// One full run per (epsilon, k) grid cell, reports under
/// out_dir/sweep/<cell>/, plus a sweep.csv summary. Returns the summary rows.
std::vector<std::string> run_sweep(const ExperimentConfig& base,
                                   const std::vector<double>& epsilon_grid,
                                   const std::vector<int>& k_grid);

// Internal persistence used to compose verbs across processes.
void save_dataset(const std::string& path, const LabeledDataset& data,
                  std::uint64_t params_hash);
LabeledDataset load_dataset(const std::string& path, std::uint64_t* params_hash);

}  // namespace sgwc
