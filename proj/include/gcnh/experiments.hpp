#pragma once

// Experiment drivers behind the command line tool. Each driver returns plain
// result structs; the *_to_json / *_csv helpers turn them into the files the
// tool writes. Every output carries schema_version. Wall-clock fields are
// the only values that may differ between two runs with the same seed.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gcnh/dataset.hpp"
#include "gcnh/synth.hpp"
#include "gcnh/train.hpp"

namespace gcnh {

/// Spearman rank correlation; tied values share their mean rank.
/// Throws InputError for fewer than 2 pairs or mismatched lengths, and
/// UndefinedRatioError when either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------- sweep

struct SweepGraph {
    double target = 0.0;
    std::size_t replicate = 0;
    SynthReport report;
    Dataset dataset;
};

/// `replicates` graphs per homophily target, in target-major order.
std::vector<SweepGraph> make_sweep_graphs(const std::vector<double>& targets,
                                          std::size_t replicates, const SynthConfig& base,
                                          std::uint64_t seed);

/// A named model family and the grid searched for it on every graph.
struct SweepModel {
    std::string label;
    HyperGrid grid;
};

/// MLP and GCN on the baseline grid, GCNH on the syn-cora grid.
std::vector<SweepModel> default_sweep_models(std::size_t num_nodes);

struct SweepRow {
    double target = 0.0;
    double achieved = 0.0;
    std::size_t replicate = 0;
    std::string model;
    std::size_t config_index = 0;  // chosen grid point
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<double> betas;
};

struct SweepSummary {
    double target = 0.0;
    std::string model;
    double mean_achieved = 0.0;
    double mean_test = 0.0;
    std::vector<double> mean_betas;  // per layer; empty for non-GCNH
};

struct SweepResult {
    std::vector<SweepRow> rows;        // graph-major, then model order
    std::vector<SweepSummary> summary;  // target-major, then model order

    /// Mean test accuracy of `model` at `target`; throws InputError if absent.
    double mean_test(double target, const std::string& model) const;
};

/// Grid search of every model on every graph (one split each); the grid
/// point with the best validation accuracy supplies the row.
SweepResult run_sweep(const std::vector<SweepGraph>& graphs, const std::vector<SweepModel>& models,
                      std::uint64_t seed, std::size_t workers = 1);

void write_sweep_csv(std::ostream& out, const SweepResult& result);
nlohmann::json to_json(const SweepResult& result);

/// Writes each graph to `dir`/<name> and a manifest.json of targets and
/// achieved ratios. Returns the manifest.
nlohmann::json write_sweep_graphs(const std::vector<SweepGraph>& graphs,
                                  const std::filesystem::path& dir);

// -------------------------------------------------------------- beta

struct BetaPoint {
    std::string dataset;
    double homophily = 0.0;  // achieved edge homophily
    std::vector<double> betas;
};

struct BetaReport {
    std::vector<BetaPoint> points;
    /// Over the synthetic sweep: correlation of first-layer beta (averaged per
    /// target) with 1 - h. Empty when fewer than two targets are present.
    std::optional<double> spearman_beta_vs_heterophily;
};

/// Collects GCNH rows of a sweep into a report.
BetaReport beta_report_from_sweep(const SweepResult& sweep, const std::string& gcnh_label = "GCNH");

nlohmann::json to_json(const BetaReport& report);

// ----------------------------------------------------------- variants

/// One row of an ablation or aggregation comparison.
struct Variant {
    std::string label;
    ModelConfig model;
    TrainConfig train;
};

struct VariantResult {
    std::string label;
    ModelConfig model;
    TrainConfig train;
    double mean_test = 0.0;
    double std_test = 0.0;
    std::vector<double> test_accuracies;  // dataset-major, then split
    std::vector<double> mean_betas;
};

/// GCN; GCNH with separate MLPs and beta fixed to 0.5; GCNH with learned beta.
/// `gcn` and `gcnh` carry the shared shape and training settings.
std::vector<Variant> ablation_variants(const Variant& gcn, const Variant& gcnh);

/// `gcnh` once per aggregation mode (SUM, MEAN, MAX).
std::vector<Variant> aggregation_variants(const Variant& gcnh);

/// Every variant on every split of every dataset. Dataset d trains with
/// seed train.seed + 1000 * d + split.
std::vector<VariantResult> compare_variants(const std::vector<const Dataset*>& datasets,
                                            const std::vector<Variant>& variants,
                                            std::size_t workers = 1);

nlohmann::json to_json(const std::vector<VariantResult>& rows);

// ------------------------------------------------------- oversmoothing

struct DepthRow {
    Architecture architecture = Architecture::GCN;
    std::size_t num_layers = 0;
    HyperGrid::Point chosen;
    double mean_val = 0.0;
    double mean_test = 0.0;
};

/// Batch 300, epochs {300, 500}, hidden {16, 32, 64}, dropout {0, 0.5}.
HyperGrid oversmoothing_grid();

/// For each architecture and depth, grid search with the depth pinned.
std::vector<DepthRow> run_oversmoothing(const Dataset& dataset, const HyperGrid& grid,
                                        const std::vector<Architecture>& architectures,
                                        const std::vector<std::size_t>& depths, std::uint64_t seed,
                                        std::size_t workers = 1);

nlohmann::json to_json(const std::vector<DepthRow>& rows);

// --------------------------------------------------------------- bench

struct BenchConfig {
    std::size_t epochs = 200;
    std::size_t runs = 10;  // split s % splits.size() for run s
    std::size_t num_layers = 1;
    std::size_t hidden_size = 16;
    std::vector<AggregationMode> aggregations{AggregationMode::Sum, AggregationMode::Max};
    std::uint64_t seed = 0;
};

struct BenchRow {
    AggregationMode aggregation = AggregationMode::Sum;
    std::size_t param_count = 0;
    double mean_test = 0.0;
    double total_ms = 0.0;        // all epochs of all runs, optimizer steps included
    double mean_epoch_ms = 0.0;
};

struct BenchResult {
    std::string dataset;
    std::size_t num_nodes = 0;
    std::size_t num_edges = 0;
    BenchConfig config;
    std::vector<BenchRow> rows;
};

/// Sequential on purpose: timings are per-core.
BenchResult run_bench(const Dataset& dataset, const BenchConfig& config);

/// Mean wall-clock milliseconds per training epoch of one run.
double mean_epoch_ms(const Dataset& dataset, const ModelConfig& model, const TrainConfig& train);

/// `include_timings` false drops every wall-clock field.
nlohmann::json to_json(const BenchResult& result, bool include_timings = true);

// ------------------------------------------------------------ homophily

/// Edge homophily, counts and the class edge matrix (rows of counts).
nlohmann::json homophily_json(const Dataset& dataset);

} // namespace gcnh
