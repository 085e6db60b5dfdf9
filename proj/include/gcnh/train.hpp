#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "gcnh/dataset.hpp"
#include "gcnh/model.hpp"

namespace gcnh {

struct TrainConfig {
    double learning_rate = 5e-3;
    double weight_decay = 5e-3;
    std::size_t epochs = 200;
    /// nullopt means one batch holding the whole training set.
    std::optional<std::size_t> batch_size;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
    /// Batch-size weighted mean of the batch losses of the epoch.
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct RunResult {
    double test_accuracy = 0.0;
    double best_val_accuracy = 0.0;
    /// Zero-based epoch whose parameters produced test_accuracy.
    std::size_t best_epoch = 0;
    std::vector<double> betas;
    std::vector<double> epoch_times_ms;
    std::size_t param_count = 0;
    std::vector<EpochRecord> history;
    /// Parameters at best_epoch.
    Model best_model;
};

/// Fraction of nodes in `mask` whose predicted class matches the label.
/// Evaluation mode. Throws InputError on an empty mask.
double evaluate(const Model& model, const GraphInputs& inputs, const LabelVector& labels,
                std::span<const NodeId> mask);

/// Transductive training with full-graph batching: every batch forwards the
/// whole graph and takes the loss on the batch's training nodes only.
/// Parameters of the epoch with the highest validation accuracy (earliest on
/// ties) are used for the test accuracy. Throws NonFiniteError naming the
/// epoch and batch when a loss or gradient stops being finite.
RunResult train(const Dataset& dataset, const GraphInputs& inputs, const SplitMask& split,
                const ModelConfig& model_config, const TrainConfig& train_config);

RunResult train(const Dataset& dataset, const SplitMask& split, const ModelConfig& model_config,
                const TrainConfig& train_config);

struct ProtocolResult {
    double mean_test = 0.0;
    double std_test = 0.0;  // sample standard deviation
    double mean_val = 0.0;
    std::vector<RunResult> runs;  // one per split
};

/// Trains once per split of the dataset, with seed + split_index.
ProtocolResult run_protocol(const Dataset& dataset, const ModelConfig& model_config,
                            const TrainConfig& train_config, std::size_t workers = 1);

/// Candidate values per configuration field. The Cartesian product is
/// enumerated with `architectures` outermost and `betas` innermost.
struct HyperGrid {
    std::vector<Architecture> architectures{Architecture::GCNH};
    std::vector<std::size_t> num_layers{1};
    std::vector<std::optional<std::size_t>> batch_sizes{std::nullopt};
    std::vector<std::size_t> epochs{200};
    std::vector<std::size_t> hidden_sizes{16};
    std::vector<double> dropout_rates{0.0};
    std::vector<AggregationMode> aggregations{AggregationMode::Sum};
    std::vector<bool> share_mlps{false};
    /// nullopt = learned beta, a value = beta fixed to it.
    std::vector<std::optional<double>> betas{std::nullopt};
    std::vector<double> learning_rates{5e-3};
    std::vector<double> weight_decays{5e-3};

    struct Point {
        ModelConfig model;
        TrainConfig train;
    };
    std::vector<Point> expand(std::uint64_t seed) const;
    std::size_t size() const;
};

struct GridResult {
    std::vector<HyperGrid::Point> points;
    std::vector<ProtocolResult> results;
    std::size_t best_index = 0;
    std::vector<std::size_t> param_counts;

    const ProtocolResult& best() const { return results[best_index]; }
};

/// Runs the protocol for every grid point and selects the highest mean
/// validation accuracy (ties: fewer parameters, then grid order).
GridResult grid_search(const Dataset& dataset, const HyperGrid& grid, std::uint64_t seed,
                       std::size_t workers = 1);

/// Table-of-hyperparameters grids for the benchmark datasets ("cornell",
/// "texas", "wisconsin", "film", "chameleon", "squirrel", "cora", "citeseer",
/// "syn-cora"). `num_nodes` resolves the full-batch option. GCNH, sum.
HyperGrid published_grid(std::string_view dataset, std::size_t num_nodes);

/// Best configuration reported for a benchmark dataset.
HyperGrid::Point published_best_config(std::string_view dataset, std::size_t num_nodes,
                                   std::uint64_t seed);

/// MLP/GCN grid used on the synthetic sweep: 100 epochs, 1-3 layers, hidden 16 or 32.
HyperGrid baseline_synth_grid(Architecture arch);

// Serialization. Every JSON/CSV output carries a schema_version field.
inline constexpr int kResultSchemaVersion = 1;

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunResult& result, bool include_timings = true);
nlohmann::json to_json(const HyperGrid& grid);
HyperGrid hyper_grid_from_json(const nlohmann::json& j);

/// One row per (grid point, split).
void write_grid_csv(std::ostream& out, const GridResult& result);
std::string grid_csv_header();

/// Parallel map over [0, count) with `workers` threads; results keep index order.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn);

} // namespace gcnh

#include "gcnh/detail/parallel.hpp"
