#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gcnh/dataset.hpp"

namespace gcnh {

/// Donor rows from which synthetic node features are copied.
struct FeaturePool {
    Matrix features;
    LabelVector labels;

    /// Rows of each class, indexed by label.
    std::vector<std::vector<std::size_t>> rows_by_class() const;
};

/// Pool built from an existing dataset (all of its nodes).
FeaturePool pool_from_dataset(const Dataset& dataset);

/// Parameters of the built-in bag-of-words pool used when no donor dataset
/// is supplied. Each class owns a random set of topic words; a row switches
/// each word on with `topic_rate` inside its class topic and `background_rate`
/// elsewhere. The default rates make a 1-layer MLP score about 76% on the
/// generated graphs, close to an MLP on Cora.
struct SurrogatePoolConfig {
    std::size_t num_classes = 5;
    std::size_t rows_per_class = 300;
    std::size_t num_features = 256;
    std::size_t topic_words = 24;
    double topic_rate = 0.12;
    double background_rate = 0.03;
    std::uint64_t seed = 7;
};

FeaturePool make_surrogate_pool(const SurrogatePoolConfig& config);

struct SynthConfig {
    std::size_t num_nodes = 1490;
    std::size_t edges_per_new_node = 2;
    double target_homophily = 0.5;
    std::size_t num_classes = 5;
    std::uint64_t seed = 0;
    std::shared_ptr<const FeaturePool> feature_pool;
    std::string name = "syn";
};

struct SynthReport {
    /// Edges whose endpoint had to be drawn by degree alone because no
    /// compatible candidate was left.
    std::size_t fallback_edges = 0;
    double achieved_homophily = 0.0;
};

/// Class-compatibility weighted preferential attachment.
///
/// Starts from a clique with one node per class. Each later node draws its
/// class uniformly and attaches to `edges_per_new_node` distinct earlier
/// nodes v with probability proportional to deg(v) * compat(c_u, c_v), where
/// compat is h for equal classes and (1 - h) / (|C| - 1) otherwise. Features
/// are copied from a random pool row of the same class. One 50/20/30 split
/// is attached.
Dataset generate_synthetic(const SynthConfig& config, SynthReport* report = nullptr);

/// Homophily targets 0.0, 0.1, ..., 1.0.
std::vector<double> default_homophily_grid();

/// `graphs_per_h` graphs per target; names encode target and replicate.
std::vector<Dataset> homophily_sweep_generate(const std::vector<double>& targets,
                                              std::size_t graphs_per_h, const SynthConfig& base,
                                              std::uint64_t seed,
                                              std::vector<SynthReport>* reports = nullptr);

std::string sweep_dataset_name(double target, std::size_t replicate);

} // namespace gcnh
