#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gcnh/graph.hpp"
#include "gcnh/matrix.hpp"

namespace gcnh {

/// One transductive train/validation/test partition (dense node indices).
struct SplitMask {
    std::vector<NodeId> train;
    std::vector<NodeId> val;
    std::vector<NodeId> test;

    /// Throws InputError unless the three sets are nonempty, pairwise
    /// disjoint and inside [0, num_nodes).
    void validate(std::size_t num_nodes) const;

    bool operator==(const SplitMask&) const = default;
};

struct Dataset {
    std::string name;
    Graph graph;
    Matrix features;  // n x f
    LabelVector labels;
    std::vector<SplitMask> splits;
    /// Original node identifiers in load order; node_ids[u] names dense node u.
    std::vector<std::string> node_ids;

    std::size_t num_nodes() const noexcept { return graph.num_nodes(); }
    std::size_t num_features() const noexcept { return features.cols(); }
    std::size_t num_classes() const noexcept { return labels.num_classes; }

    /// Checks row counts, labels, feature width >= 1 and every split.
    void validate() const;

    bool operator==(const Dataset&) const = default;
};

/// Reads nodes.tsv, edges.tsv and splits.json from `dir`.
///
/// Distinct error types: MissingFileError, MalformedLineError (carries the
/// line number), LabelOutOfRangeError, SplitIndexOutOfRangeError.
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes the three canonical files. Output bytes depend only on the
/// dataset contents. Throws InputError for f = 0 and IoError on write failure.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// `count` random splits of [0, n): floor(r0 * n) train, floor(r1 * n)
/// validation, the remainder test. Throws InputError for n < 10 or ratios
/// not summing to 1.
std::vector<SplitMask> generate_splits(std::size_t n, std::array<double, 3> ratios,
                                       std::size_t count, std::uint64_t seed);

inline constexpr std::array<double, 3> kBenchmarkSplitRatios{0.48, 0.32, 0.20};
inline constexpr std::array<double, 3> kSyntheticSplitRatios{0.50, 0.20, 0.30};

} // namespace gcnh
