#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace gcnh {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Immutable undirected graph in CSR form.
///
/// Every undirected edge {u, v} is stored twice (u -> v and v -> u).
/// Neighbor lists are sorted ascending, duplicate-free and never contain
/// the node itself.
class Graph {
public:
    Graph() = default;

    /// Symmetrizes, deduplicates and drops self-loops.
    /// Throws InputError if an endpoint is >= num_nodes.
    static Graph from_edges(std::span<const Edge> edges, std::size_t num_nodes);

    std::size_t num_nodes() const noexcept { return num_nodes_; }
    /// Number of undirected edges |E|.
    std::size_t num_edges() const noexcept { return neighbors_.size() / 2; }

    std::span<const NodeId> neighbors(NodeId u) const noexcept {
        return {neighbors_.data() + offsets_[u], neighbors_.data() + offsets_[u + 1]};
    }
    std::size_t degree(NodeId u) const noexcept { return offsets_[u + 1] - offsets_[u]; }

    std::span<const std::size_t> offsets() const noexcept { return offsets_; }
    std::span<const NodeId> adjacency() const noexcept { return neighbors_; }

    /// Each undirected edge once, as (u, v) with u < v, in CSR order.
    std::vector<Edge> edge_list() const;

    bool operator==(const Graph&) const = default;

private:
    std::size_t num_nodes_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> neighbors_;
};

inline Graph build_graph(std::span<const Edge> edges, std::size_t num_nodes) {
    return Graph::from_edges(edges, num_nodes);
}

inline std::size_t degree(const Graph& g, NodeId u) { return g.degree(u); }

struct LabelVector {
    std::vector<std::int32_t> labels;
    std::size_t num_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::int32_t operator[](std::size_t u) const noexcept { return labels[u]; }

    /// Throws InputError unless num_classes >= 2 and all labels are in range.
    void validate() const;

    bool operator==(const LabelVector&) const = default;
};

struct HomophilyReport {
    double edge_homophily = 0.0;
    std::size_t same_label_edges = 0;
    std::size_t total_edges = 0;
};

/// Fraction of undirected edges whose endpoints share a label.
/// Throws UndefinedRatioError on an edgeless graph.
HomophilyReport edge_homophily(const Graph& graph, const LabelVector& labels);

/// Symmetric |C| x |C| matrix of undirected edge counts by endpoint class
/// (row-major). Same-class edges are counted once on the diagonal.
std::vector<std::size_t> class_edge_matrix(const Graph& graph, const LabelVector& labels);

/// D^{-1/2} (A + I) D^{-1/2} in CSR form, where D counts the self-loop.
/// Row u holds u itself and its neighbors, sorted by column.
struct NormalizedAdjacency {
    std::size_t num_nodes = 0;
    std::vector<std::size_t> offsets;
    std::vector<NodeId> columns;
    std::vector<double> weights;

    /// Entry (u, v), zero when not stored.
    double at(NodeId u, NodeId v) const;
};

NormalizedAdjacency normalized_adjacency(const Graph& graph);

} // namespace gcnh
