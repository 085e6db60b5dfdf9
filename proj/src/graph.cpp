#include "gcnh/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gcnh/error.hpp"

namespace gcnh {

Graph Graph::from_edges(std::span<const Edge> edges, std::size_t num_nodes) {
    std::vector<Edge> directed;
    directed.reserve(edges.size() * 2);
    for (const auto& [u, v] : edges) {
        if (u >= num_nodes || v >= num_nodes) {
            throw InputError("build_graph: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                             ") out of range for " + std::to_string(num_nodes) + " nodes");
        }
        if (u == v) {
            continue;
        }
        directed.emplace_back(u, v);
        directed.emplace_back(v, u);
    }
    std::sort(directed.begin(), directed.end());
    directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

    Graph g;
    g.num_nodes_ = num_nodes;
    g.offsets_.assign(num_nodes + 1, 0);
    g.neighbors_.reserve(directed.size());
    for (const auto& [u, v] : directed) {
        ++g.offsets_[u + 1];
        g.neighbors_.push_back(v);
    }
    for (std::size_t u = 0; u < num_nodes; ++u) {
        g.offsets_[u + 1] += g.offsets_[u];
    }
    return g;
}

std::vector<Edge> Graph::edge_list() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (NodeId u = 0; u < num_nodes_; ++u) {
        for (NodeId v : neighbors(u)) {
            if (u < v) {
                out.emplace_back(u, v);
            }
        }
    }
    return out;
}

void LabelVector::validate() const {
    if (num_classes < 2) {
        throw InputError("labels: need at least 2 classes, got " + std::to_string(num_classes));
    }
    for (std::size_t u = 0; u < labels.size(); ++u) {
        if (labels[u] < 0 || static_cast<std::size_t>(labels[u]) >= num_classes) {
            throw InputError("labels: label " + std::to_string(labels[u]) + " of node " +
                             std::to_string(u) + " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
}

HomophilyReport edge_homophily(const Graph& graph, const LabelVector& labels) {
    if (labels.size() != graph.num_nodes()) {
        throw InputError("edge_homophily: label count does not match node count");
    }
    if (graph.num_edges() == 0) {
        throw UndefinedRatioError("edge_homophily: graph has no edges");
    }
    HomophilyReport report;
    for (NodeId u = 0; u < graph.num_nodes(); ++u) {
        for (NodeId v : graph.neighbors(u)) {
            if (u < v && labels[u] == labels[v]) {
                ++report.same_label_edges;
            }
        }
    }
    report.total_edges = graph.num_edges();
    report.edge_homophily =
        static_cast<double>(report.same_label_edges) / static_cast<double>(report.total_edges);
    return report;
}

std::vector<std::size_t> class_edge_matrix(const Graph& graph, const LabelVector& labels) {
    const std::size_t c = labels.num_classes;
    std::vector<std::size_t> counts(c * c, 0);
    for (const auto& [u, v] : graph.edge_list()) {
        const auto a = static_cast<std::size_t>(labels[u]);
        const auto b = static_cast<std::size_t>(labels[v]);
        ++counts[a * c + b];
        if (a != b) {
            ++counts[b * c + a];
        }
    }
    return counts;
}

double NormalizedAdjacency::at(NodeId u, NodeId v) const {
    const auto first = columns.begin() + static_cast<std::ptrdiff_t>(offsets[u]);
    const auto last = columns.begin() + static_cast<std::ptrdiff_t>(offsets[u + 1]);
    const auto it = std::lower_bound(first, last, v);
    if (it == last || *it != v) {
        return 0.0;
    }
    return weights[static_cast<std::size_t>(it - columns.begin())];
}

NormalizedAdjacency normalized_adjacency(const Graph& graph) {
    const std::size_t n = graph.num_nodes();
    NormalizedAdjacency adj;
    adj.num_nodes = n;
    adj.offsets.assign(n + 1, 0);
    adj.columns.reserve(graph.adjacency().size() + n);
    adj.weights.reserve(graph.adjacency().size() + n);

    std::vector<double> inv_sqrt(n);
    for (NodeId u = 0; u < n; ++u) {
        inv_sqrt[u] = 1.0 / std::sqrt(static_cast<double>(graph.degree(u) + 1));
    }
    for (NodeId u = 0; u < n; ++u) {
        bool self_done = false;
        auto push_self = [&] {
            adj.columns.push_back(u);
            adj.weights.push_back(inv_sqrt[u] * inv_sqrt[u]);
            self_done = true;
        };
        for (NodeId v : graph.neighbors(u)) {
            if (!self_done && v > u) {
                push_self();
            }
            adj.columns.push_back(v);
            adj.weights.push_back(inv_sqrt[u] * inv_sqrt[v]);
        }
        if (!self_done) {
            push_self();
        }
        adj.offsets[u + 1] = adj.columns.size();
    }
    return adj;
}

} // namespace gcnh
