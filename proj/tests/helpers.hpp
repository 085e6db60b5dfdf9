#pragma once

// Fixtures and independent reference computations shared by the unit tests
// and the acceptance runner. Nothing here calls the kernels under test for
// its reference values.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "gcnh/dataset.hpp"
#include "gcnh/graph.hpp"
#include "gcnh/model.hpp"
#include "gcnh/optim.hpp"
#include "gcnh/rng.hpp"
#include "gcnh/tensor.hpp"

namespace gcnh::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.values()) {
        v = rng.uniform(lo, hi);
    }
    return m;
}

/// Erdos-Renyi style edge list; each pair kept with probability p.
inline std::vector<Edge> random_edges(std::size_t n, double p, Rng& rng) {
    std::vector<Edge> edges;
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = u + 1; v < n; ++v) {
            if (rng.bernoulli(p)) {
                edges.emplace_back(u, v);
            }
        }
    }
    return edges;
}

inline LabelVector random_labels(std::size_t n, std::size_t classes, Rng& rng) {
    LabelVector l;
    l.num_classes = classes;
    for (std::size_t i = 0; i < n; ++i) {
        l.labels.push_back(static_cast<std::int32_t>(rng.below(classes)));
    }
    return l;
}

/// Random dataset with `splits` 48/32/20 splits and dense ids "n0", "n1", ...
inline Dataset random_dataset(std::size_t n, std::size_t f, std::size_t classes, double p, std::uint64_t seed,
                              std::size_t splits = 1) {
    Rng rng(seed);
    Dataset ds;
    ds.name = "random";
    ds.graph = Graph::from_edges(random_edges(n, p, rng), n);
    ds.features = random_matrix(n, f, rng);
    ds.labels = random_labels(n, classes, rng);
    ds.splits = generate_splits(n, kBenchmarkSplitRatios, splits, seed + 1);
    for (std::size_t i = 0; i < n; ++i) {
        ds.node_ids.push_back("n" + std::to_string(i));
    }
    return ds;
}

/// Dense 0/1 adjacency.
inline std::vector<std::vector<int>> dense_adjacency(const Graph& g) {
    std::vector<std::vector<int>> a(g.num_nodes(), std::vector<int>(g.num_nodes(), 0));
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
        for (NodeId v : g.neighbors(u)) {
            a[u][v] = 1;
        }
    }
    return a;
}

/// Brute-force aggregation over the dense adjacency, scanning v = 0..n-1.
inline Matrix dense_aggregate(const Graph& g, const Matrix& x, AggregationMode mode) {
    const auto a = dense_adjacency(g);
    const std::size_t n = g.num_nodes();
    Matrix out(n, x.cols());
    for (std::size_t u = 0; u < n; ++u) {
        std::size_t deg = 0;
        for (std::size_t v = 0; v < n; ++v) {
            deg += static_cast<std::size_t>(a[u][v]);
        }
        if (deg == 0) {
            continue;
        }
        for (std::size_t j = 0; j < x.cols(); ++j) {
            double acc = mode == AggregationMode::Max ? -std::numeric_limits<double>::infinity() : 0.0;
            for (std::size_t v = 0; v < n; ++v) {
                if (!a[u][v]) continue;
                acc = mode == AggregationMode::Max ? std::max(acc, x(v, j)) : acc + x(v, j);
            }
            out(u, j) = mode == AggregationMode::Mean ? acc / static_cast<double>(deg) : acc;
        }
    }
    return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

inline double leaky(double x) { return x > 0.0 ? x : kLeakySlope * x; }

/// Smallest distance of the GCNH forward pass (evaluation mode) to a point
/// where the loss is not differentiable: a LeakyReLU input near 0, or a MAX
/// aggregation whose best and second-best neighbor values nearly tie.
/// Recomputes the layers densely, independent of the engine.
inline double gcnh_kink_margin(const Model& model, const Graph& g, const Matrix& x) {
    double margin = std::numeric_limits<double>::infinity();
    Matrix h = x;
    const std::size_t n = g.num_nodes();
    for (const auto& layer : model.gcnh_layers) {
        const Matrix& w1 = layer.w1.value();
        const Matrix& w2 = layer.w2.value();
        const std::size_t d = w1.cols();
        Matrix zu(n, d), zv(n, d);
        for (std::size_t u = 0; u < n; ++u) {
            for (std::size_t j = 0; j < d; ++j) {
                double p1 = layer.b1.value()[j], p2 = layer.b2.value()[j];
                for (std::size_t k = 0; k < h.cols(); ++k) {
                    p1 += h(u, k) * w1(k, j);
                    p2 += h(u, k) * w2(k, j);
                }
                margin = std::min({margin, std::abs(p1), std::abs(p2)});
                zu(u, j) = leaky(p1);
                zv(u, j) = leaky(p2);
            }
        }
        const double beta = model.config.beta_fixed_value
                                ? *model.config.beta_fixed_value
                                : 1.0 / (1.0 + std::exp(-layer.raw_beta.value()[0]));
        const Matrix zn = dense_aggregate(g, zv, model.config.aggregation);
        if (model.config.aggregation == AggregationMode::Max) {
            for (NodeId u = 0; u < n; ++u) {
                const auto nb = g.neighbors(u);
                for (std::size_t j = 0; j < d && nb.size() > 1; ++j) {
                    std::vector<double> vals;
                    for (NodeId v : nb) vals.push_back(zv(v, j));
                    std::sort(vals.rbegin(), vals.rend());
                    margin = std::min(margin, vals[0] - vals[1]);
                }
            }
        }
        Matrix next(n, d);
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] = (1.0 - beta) * zn[i] + beta * zu[i];
        }
        h = next;
    }
    return margin;
}

/// Evaluation-mode NLL of the model over all nodes, recorded on `tape`.
inline Tensor full_loss(Tape& tape, const Model& model, const GraphInputs& inputs, const LabelVector& labels) {
    std::vector<NodeId> all(labels.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
    const Tensor logits = forward(tape, model, inputs, false);
    return softmax_nll(tape, logits, labels, all);
}

struct GradOracleOutcome {
    double max_relative_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t instances = 0;
    std::size_t rejected = 0;  // kink-adjacent instances resampled
};

/// Finite-difference check of the full GCNH loss on random n=12, f=8, |C|=3
/// instances. Instances closer than 1e-3 to a kink are resampled.
inline GradOracleOutcome gcnh_grad_oracle(AggregationMode mode, std::size_t layers, std::size_t instances,
                                          std::uint64_t seed) {
    GradOracleOutcome out;
    std::uint64_t attempt = 0;
    while (out.instances < instances) {
        Rng rng(mix_seed(seed, attempt++));
        const std::size_t n = 12, f = 8, classes = 3;
        const Graph g = Graph::from_edges(random_edges(n, 0.3, rng), n);
        const Matrix x = random_matrix(n, f, rng);
        const LabelVector labels = random_labels(n, classes, rng);
        ModelConfig mc;
        mc.num_layers = layers;
        mc.hidden_size = 5;
        mc.aggregation = mode;
        Model model = init_model(mc, f, classes, rng.next());
        for (auto& layer : model.gcnh_layers) {
            // Nonzero biases and beta so every parameter has a generic gradient.
            for (double& v : layer.b1.value().values()) v = rng.uniform(-0.5, 0.5);
            for (double& v : layer.b2.value().values()) v = rng.uniform(-0.5, 0.5);
            layer.raw_beta.value()[0] = rng.uniform(-1.0, 1.0);
        }
        if (gcnh_kink_margin(model, g, x) < 1e-3) {
            ++out.rejected;
            continue;
        }
        const GraphInputs inputs = GraphInputs::from(g, x);
        auto params = model.trainable();
        GradCheckOptions opt;
        opt.step = 1e-5;
        const auto r = finite_diff_check(
            [&](Tape& tape) { return full_loss(tape, model, inputs, labels); }, params, opt);
        out.max_relative_error = std::max(out.max_relative_error, r.max_relative_error);
        out.max_abs_error = std::max(out.max_abs_error, r.max_abs_error);
        ++out.instances;
    }
    return out;
}

/// Closed-form parameter count written out independently of the engine.
inline std::size_t closed_form_params(Architecture arch, std::size_t layers, std::size_t f, std::size_t hidden,
                                      std::size_t classes, bool beta_trainable = true, bool shared = false) {
    std::size_t total = hidden * classes + classes;
    std::size_t in = f;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t linear = in * hidden + hidden;
        if (arch == Architecture::GCNH) {
            total += (shared ? 1 : 2) * linear + (beta_trainable ? 1 : 0);
        } else {
            total += linear;
        }
        in = hidden;
    }
    return total;
}

/// Unique scratch directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("gcnh-test-" + tag + "-" + std::to_string(Rng(std::hash<std::string>{}(tag) ^
                                                               static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(this)))
                                                                .next()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

} // namespace gcnh::testing
