#include "gcnh/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "gcnh/error.hpp"
#include "gcnh/rng.hpp"

namespace gcnh {

std::vector<std::vector<std::size_t>> FeaturePool::rows_by_class() const {
    std::vector<std::vector<std::size_t>> out(labels.num_classes);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        out[static_cast<std::size_t>(labels[r])].push_back(r);
    }
    return out;
}

FeaturePool pool_from_dataset(const Dataset& dataset) {
    return FeaturePool{dataset.features, dataset.labels};
}

FeaturePool make_surrogate_pool(const SurrogatePoolConfig& config) {
    if (config.num_classes < 2 || config.rows_per_class < 1 || config.num_features < 1 ||
        config.topic_words > config.num_features) {
        throw InputError("surrogate pool: invalid configuration");
    }
    Rng rng(config.seed);
    const std::size_t f = config.num_features;

    std::vector<std::vector<char>> in_topic(config.num_classes, std::vector<char>(f, 0));
    std::vector<std::size_t> words(f);
    for (auto& topic : in_topic) {
        std::iota(words.begin(), words.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(words));
        for (std::size_t i = 0; i < config.topic_words; ++i) {
            topic[words[i]] = 1;
        }
    }

    FeaturePool pool;
    const std::size_t rows = config.num_classes * config.rows_per_class;
    pool.features = Matrix(rows, f);
    pool.labels.num_classes = config.num_classes;
    pool.labels.labels.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t c = r % config.num_classes;
        pool.labels.labels[r] = static_cast<std::int32_t>(c);
        for (std::size_t j = 0; j < f; ++j) {
            const double p = in_topic[c][j] ? config.topic_rate : config.background_rate;
            pool.features(r, j) = rng.bernoulli(p) ? 1.0 : 0.0;
        }
    }
    return pool;
}

namespace {

// Degree-weighted sampler over the nodes of one class: a node with degree d
// appears d times in `endpoints`, so a uniform pick is degree-proportional.
struct ClassBucket {
    std::vector<NodeId> endpoints;
};

} // namespace

Dataset generate_synthetic(const SynthConfig& config, SynthReport* report) {
    const std::size_t n = config.num_nodes;
    const std::size_t k = config.num_classes;
    const std::size_t m = config.edges_per_new_node;
    const double h = config.target_homophily;
    if (!config.feature_pool) {
        throw InputError("generate_synthetic: feature pool required");
    }
    if (k < 2 || m < 1 || n < k || !(h >= 0.0 && h <= 1.0)) {
        throw InputError("generate_synthetic: invalid configuration");
    }
    const FeaturePool& pool = *config.feature_pool;
    if (pool.labels.num_classes != k) {
        throw InputError("generate_synthetic: pool has " + std::to_string(pool.labels.num_classes) +
                         " classes, config asks for " + std::to_string(k));
    }
    const auto pool_rows = pool.rows_by_class();
    for (const auto& rows : pool_rows) {
        if (rows.empty()) {
            throw InputError("generate_synthetic: pool lacks a node for some class");
        }
    }

    Rng rng(config.seed);
    const double cross = (1.0 - h) / static_cast<double>(k - 1);
    std::vector<std::int32_t> cls(n);
    std::vector<std::size_t> deg(n, 0);
    std::vector<ClassBucket> buckets(k);
    std::vector<Edge> edges;
    edges.reserve(k * (k - 1) / 2 + (n - k) * m);
    std::size_t fallbacks = 0;

    auto connect = [&](NodeId u, NodeId v) {
        edges.emplace_back(u, v);
        ++deg[u];
        ++deg[v];
        buckets[static_cast<std::size_t>(cls[u])].endpoints.push_back(u);
        buckets[static_cast<std::size_t>(cls[v])].endpoints.push_back(v);
    };

    for (NodeId u = 0; u < k; ++u) {
        cls[u] = static_cast<std::int32_t>(u);
    }
    for (NodeId u = 0; u < k; ++u) {
        for (NodeId v = u + 1; v < k; ++v) {
            connect(u, v);
        }
    }

    std::vector<NodeId> chosen;
    std::vector<char> taken(n, 0);
    // Degree mass of already chosen targets per class.
    std::vector<double> chosen_mass(k, 0.0);
    std::vector<double> weight(k, 0.0);
    for (NodeId u = static_cast<NodeId>(k); u < n; ++u) {
        const auto cu = static_cast<std::size_t>(rng.below(k));
        cls[u] = static_cast<std::int32_t>(cu);
        const std::size_t want = std::min<std::size_t>(m, u);
        chosen.clear();
        std::fill(chosen_mass.begin(), chosen_mass.end(), 0.0);

        for (std::size_t e = 0; e < want; ++e) {
            double total = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                const double mass = static_cast<double>(buckets[c].endpoints.size()) - chosen_mass[c];
                weight[c] = (c == cu ? h : cross) * mass;
                total += weight[c];
            }
            bool fallback = total <= 0.0;
            if (fallback) {
                ++fallbacks;
                for (std::size_t c = 0; c < k; ++c) {
                    weight[c] = static_cast<double>(buckets[c].endpoints.size()) - chosen_mass[c];
                    total += weight[c];
                }
            }
            if (total <= 0.0) {
                break;  // every earlier node is already a target
            }
            double pick = rng.uniform() * total;
            std::size_t c = 0;
            while (c + 1 < k && (weight[c] <= 0.0 || pick >= weight[c])) {
                pick -= weight[c];
                ++c;
            }
            while (weight[c] <= 0.0) {
                --c;  // guard against rounding past the last positive class
            }
            const auto& ends = buckets[c].endpoints;
            NodeId v = 0;
            do {
                v = ends[static_cast<std::size_t>(rng.below(ends.size()))];
            } while (taken[v]);
            taken[v] = 1;
            chosen.push_back(v);
            chosen_mass[c] += static_cast<double>(deg[v]);
        }
        for (NodeId v : chosen) {
            taken[v] = 0;
            connect(u, v);
        }
    }

    Dataset ds;
    ds.name = config.name;
    ds.graph = Graph::from_edges(edges, n);
    ds.labels.num_classes = k;
    ds.labels.labels = cls;
    ds.features = Matrix(n, pool.features.cols());
    for (NodeId u = 0; u < n; ++u) {
        const auto& rows = pool_rows[static_cast<std::size_t>(cls[u])];
        const std::size_t src = rows[static_cast<std::size_t>(rng.below(rows.size()))];
        std::copy(pool.features.row(src).begin(), pool.features.row(src).end(), ds.features.row(u).begin());
    }
    ds.splits = generate_splits(n, kSyntheticSplitRatios, 1, mix_seed(config.seed, 0x5b11));
    ds.node_ids.resize(n);
    for (NodeId u = 0; u < n; ++u) {
        ds.node_ids[u] = std::to_string(u);
    }
    if (report != nullptr) {
        report->fallback_edges = fallbacks;
        report->achieved_homophily = edge_homophily(ds.graph, ds.labels).edge_homophily;
    }
    return ds;
}

std::vector<double> default_homophily_grid() {
    std::vector<double> out;
    for (int i = 0; i <= 10; ++i) {
        out.push_back(i / 10.0);
    }
    return out;
}

std::string sweep_dataset_name(double target, std::size_t replicate) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "syn-h%.2f-r%zu", target, replicate);
    return buf;
}

std::vector<Dataset> homophily_sweep_generate(const std::vector<double>& targets,
                                              std::size_t graphs_per_h, const SynthConfig& base,
                                              std::uint64_t seed, std::vector<SynthReport>* reports) {
    std::vector<Dataset> out;
    out.reserve(targets.size() * graphs_per_h);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        for (std::size_t r = 0; r < graphs_per_h; ++r) {
            SynthConfig cfg = base;
            cfg.target_homophily = targets[i];
            cfg.seed = mix_seed(seed, i, r);
            cfg.name = sweep_dataset_name(targets[i], r);
            SynthReport rep;
            out.push_back(generate_synthetic(cfg, &rep));
            if (reports != nullptr) {
                reports->push_back(rep);
            }
        }
    }
    return out;
}

} // namespace gcnh
