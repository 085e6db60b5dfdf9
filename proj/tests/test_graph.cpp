#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gcnh/error.hpp"
#include "gcnh/graph.hpp"
#include "helpers.hpp"

using namespace gcnh;
using namespace gcnh::testing;

namespace {

Graph triangle() {
    const std::vector<Edge> e{{0, 1}, {1, 2}, {2, 0}};
    return build_graph(e, 3);
}

void check_invariants(const Graph& g) {
    const auto off = g.offsets();
    REQUIRE(off.size() == g.num_nodes() + 1);
    CHECK(off.front() == 0);
    CHECK(off.back() == 2 * g.num_edges());
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
        CHECK(off[u] <= off[u + 1]);
        const auto nb = g.neighbors(u);
        CHECK(std::is_sorted(nb.begin(), nb.end()));
        CHECK(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
        for (NodeId v : nb) {
            CHECK(v != u);
            const auto back = g.neighbors(v);
            CHECK(std::binary_search(back.begin(), back.end(), u));
        }
    }
}

} // namespace

TEST_CASE("build_graph dedupes, symmetrizes and drops self-loops") {
    const std::vector<Edge> e{{0, 1}, {1, 0}, {1, 1}};
    const Graph g = build_graph(e, 2);
    CHECK(g.num_edges() == 1);
    CHECK(g.degree(0) == 1);
    CHECK(g.neighbors(1)[0] == 0);
    check_invariants(g);
}

TEST_CASE("empty edge list gives isolated nodes") {
    const Graph g = build_graph({}, 3);
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges() == 0);
    for (NodeId u = 0; u < 3; ++u) CHECK(degree(g, u) == 0);
}

TEST_CASE("triangle and star degrees") {
    const Graph t = triangle();
    for (NodeId u = 0; u < 3; ++u) CHECK(t.degree(u) == 2);
    std::vector<Edge> star;
    for (NodeId leaf = 1; leaf <= 7; ++leaf) star.emplace_back(0, leaf);
    const Graph s = build_graph(star, 8);
    CHECK(s.degree(0) == 7);
    CHECK(s.degree(3) == 1);
}

TEST_CASE("out-of-range endpoint is rejected") {
    const std::vector<Edge> e{{0, 3}};
    CHECK_THROWS_AS(build_graph(e, 3), InputError);
}

TEST_CASE("random graphs satisfy the CSR invariants and round-trip through edge_list") {
    Rng rng(11);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + rng.below(40);
        auto edges = random_edges(n, rng.uniform(0.0, 0.5), rng);
        // Add reversed duplicates and self-loops that must disappear.
        for (std::size_t i = 0; i < edges.size(); i += 3) edges.emplace_back(edges[i].second, edges[i].first);
        edges.emplace_back(0, 0);
        const Graph g = build_graph(edges, n);
        check_invariants(g);
        const auto exported = g.edge_list();
        CHECK(build_graph(exported, n) == g);
    }
}

TEST_CASE("edge homophily fixtures") {
    LabelVector same{{0, 0, 0}, 2};
    CHECK(edge_homophily(triangle(), same).edge_homophily == 1.0);

    const std::vector<Edge> path{{0, 1}, {1, 2}};
    LabelVector aba{{0, 1, 0}, 2};
    const auto rep = edge_homophily(build_graph(path, 3), aba);
    CHECK(rep.edge_homophily == 0.0);
    CHECK(rep.total_edges == 2);
    CHECK(rep.same_label_edges == 0);

    // Complete bipartite K_{3,4}: every edge crosses the two classes.
    std::vector<Edge> kb;
    for (NodeId a = 0; a < 3; ++a)
        for (NodeId b = 3; b < 7; ++b) kb.emplace_back(a, b);
    LabelVector parts{{0, 0, 0, 1, 1, 1, 1}, 2};
    CHECK(edge_homophily(build_graph(kb, 7), parts).edge_homophily == 0.0);
}

TEST_CASE("edge homophily of an edgeless graph is undefined") {
    LabelVector l{{0, 1}, 2};
    CHECK_THROWS_AS(edge_homophily(build_graph({}, 2), l), UndefinedRatioError);
}

TEST_CASE("edge homophily is invariant under node relabeling") {
    Rng rng(5);
    const std::size_t n = 40;
    const Graph g = build_graph(random_edges(n, 0.2, rng), n);
    const LabelVector labels = random_labels(n, 4, rng);
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<NodeId>(perm));
    std::vector<Edge> pe;
    for (auto [u, v] : g.edge_list()) pe.emplace_back(perm[u], perm[v]);
    LabelVector pl{std::vector<std::int32_t>(n), labels.num_classes};
    for (std::size_t u = 0; u < n; ++u) pl.labels[perm[u]] = labels[u];
    const auto a = edge_homophily(g, labels);
    const auto b = edge_homophily(build_graph(pe, n), pl);
    CHECK(a.same_label_edges == b.same_label_edges);
    CHECK(a.edge_homophily == b.edge_homophily);
}

TEST_CASE("label-independent edges give homophily near 1/|C|") {
    Rng rng(99);
    const std::size_t n = 2000;
    std::vector<Edge> edges;
    while (edges.size() < 10000) {
        const auto u = static_cast<NodeId>(rng.below(n));
        const auto v = static_cast<NodeId>(rng.below(n));
        if (u != v) edges.emplace_back(u, v);
    }
    const Graph g = build_graph(edges, n);
    CHECK(g.num_edges() >= 9900);
    const LabelVector labels = random_labels(n, 5, rng);
    CHECK(std::abs(edge_homophily(g, labels).edge_homophily - 0.2) <= 0.03);
}

TEST_CASE("class edge matrix counts each undirected edge once") {
    const std::vector<Edge> e{{0, 1}, {1, 2}, {2, 3}, {0, 3}};
    LabelVector l{{0, 0, 1, 1}, 2};
    const auto m = class_edge_matrix(build_graph(e, 4), l);
    CHECK(m == std::vector<std::size_t>{1, 2, 2, 1});
}

TEST_CASE("label vector validation") {
    CHECK_THROWS_AS((LabelVector{{0, 0}, 1}).validate(), InputError);
    CHECK_THROWS_AS((LabelVector{{0, 2}, 2}).validate(), InputError);
    CHECK_NOTHROW((LabelVector{{0, 1}, 2}).validate());
}

TEST_CASE("normalized adjacency fixtures") {
    const auto iso = normalized_adjacency(build_graph({}, 1));
    CHECK(iso.at(0, 0) == 1.0);

    const std::vector<Edge> e{{0, 1}};
    const auto two = normalized_adjacency(build_graph(e, 2));
    for (NodeId u = 0; u < 2; ++u)
        for (NodeId v = 0; v < 2; ++v) CHECK(two.at(u, v) == doctest::Approx(0.5).epsilon(1e-15));

    const auto tri = normalized_adjacency(triangle());
    for (NodeId u = 0; u < 3; ++u) CHECK(tri.at(u, u) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("normalized adjacency entries, symmetry and k-regular row sums") {
    Rng rng(3);
    const std::size_t n = 30;
    const Graph g = build_graph(random_edges(n, 0.2, rng), n);
    const auto adj = normalized_adjacency(g);
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = 0; v < n; ++v) {
            CHECK(adj.at(u, v) == adj.at(v, u));
        }
        for (NodeId v : g.neighbors(u)) {
            const double expected = 1.0 / std::sqrt(static_cast<double>((g.degree(u) + 1) * (g.degree(v) + 1)));
            CHECK(adj.at(u, v) == doctest::Approx(expected).epsilon(1e-15));
        }
    }

    // Cycle C_8 is 2-regular: A_hat * 1 = 1.
    std::vector<Edge> cycle;
    for (NodeId u = 0; u < 8; ++u) cycle.emplace_back(u, (u + 1) % 8);
    const auto c = normalized_adjacency(build_graph(cycle, 8));
    for (NodeId u = 0; u < 8; ++u) {
        double s = 0.0;
        for (std::size_t i = c.offsets[u]; i < c.offsets[u + 1]; ++i) s += c.weights[i];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    }
}
