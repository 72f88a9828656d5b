#include "cgmm/synth.hpp"

#include "cgmm/errors.hpp"
#include "cgmm/rng.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <string>
#include <utility>

namespace cgmm {

namespace {

constexpr int kSpokes = 4; // even, so "half the spokes" is exact

// Star-of-stars on labels {1: center, 2: spokes, 3/4: leaves}. All edges
// undirected (two arcs, label 1). leaf_pairs[s] = labels of spoke s's two
// leaves.
Graph two_hop_graph(const std::string& id, int target,
                    const std::array<std::pair<int, int>, kSpokes>& leaf_pairs, Rng& rng) {
    const int V = 1 + kSpokes + 2 * kSpokes;
    std::vector<int> labels(V);
    std::vector<std::pair<int, int>> edges; // undirected
    labels[0] = 1;
    for (int s = 0; s < kSpokes; ++s) {
        const int spoke = 1 + s;
        labels[spoke] = 2;
        edges.emplace_back(0, spoke);
        const int leaf_a = 1 + kSpokes + 2 * s;
        const int leaf_b = leaf_a + 1;
        labels[leaf_a] = leaf_pairs[s].first;
        labels[leaf_b] = leaf_pairs[s].second;
        edges.emplace_back(spoke, leaf_a);
        edges.emplace_back(spoke, leaf_b);
    }

    // shuffle vertex indices so the layout is not positional
    std::vector<int> perm(V);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);

    Graph g;
    g.id = id;
    g.target = target;
    g.vertex_labels.resize(V);
    for (int u = 0; u < V; ++u) g.vertex_labels[perm[u]] = labels[u];
    for (auto [u, v] : edges) {
        g.arcs.push_back({perm[u], perm[v], 1});
        g.arcs.push_back({perm[v], perm[u], 1});
    }
    return g;
}

} // namespace

GraphDataset gen_two_hop(int n_per_class, std::uint64_t seed) {
    if (n_per_class < 1) throw DataError("gen_two_hop: n_per_class must be >= 1");
    GraphDataset ds;
    ds.name = "two_hop";
    ds.num_vertex_labels = 4;
    ds.num_arc_labels = 1;
    // class 0: two spokes carry (3,3), two carry (4,4); class 1: all (3,4).
    // Both classes have 4 leaves labeled 3 and 4 labeled 4, and identical
    // spoke-leaf label pairs at 1 hop.
    const std::array<std::pair<int, int>, kSpokes> segregated{{{3, 3}, {3, 3}, {4, 4}, {4, 4}}};
    const std::array<std::pair<int, int>, kSpokes> interleaved{{{3, 4}, {3, 4}, {3, 4}, {3, 4}}};
    for (int cls = 0; cls < 2; ++cls)
        for (int k = 0; k < n_per_class; ++k) {
            Rng rng(derive_seed(seed, "two-hop", static_cast<std::uint64_t>(cls) * 1000003ull + k));
            ds.graphs.push_back(two_hop_graph("two_hop_c" + std::to_string(cls) + "_" + std::to_string(k),
                                              cls, cls == 0 ? segregated : interleaved, rng));
        }
    return ds;
}

GraphDataset gen_random_graphs(int n, int v_min, int v_max, double edge_prob, int num_vertex_labels,
                               int num_arc_labels, std::uint64_t seed) {
    if (n < 0 || v_min < 0 || v_max < v_min || num_vertex_labels < 1 || num_arc_labels < 1 ||
        edge_prob < 0.0 || edge_prob > 1.0)
        throw DataError("gen_random_graphs: invalid arguments");
    GraphDataset ds;
    ds.name = "random";
    ds.num_vertex_labels = num_vertex_labels;
    ds.num_arc_labels = num_arc_labels;
    for (int k = 0; k < n; ++k) {
        Rng rng(derive_seed(seed, "random-graph", static_cast<std::uint64_t>(k)));
        Graph g;
        g.id = "random_" + std::to_string(k);
        const int V = v_min == v_max ? v_min : rng.uniform_int(v_min, v_max);
        g.vertex_labels.resize(V);
        for (int u = 0; u < V; ++u) g.vertex_labels[u] = rng.uniform_int(1, num_vertex_labels);
        for (int u = 0; u < V; ++u)
            for (int v = 0; v < V; ++v) {
                if (u == v) continue;
                if (rng.uniform() < edge_prob)
                    g.arcs.push_back({u, v, rng.uniform_int(1, num_arc_labels)});
            }
        ds.graphs.push_back(std::move(g));
    }
    return ds;
}

Graph gen_cycle(int length, const std::vector<int>& labels, bool undirected) {
    if (length < 3) throw DataError("gen_cycle: length must be >= 3");
    Graph g;
    g.id = "cycle_" + std::to_string(length);
    g.vertex_labels.resize(length);
    for (int u = 0; u < length; ++u)
        g.vertex_labels[u] = labels.empty() ? 1 : labels[u % labels.size()];
    for (int u = 0; u < length; ++u) {
        const int v = (u + 1) % length;
        g.arcs.push_back({u, v, 1});
        if (undirected) g.arcs.push_back({v, u, 1});
    }
    return g;
}

} // namespace cgmm
