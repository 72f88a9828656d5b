#ifndef CGMM_SYNTH_HPP
#define CGMM_SYNTH_HPP

#include "cgmm/graph.hpp"

#include <cstdint>
#include <vector>

namespace cgmm {

// Deterministic generators for property-test datasets. Pure functions of
// their arguments: identical arguments give byte-identical datasets.

// Two classes of star-of-stars graphs with identical label histograms and
// identical 1-hop (label, label, arc) statistics, distinguishable only by
// which labels meet at distance 2: class 0 gives each spoke two same-label
// leaves, class 1 interleaves the leaf labels. A depth-1 encoder cannot
// separate the classes; a depth-2 encoder can. Matched pairs (k-th graph of
// each class) share their vertex-label multiset exactly. Vertex indices are
// shuffled per graph so vertex order carries no signal.
GraphDataset gen_two_hop(int n_per_class, std::uint64_t seed);

// Directed Erdos-Renyi-style graphs, uniform labels, no self-loops, no
// targets. May contain cycles and isolated vertices.
GraphDataset gen_random_graphs(int n, int v_min, int v_max, double edge_prob, int num_vertex_labels,
                               int num_arc_labels, std::uint64_t seed);

// Single cycle 0 -> 1 -> ... -> length-1 -> 0. labels are cycled to cover
// all vertices (label 1 everywhere when empty); undirected doubles each arc.
Graph gen_cycle(int length, const std::vector<int>& labels, bool undirected = false);

} // namespace cgmm

#endif
