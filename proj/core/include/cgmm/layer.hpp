#ifndef CGMM_LAYER_HPP
#define CGMM_LAYER_HPP

#include "cgmm/graph.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cgmm {

// Hidden states are 0-based internally: {0..C-1}, with C as the synthetic
// bottom symbol for an empty neighborhood (one extra transition column).

// Static dimensions of one layer. Deep layers condition on the frozen states
// of `predecessors` (ids of already-trained layers, ascending), whose state
// counts may differ from this layer's.
struct LayerShape {
    int num_states = 1;        // C
    int num_vertex_labels = 1; // M
    int num_arc_labels = 1;    // A
    std::vector<int> predecessors;
    std::vector<int> predecessor_states;

    bool is_base() const { return predecessors.empty(); }
    bool operator==(const LayerShape&) const = default;
};

// Per-vertex context record layout shared by NeighborFrequency and
// PosteriorTensor: for each predecessor p and arc label a, a block of
// C_p + 1 slots indexed by neighbor state j (last slot = bottom).
struct ContextLayout {
    std::vector<int> predecessors; // frozen layer ids
    std::vector<int> predecessor_states;
    int num_arc_labels = 1;
    int stride = 0;              // total record length per vertex
    std::vector<int> pred_offset;

    static ContextLayout from_shape(const LayerShape& shape);
    int num_predecessors() const { return static_cast<int>(predecessor_states.size()); }
    int width(int p) const { return predecessor_states[p] + 1; }
    int offset(int p, int a0) const { return pred_offset[p] + a0 * width(p); }
    bool operator==(const ContextLayout&) const = default;
};

// All multinomials of one layer, shared across vertices and graphs.
struct LayerParams {
    LayerShape shape;
    std::vector<double> prior;        // C                  (base layer only)
    std::vector<double> emission;     // C x M, row i = P(y=k | Q=i)
    std::vector<double> layer_weight; // P(L=l') per predecessor (deep only)
    std::vector<double> arc_weight;   // per predecessor, P^{l'}(S=a): P x A (deep only)
    // per predecessor: (a, i, j) -> P^{l',a}(Q=i | q=j), column j sums to 1
    // over i; j = C_p is the bottom column. Size A * C * (C_p + 1).
    std::vector<std::vector<double>> transition;

    bool is_base() const { return shape.is_base(); }
    double emit(int i, int label) const {
        return emission[static_cast<std::size_t>(i) * shape.num_vertex_labels + (label - 1)];
    }
    double trans(int p, int a0, int i, int j) const {
        const int w = shape.predecessor_states[p] + 1;
        return transition[p][(static_cast<std::size_t>(a0) * shape.num_states + i) * w + j];
    }
    bool operator==(const LayerParams&) const = default;
};

// Every distribution sampled from a symmetric Dirichlet(1); deterministic
// for a fixed seed.
LayerParams init_params(const LayerShape& shape, std::uint64_t seed);

// Empty iff every stored distribution is non-negative and sums to 1 within tol.
std::vector<std::string> validate_params(const LayerParams& params, double tol = 1e-12);

// Frozen most-likely states per (layer, graph, vertex). Assignments for a
// layer never change once appended.
class StateAssignmentTable {
public:
    int num_layers() const { return static_cast<int>(layer_states_.size()); }
    int layer_states(int layer) const { return layer_states_[layer]; }
    std::size_t num_graphs() const { return num_layers() == 0 ? 0 : assignments_[0].size(); }
    const std::vector<int>& states(int layer, std::size_t graph) const {
        return assignments_[layer][graph];
    }
    void append_layer(int num_states, std::vector<std::vector<int>> per_graph);
    void truncate(int num_layers);

private:
    std::vector<int> layer_states_;
    std::vector<std::vector<std::vector<int>>> assignments_;
};

// Empirical neighbor-state frequencies f[u][p][a][j]: the fraction of
// neighbors of u over arcs labeled a whose frozen state at predecessor p is
// j, counted with multiplicity; all mass on the bottom slot when the
// neighborhood is empty.
struct NeighborFrequency {
    ContextLayout layout;
    std::vector<std::vector<double>> per_graph; // [g]: V * stride values

    const double* row(std::size_t g, int u) const {
        return per_graph[g].data() + static_cast<std::size_t>(u) * layout.stride;
    }
};

// Single-graph form. Throws DataError if the table lacks a predecessor layer.
std::vector<double> neighbor_frequency(const NeighborIndex& index,
                                       const StateAssignmentTable& table,
                                       std::size_t graph_index, const LayerShape& shape);

NeighborFrequency compute_neighbor_frequency(const GraphDataset& dataset,
                                             const std::vector<NeighborIndex>& indices,
                                             const StateAssignmentTable& table,
                                             const LayerShape& shape, int threads = 1);

// E-step responsibilities. Base layers store gamma[u][i] (V*C per graph);
// deep layers store E[z] over (i, p, a, j) (V * C * stride per graph,
// i-major). Each vertex block sums to 1.
struct PosteriorTensor {
    bool base = true;
    int num_states = 0;
    ContextLayout layout; // empty for base layers
    std::vector<std::vector<double>> per_graph;

    std::size_t vertex_block() const {
        return base ? num_states : static_cast<std::size_t>(num_states) * layout.stride;
    }
    const double* block(std::size_t g, int u) const {
        return per_graph[g].data() + static_cast<std::size_t>(u) * vertex_block();
    }
    // deep-layer accessor for tests: responsibility of (i, p, a0, j) at vertex u
    double at(std::size_t g, int u, int i, int p, int a0, int j) const {
        return block(g, u)[static_cast<std::size_t>(i) * layout.stride + layout.offset(p, a0) + j];
    }
};

// Throws NumericError naming the graph and vertex when a normalizer is 0.
PosteriorTensor e_step(const LayerParams& params, const GraphDataset& dataset,
                       const NeighborFrequency& nf, int threads = 1);

// Closed-form maximizer of the expected complete log-likelihood, with
// Laplace smoothing added to every accumulator before normalization.
// Distributions whose accumulator is all-zero (possible only at eps = 0)
// fall back to uniform.
LayerParams m_step(const PosteriorTensor& posterior, const GraphDataset& dataset,
                   double smoothing = 1e-8, int threads = 1);

double log_likelihood(const LayerParams& params, const GraphDataset& dataset,
                      const NeighborFrequency& nf, int threads = 1);

// Most-likely state per vertex; ties break toward the smallest state index.
std::vector<std::vector<int>> infer_states(const LayerParams& params, const GraphDataset& dataset,
                                           const NeighborFrequency& nf, int threads = 1);

struct EmConfig {
    int num_states = 10;
    int max_iters = 50;
    double tol = 1e-4;       // stop when |dLL| <= tol * |LL|
    double smoothing = 1e-8; // 0 disables (exact EM, used by monotonicity checks)
    int threads = 1;
};

struct TrainedLayer {
    LayerParams params;
    std::vector<double> trace; // trace[k] = log-likelihood after k M-steps
};

// EM on one layer. trace.front() is the likelihood of the random init;
// stops on relative improvement <= tol or after max_iters iterations.
TrainedLayer train_layer(const GraphDataset& dataset, const NeighborFrequency& nf,
                         const EmConfig& config, std::uint64_t seed);

} // namespace cgmm

#endif
