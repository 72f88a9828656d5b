#include "cgmm/layer.hpp"

#include "cgmm/errors.hpp"
#include "cgmm/parallel.hpp"
#include "cgmm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cgmm {

ContextLayout ContextLayout::from_shape(const LayerShape& shape) {
    ContextLayout layout;
    layout.predecessors = shape.predecessors;
    layout.predecessor_states = shape.predecessor_states;
    layout.num_arc_labels = shape.num_arc_labels;
    layout.pred_offset.resize(shape.predecessors.size());
    int off = 0;
    for (std::size_t p = 0; p < shape.predecessors.size(); ++p) {
        layout.pred_offset[p] = off;
        off += shape.num_arc_labels * (shape.predecessor_states[p] + 1);
    }
    layout.stride = off;
    return layout;
}

LayerParams init_params(const LayerShape& shape, std::uint64_t seed) {
    const int C = shape.num_states;
    const int M = shape.num_vertex_labels;
    const int A = shape.num_arc_labels;
    Rng rng(seed);
    LayerParams params;
    params.shape = shape;
    if (shape.is_base()) params.prior = rng.dirichlet(C);
    params.emission.resize(static_cast<std::size_t>(C) * M);
    for (int i = 0; i < C; ++i) {
        auto row = rng.dirichlet(M);
        std::copy(row.begin(), row.end(), params.emission.begin() + static_cast<std::size_t>(i) * M);
    }
    if (!shape.is_base()) {
        const int P = static_cast<int>(shape.predecessors.size());
        params.layer_weight = rng.dirichlet(P);
        params.arc_weight.resize(static_cast<std::size_t>(P) * A);
        for (int p = 0; p < P; ++p) {
            auto row = rng.dirichlet(A);
            std::copy(row.begin(), row.end(), params.arc_weight.begin() + static_cast<std::size_t>(p) * A);
        }
        params.transition.resize(P);
        for (int p = 0; p < P; ++p) {
            const int w = shape.predecessor_states[p] + 1;
            params.transition[p].resize(static_cast<std::size_t>(A) * C * w);
            for (int a0 = 0; a0 < A; ++a0)
                for (int j = 0; j < w; ++j) {
                    auto col = rng.dirichlet(C); // column j is a distribution over i
                    for (int i = 0; i < C; ++i)
                        params.transition[p][(static_cast<std::size_t>(a0) * C + i) * w + j] = col[i];
                }
        }
    }
    return params;
}

namespace {

void check_distribution(std::vector<std::string>& out, const double* v, int n,
                        const std::string& what, double tol) {
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        if (v[k] < 0.0) out.push_back(what + ": negative entry at " + std::to_string(k));
        sum += v[k];
    }
    if (std::abs(sum - 1.0) > tol)
        out.push_back(what + ": sums to " + std::to_string(sum) + " (|sum-1| > tol)");
}

} // namespace

std::vector<std::string> validate_params(const LayerParams& params, double tol) {
    std::vector<std::string> out;
    const LayerShape& s = params.shape;
    const int C = s.num_states;
    if (s.is_base()) check_distribution(out, params.prior.data(), C, "prior", tol);
    std::vector<double> col(C);
    for (int i = 0; i < C; ++i)
        check_distribution(out, params.emission.data() + static_cast<std::size_t>(i) * s.num_vertex_labels,
                           s.num_vertex_labels, "emission row " + std::to_string(i), tol);
    if (!s.is_base()) {
        const int P = static_cast<int>(s.predecessors.size());
        check_distribution(out, params.layer_weight.data(), P, "layer_weight", tol);
        for (int p = 0; p < P; ++p) {
            check_distribution(out, params.arc_weight.data() + static_cast<std::size_t>(p) * s.num_arc_labels,
                               s.num_arc_labels, "arc_weight[" + std::to_string(p) + "]", tol);
            const int w = s.predecessor_states[p] + 1;
            for (int a0 = 0; a0 < s.num_arc_labels; ++a0)
                for (int j = 0; j < w; ++j) {
                    for (int i = 0; i < C; ++i) col[i] = params.trans(p, a0, i, j);
                    check_distribution(out, col.data(), C,
                                       "transition[" + std::to_string(p) + "][a=" + std::to_string(a0 + 1) +
                                           "][j=" + std::to_string(j) + "]",
                                       tol);
                }
        }
    }
    return out;
}

void StateAssignmentTable::append_layer(int num_states, std::vector<std::vector<int>> per_graph) {
    if (num_layers() > 0 && per_graph.size() != num_graphs())
        throw DataError("state table: graph count mismatch when appending layer");
    layer_states_.push_back(num_states);
    assignments_.push_back(std::move(per_graph));
}

void StateAssignmentTable::truncate(int num_layers) {
    if (num_layers < 0 || num_layers > this->num_layers())
        throw DataError("state table: invalid truncation length");
    layer_states_.resize(num_layers);
    assignments_.resize(num_layers);
}

std::vector<double> neighbor_frequency(const NeighborIndex& index, const StateAssignmentTable& table,
                                       std::size_t graph_index, const LayerShape& shape) {
    for (std::size_t p = 0; p < shape.predecessors.size(); ++p) {
        const int layer = shape.predecessors[p];
        if (layer < 0 || layer >= table.num_layers())
            throw DataError("missing state assignments for predecessor layer " + std::to_string(layer));
        if (table.layer_states(layer) != shape.predecessor_states[p])
            throw DataError("state-count mismatch for predecessor layer " + std::to_string(layer));
    }
    const ContextLayout layout = ContextLayout::from_shape(shape);
    const int V = index.num_vertices();
    const int A = layout.num_arc_labels;
    std::vector<double> values(static_cast<std::size_t>(V) * layout.stride, 0.0);
    for (int u = 0; u < V; ++u) {
        double* row = values.data() + static_cast<std::size_t>(u) * layout.stride;
        for (std::size_t p = 0; p < shape.predecessors.size(); ++p) {
            const std::vector<int>& states = table.states(shape.predecessors[p], graph_index);
            const int w = layout.width(static_cast<int>(p));
            for (int a0 = 0; a0 < A; ++a0) {
                double* f = row + layout.offset(static_cast<int>(p), a0);
                const auto nbrs = index.neighbors(u, a0 + 1);
                if (nbrs.empty()) {
                    f[w - 1] = 1.0; // bottom symbol
                    continue;
                }
                const double inv = 1.0 / static_cast<double>(nbrs.size());
                for (int v : nbrs) f[states[v]] += inv;
            }
        }
    }
    return values;
}

NeighborFrequency compute_neighbor_frequency(const GraphDataset& dataset,
                                             const std::vector<NeighborIndex>& indices,
                                             const StateAssignmentTable& table,
                                             const LayerShape& shape, int threads) {
    NeighborFrequency nf;
    nf.layout = ContextLayout::from_shape(shape);
    nf.per_graph.resize(dataset.size());
    for_chunks(dataset.size(), kGraphChunk, threads, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t g = b; g < e; ++g)
            nf.per_graph[g] = neighbor_frequency(indices[g], table, g, shape);
    });
    return nf;
}

namespace {

// Flat enumeration of (graph, vertex) pairs; the unit of chunked parallelism.
struct FlatIndex {
    std::vector<std::size_t> start; // per graph; start.back() = total
    explicit FlatIndex(const GraphDataset& dataset) {
        start.resize(dataset.size() + 1, 0);
        for (std::size_t g = 0; g < dataset.size(); ++g)
            start[g + 1] = start[g] + dataset.graphs[g].vertex_labels.size();
    }
    std::size_t total() const { return start.back(); }
    std::size_t graph_of(std::size_t flat) const {
        return static_cast<std::size_t>(
                   std::upper_bound(start.begin(), start.end(), flat) - start.begin()) -
               1;
    }
};

void check_labels(const GraphDataset& dataset, const LayerShape& shape) {
    for (const Graph& g : dataset.graphs)
        for (int label : g.vertex_labels)
            if (label < 1 || label > shape.num_vertex_labels)
                throw DataError("graph '" + g.id + "': vertex label " + std::to_string(label) +
                                " outside the model alphabet {1.." +
                                std::to_string(shape.num_vertex_labels) + "}");
}

// Unnormalized responsibilities for one vertex into block (i-major, layout
// stride per i); returns the normalizer, which is also the per-vertex
// likelihood under the current parameters.
double vertex_posterior(const LayerParams& params, const ContextLayout& layout, int label,
                        const double* f, double* block) {
    const int C = params.shape.num_states;
    double z = 0.0;
    for (int i = 0; i < C; ++i) {
        const double em = params.emit(i, label);
        double* bi = block + static_cast<std::size_t>(i) * layout.stride;
        for (int p = 0; p < layout.num_predecessors(); ++p) {
            const double lw = em * params.layer_weight[p];
            const int w = layout.width(p);
            const double* trans = params.transition[p].data();
            for (int a0 = 0; a0 < layout.num_arc_labels; ++a0) {
                const double aw = lw * params.arc_weight[p * layout.num_arc_labels + a0];
                const int off = layout.offset(p, a0);
                const double* trow = trans + (static_cast<std::size_t>(a0) * C + i) * w;
                for (int j = 0; j < w; ++j) {
                    const double v = aw * f[off + j] * trow[j];
                    bi[off + j] = v;
                    z += v;
                }
            }
        }
    }
    return z;
}

double vertex_likelihood(const LayerParams& params, const ContextLayout& layout, int label,
                         const double* f) {
    const int C = params.shape.num_states;
    double z = 0.0;
    for (int i = 0; i < C; ++i) {
        const double em = params.emit(i, label);
        double mix = 0.0;
        for (int p = 0; p < layout.num_predecessors(); ++p) {
            const int w = layout.width(p);
            double pmix = 0.0;
            for (int a0 = 0; a0 < layout.num_arc_labels; ++a0) {
                const double* trow =
                    params.transition[p].data() + (static_cast<std::size_t>(a0) * C + i) * w;
                const int off = layout.offset(p, a0);
                double s = 0.0;
                for (int j = 0; j < w; ++j) s += f[off + j] * trow[j];
                pmix += params.arc_weight[p * layout.num_arc_labels + a0] * s;
            }
            mix += params.layer_weight[p] * pmix;
        }
        z += em * mix;
    }
    return z;
}

// scores[i] = P(y|i) * mixture(i); the argmax is the inferred state
void vertex_scores(const LayerParams& params, const ContextLayout& layout, int label,
                   const double* f, double* scores) {
    const int C = params.shape.num_states;
    for (int i = 0; i < C; ++i) {
        const double em = params.emit(i, label);
        double mix = 0.0;
        for (int p = 0; p < layout.num_predecessors(); ++p) {
            const int w = layout.width(p);
            double pmix = 0.0;
            for (int a0 = 0; a0 < layout.num_arc_labels; ++a0) {
                const double* trow =
                    params.transition[p].data() + (static_cast<std::size_t>(a0) * C + i) * w;
                const int off = layout.offset(p, a0);
                double s = 0.0;
                for (int j = 0; j < w; ++j) s += f[off + j] * trow[j];
                pmix += params.arc_weight[p * layout.num_arc_labels + a0] * s;
            }
            mix += params.layer_weight[p] * pmix;
        }
        scores[i] = em * mix;
    }
}

// M-step accumulators, same shapes as the parameters they become.
struct Accumulators {
    std::vector<double> prior;
    std::vector<double> emission;
    std::vector<double> layer_weight;
    std::vector<double> arc_weight;
    std::vector<std::vector<double>> transition;

    static Accumulators zeros(const LayerShape& shape) {
        Accumulators acc;
        const int C = shape.num_states;
        if (shape.is_base()) acc.prior.assign(C, 0.0);
        acc.emission.assign(static_cast<std::size_t>(C) * shape.num_vertex_labels, 0.0);
        if (!shape.is_base()) {
            const int P = static_cast<int>(shape.predecessors.size());
            acc.layer_weight.assign(P, 0.0);
            acc.arc_weight.assign(static_cast<std::size_t>(P) * shape.num_arc_labels, 0.0);
            acc.transition.resize(P);
            for (int p = 0; p < P; ++p)
                acc.transition[p].assign(static_cast<std::size_t>(shape.num_arc_labels) * C *
                                             (shape.predecessor_states[p] + 1),
                                         0.0);
        }
        return acc;
    }

    void merge(const Accumulators& other) {
        auto add = [](std::vector<double>& dst, const std::vector<double>& src) {
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        };
        add(prior, other.prior);
        add(emission, other.emission);
        add(layer_weight, other.layer_weight);
        add(arc_weight, other.arc_weight);
        for (std::size_t p = 0; p < transition.size(); ++p) add(transition[p], other.transition[p]);
    }
};

// Adds one vertex's normalized responsibilities to the accumulators.
void accumulate_vertex(Accumulators& acc, const LayerShape& shape, const ContextLayout& layout,
                       int label, const double* block) {
    const int C = shape.num_states;
    const int M = shape.num_vertex_labels;
    if (shape.is_base()) {
        for (int i = 0; i < C; ++i) {
            acc.prior[i] += block[i];
            acc.emission[static_cast<std::size_t>(i) * M + (label - 1)] += block[i];
        }
        return;
    }
    const int A = layout.num_arc_labels;
    for (int i = 0; i < C; ++i) {
        const double* bi = block + static_cast<std::size_t>(i) * layout.stride;
        double zi = 0.0;
        for (int p = 0; p < layout.num_predecessors(); ++p) {
            const int w = layout.width(p);
            double zp = 0.0;
            for (int a0 = 0; a0 < A; ++a0) {
                const int off = layout.offset(p, a0);
                double za = 0.0;
                for (int j = 0; j < w; ++j) {
                    const double r = bi[off + j];
                    za += r;
                    acc.transition[p][(static_cast<std::size_t>(a0) * C + i) * w + j] += r;
                }
                acc.arc_weight[static_cast<std::size_t>(p) * A + a0] += za;
                zp += za;
            }
            acc.layer_weight[p] += zp;
            zi += zp;
        }
        acc.emission[static_cast<std::size_t>(i) * M + (label - 1)] += zi;
    }
}

// Normalizes v[begin..begin+n) in place; all-zero groups become uniform.
void normalize_group(std::vector<double>& v, std::size_t begin, std::size_t step, std::size_t n,
                     double eps) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += v[begin + k * step] + eps;
    if (sum <= 0.0) {
        for (std::size_t k = 0; k < n; ++k) v[begin + k * step] = 1.0 / static_cast<double>(n);
        return;
    }
    for (std::size_t k = 0; k < n; ++k) v[begin + k * step] = (v[begin + k * step] + eps) / sum;
}

LayerParams finalize_mstep(Accumulators&& acc, const LayerShape& shape, std::size_t total_vertices,
                           double eps) {
    const int C = shape.num_states;
    const int M = shape.num_vertex_labels;
    const int A = shape.num_arc_labels;
    LayerParams params;
    params.shape = shape;
    if (shape.is_base()) {
        params.prior = std::move(acc.prior);
        normalize_group(params.prior, 0, 1, C, eps);
        (void)total_vertices; // prior normalizer equals the gamma mass, i.e. the vertex count
    }
    params.emission = std::move(acc.emission);
    for (int i = 0; i < C; ++i) normalize_group(params.emission, static_cast<std::size_t>(i) * M, 1, M, eps);
    if (!shape.is_base()) {
        const int P = static_cast<int>(shape.predecessors.size());
        params.layer_weight = std::move(acc.layer_weight);
        normalize_group(params.layer_weight, 0, 1, P, eps);
        params.arc_weight = std::move(acc.arc_weight);
        for (int p = 0; p < P; ++p) normalize_group(params.arc_weight, static_cast<std::size_t>(p) * A, 1, A, eps);
        params.transition = std::move(acc.transition);
        for (int p = 0; p < P; ++p) {
            const int w = shape.predecessor_states[p] + 1;
            for (int a0 = 0; a0 < A; ++a0)
                for (int j = 0; j < w; ++j)
                    normalize_group(params.transition[p],
                                    (static_cast<std::size_t>(a0) * C) * w + j,
                                    static_cast<std::size_t>(w), C, eps);
        }
    }
    return params;
}

ContextLayout empty_layout() { return ContextLayout{}; }

const double* nf_row_or_null(const NeighborFrequency& nf, std::size_t g, int u, bool base) {
    return base ? nullptr : nf.row(g, u);
}

} // namespace

PosteriorTensor e_step(const LayerParams& params, const GraphDataset& dataset,
                       const NeighborFrequency& nf, int threads) {
    check_labels(dataset, params.shape);
    const bool base = params.is_base();
    const int C = params.shape.num_states;
    if (!base && nf.per_graph.size() != dataset.size())
        throw DataError("neighbor frequency does not cover the dataset");

    PosteriorTensor post;
    post.base = base;
    post.num_states = C;
    post.layout = base ? empty_layout() : nf.layout;
    post.per_graph.resize(dataset.size());
    const std::size_t block = post.vertex_block();
    for (std::size_t g = 0; g < dataset.size(); ++g)
        post.per_graph[g].resize(dataset.graphs[g].vertex_labels.size() * block);

    const FlatIndex flat(dataset);
    for_chunks(flat.total(), kVertexChunk, threads, [&](std::size_t, std::size_t b, std::size_t e) {
        std::size_t g = flat.graph_of(b);
        for (std::size_t idx = b; idx < e; ++idx) {
            while (idx >= flat.start[g + 1]) ++g;
            const int u = static_cast<int>(idx - flat.start[g]);
            const Graph& graph = dataset.graphs[g];
            double* out = post.per_graph[g].data() + static_cast<std::size_t>(u) * block;
            double z;
            if (base) {
                z = 0.0;
                for (int i = 0; i < C; ++i) {
                    const double v = params.prior[i] * params.emit(i, graph.vertex_labels[u]);
                    out[i] = v;
                    z += v;
                }
            } else {
                z = vertex_posterior(params, post.layout, graph.vertex_labels[u], nf.row(g, u), out);
            }
            if (z <= 0.0)
                throw NumericError("zero posterior normalizer at graph '" + graph.id + "' vertex " +
                                   std::to_string(u) + " (degenerate parameters)");
            const double inv = 1.0 / z;
            for (std::size_t k = 0; k < block; ++k) out[k] *= inv;
        }
    });
    return post;
}

LayerParams m_step(const PosteriorTensor& posterior, const GraphDataset& dataset, double smoothing,
                   int threads) {
    LayerShape shape;
    shape.num_states = posterior.num_states;
    shape.num_vertex_labels = dataset.num_vertex_labels;
    shape.num_arc_labels = dataset.num_arc_labels;
    if (!posterior.base) {
        shape.predecessors = posterior.layout.predecessors;
        shape.predecessor_states = posterior.layout.predecessor_states;
        shape.num_arc_labels = posterior.layout.num_arc_labels;
    }

    const FlatIndex flat(dataset);
    const ContextLayout& layout = posterior.layout;
    const std::size_t block = posterior.vertex_block();
    const std::size_t chunks = chunk_count(flat.total(), kVertexChunk);
    std::vector<Accumulators> partial(chunks);
    for_chunks(flat.total(), kVertexChunk, threads, [&](std::size_t c, std::size_t b, std::size_t e) {
        Accumulators acc = Accumulators::zeros(shape);
        std::size_t g = flat.graph_of(b);
        for (std::size_t idx = b; idx < e; ++idx) {
            while (idx >= flat.start[g + 1]) ++g;
            const int u = static_cast<int>(idx - flat.start[g]);
            accumulate_vertex(acc, shape, layout, dataset.graphs[g].vertex_labels[u],
                              posterior.per_graph[g].data() + static_cast<std::size_t>(u) * block);
        }
        partial[c] = std::move(acc);
    });
    Accumulators total = Accumulators::zeros(shape);
    for (Accumulators& acc : partial) total.merge(acc);
    return finalize_mstep(std::move(total), shape, flat.total(), smoothing);
}

double log_likelihood(const LayerParams& params, const GraphDataset& dataset,
                      const NeighborFrequency& nf, int threads) {
    check_labels(dataset, params.shape);
    const bool base = params.is_base();
    const int C = params.shape.num_states;
    if (!base && nf.per_graph.size() != dataset.size())
        throw DataError("neighbor frequency does not cover the dataset");

    const FlatIndex flat(dataset);
    const std::size_t chunks = chunk_count(flat.total(), kVertexChunk);
    std::vector<double> partial(chunks, 0.0);
    for_chunks(flat.total(), kVertexChunk, threads, [&](std::size_t c, std::size_t b, std::size_t e) {
        double sum = 0.0;
        std::size_t g = flat.graph_of(b);
        for (std::size_t idx = b; idx < e; ++idx) {
            while (idx >= flat.start[g + 1]) ++g;
            const int u = static_cast<int>(idx - flat.start[g]);
            const Graph& graph = dataset.graphs[g];
            double z;
            if (base) {
                z = 0.0;
                for (int i = 0; i < C; ++i) z += params.prior[i] * params.emit(i, graph.vertex_labels[u]);
            } else {
                z = vertex_likelihood(params, nf.layout, graph.vertex_labels[u], nf.row(g, u));
            }
            if (z <= 0.0)
                throw NumericError("log-likelihood is -inf at graph '" + graph.id + "' vertex " +
                                   std::to_string(u));
            sum += std::log(z);
        }
        partial[c] = sum;
    });
    double total = 0.0;
    for (double s : partial) total += s; // fixed chunk order
    return total;
}

std::vector<std::vector<int>> infer_states(const LayerParams& params, const GraphDataset& dataset,
                                           const NeighborFrequency& nf, int threads) {
    check_labels(dataset, params.shape);
    const bool base = params.is_base();
    const int C = params.shape.num_states;
    std::vector<std::vector<int>> out(dataset.size());
    for (std::size_t g = 0; g < dataset.size(); ++g)
        out[g].resize(dataset.graphs[g].vertex_labels.size());

    const FlatIndex flat(dataset);
    for_chunks(flat.total(), kVertexChunk, threads, [&](std::size_t, std::size_t b, std::size_t e) {
        std::vector<double> scores(C);
        std::size_t g = flat.graph_of(b);
        for (std::size_t idx = b; idx < e; ++idx) {
            while (idx >= flat.start[g + 1]) ++g;
            const int u = static_cast<int>(idx - flat.start[g]);
            const int label = dataset.graphs[g].vertex_labels[u];
            if (base) {
                for (int i = 0; i < C; ++i) scores[i] = params.prior[i] * params.emit(i, label);
            } else {
                vertex_scores(params, nf.layout, label, nf.row(g, u), scores.data());
            }
            int best = 0;
            for (int i = 1; i < C; ++i)
                if (scores[i] > scores[best]) best = i; // ties keep the smaller index
            out[g][u] = best;
        }
    });
    return out;
}

TrainedLayer train_layer(const GraphDataset& dataset, const NeighborFrequency& nf,
                         const EmConfig& config, std::uint64_t seed) {
    LayerShape shape;
    shape.num_states = config.num_states;
    shape.num_vertex_labels = dataset.num_vertex_labels;
    shape.num_arc_labels = dataset.num_arc_labels;
    if (!nf.per_graph.empty() && nf.layout.stride > 0) {
        shape.predecessors = nf.layout.predecessors;
        shape.predecessor_states = nf.layout.predecessor_states;
        shape.num_arc_labels = nf.layout.num_arc_labels;
    }

    TrainedLayer result;
    result.params = init_params(shape, seed);
    result.trace.push_back(log_likelihood(result.params, dataset, nf, config.threads));
    for (int iter = 0; iter < config.max_iters; ++iter) {
        PosteriorTensor post = e_step(result.params, dataset, nf, config.threads);
        result.params = m_step(post, dataset, config.smoothing, config.threads);
        const double ll = log_likelihood(result.params, dataset, nf, config.threads);
        const double prev = result.trace.back();
        result.trace.push_back(ll);
        if (std::abs(ll - prev) <= config.tol * std::abs(prev)) break;
    }
    return result;
}

} // namespace cgmm
