#include "cgmm/stack.hpp"

#include "cgmm/errors.hpp"
#include "cgmm/parallel.hpp"
#include "cgmm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace cgmm {

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<long long> unigram_counts(const std::vector<int>& states, int num_states) {
    std::vector<long long> counts(num_states, 0);
    for (int q : states) ++counts[q];
    return counts;
}

std::vector<long long> bigram_counts(const Graph& graph, const std::vector<int>& states,
                                     int num_states) {
    std::vector<long long> counts(static_cast<std::size_t>(num_states) * num_states, 0);
    for (const Arc& arc : graph.arcs)
        ++counts[static_cast<std::size_t>(states[arc.src]) * num_states + states[arc.dst]];
    return counts;
}

void check_alphabets(const StackModel& stack, const GraphDataset& dataset) {
    if (dataset.num_vertex_labels > stack.num_vertex_labels ||
        dataset.num_arc_labels > stack.num_arc_labels)
        throw DataError("dataset alphabets (M=" + std::to_string(dataset.num_vertex_labels) +
                        ", A=" + std::to_string(dataset.num_arc_labels) +
                        ") exceed the model alphabets (M=" + std::to_string(stack.num_vertex_labels) +
                        ", A=" + std::to_string(stack.num_arc_labels) + ")");
}

template <typename T>
std::vector<T> select(const std::vector<T>& all, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
}

// Stratified hold-out: per class, a deterministic shuffled fraction goes to
// validation, always leaving at least one member in the fit part.
void split_validation(const std::vector<int>& targets, double fraction, std::uint64_t seed,
                      std::vector<std::size_t>& fit, std::vector<std::size_t>& val) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t s = 0; s < targets.size(); ++s) by_class[targets[s]].push_back(s);
    Rng rng(seed);
    for (auto& [label, members] : by_class) {
        rng.shuffle(members);
        auto n_val = static_cast<std::size_t>(
            std::floor(fraction * static_cast<double>(members.size()) + 0.5));
        n_val = std::min(n_val, members.size() - 1);
        for (std::size_t k = 0; k < members.size(); ++k)
            (k < n_val ? val : fit).push_back(members[k]);
    }
    std::sort(fit.begin(), fit.end());
    std::sort(val.begin(), val.end());
}

} // namespace

std::vector<double> fingerprint_features(const Fingerprint& fp, const FingerprintOptions& options) {
    std::vector<double> out;
    const std::size_t first = options.last_layer_only && !fp.layers.empty() ? fp.layers.size() - 1 : 0;
    for (std::size_t l = first; l < fp.layers.size(); ++l)
        for (long long c : fp.layers[l]) out.push_back(static_cast<double>(c));
    if (options.normalize && fp.num_vertices > 0)
        for (double& v : out) v /= static_cast<double>(fp.num_vertices);
    return out;
}

std::vector<Fingerprint> fingerprints_from_table(const GraphDataset& dataset,
                                                 const StateAssignmentTable& table,
                                                 FingerprintMode mode) {
    std::vector<Fingerprint> fps(dataset.size());
    for (std::size_t g = 0; g < dataset.size(); ++g) {
        const Graph& graph = dataset.graphs[g];
        Fingerprint& fp = fps[g];
        fp.graph_id = graph.id;
        fp.target = graph.target;
        fp.num_vertices = graph.num_vertices();
        fp.layers.resize(table.num_layers());
        for (int l = 0; l < table.num_layers(); ++l) {
            const int C = table.layer_states(l);
            fp.layers[l] = unigram_counts(table.states(l, g), C);
            if (mode == FingerprintMode::Unibigram) {
                auto bi = bigram_counts(graph, table.states(l, g), C);
                fp.layers[l].insert(fp.layers[l].end(), bi.begin(), bi.end());
            }
        }
    }
    return fps;
}

StateAssignmentTable infer_stack_states(const StackModel& stack, const GraphDataset& dataset,
                                        int threads) {
    if (stack.num_layers() == 0) throw DataError("empty stack");
    check_alphabets(stack, dataset);
    std::vector<NeighborIndex> indices(dataset.size());
    for_chunks(dataset.size(), kGraphChunk, threads, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t g = b; g < e; ++g)
            indices[g] = NeighborIndex(dataset.graphs[g], stack.num_arc_labels);
    });
    StateAssignmentTable table;
    for (const LayerParams& params : stack.layers) {
        NeighborFrequency nf =
            compute_neighbor_frequency(dataset, indices, table, params.shape, threads);
        table.append_layer(params.shape.num_states, infer_states(params, dataset, nf, threads));
    }
    return table;
}

std::vector<Fingerprint> compute_fingerprints(const StackModel& stack, const GraphDataset& dataset,
                                              FingerprintMode mode, int threads) {
    return fingerprints_from_table(dataset, infer_stack_states(stack, dataset, threads), mode);
}

Fingerprint compute_fingerprint(const StackModel& stack, const Graph& graph, FingerprintMode mode) {
    GraphDataset tmp;
    tmp.name = "single";
    tmp.num_vertex_labels = stack.num_vertex_labels;
    tmp.num_arc_labels = stack.num_arc_labels;
    tmp.graphs.push_back(graph);
    return compute_fingerprints(stack, tmp, mode, 1).front();
}

PoolSelection pool_train_select(const GraphDataset& dataset,
                                const std::vector<std::size_t>& fit_indices,
                                const std::vector<std::size_t>& val_indices,
                                const StackModel& stack, const StateAssignmentTable& table,
                                const std::vector<NeighborIndex>& indices,
                                const StackConfig& config) {
    if (config.pool_size < 1) throw DataError("pool size must be >= 1");
    const int depth = stack.num_layers() + 1;

    LayerShape shape;
    shape.num_states = config.num_states;
    shape.num_vertex_labels = dataset.num_vertex_labels;
    shape.num_arc_labels = dataset.num_arc_labels;
    if (depth > 1) {
        const int visible = config.predecessor_depth <= 0
                                ? depth - 1
                                : std::min(config.predecessor_depth, depth - 1);
        for (int l = depth - 1 - visible; l < depth - 1; ++l) {
            shape.predecessors.push_back(l);
            shape.predecessor_states.push_back(stack.layers[l].shape.num_states);
        }
    }
    NeighborFrequency nf = depth > 1
                               ? compute_neighbor_frequency(dataset, indices, table, shape, config.threads)
                               : NeighborFrequency{};

    EmConfig em = config.em;
    em.num_states = config.num_states;
    em.threads = config.threads;

    const std::vector<int> targets = dataset_targets(dataset);
    const std::vector<int> fit_targets = select(targets, fit_indices);
    const std::vector<int> val_targets = select(targets, val_indices);
    FingerprintOptions criterion = config.fingerprint;
    criterion.last_layer_only = false; // selection always sees layers 1..depth

    const std::uint64_t depth_seed = derive_seed(config.seed, "depth", static_cast<std::uint64_t>(depth));
    PoolSelection best;
    best.selected = -1;
    for (int member = 0; member < config.pool_size; ++member) {
        TrainedLayer trained =
            train_layer(dataset, nf, em, derive_seed(depth_seed, "pool", static_cast<std::uint64_t>(member)));
        auto states = infer_states(trained.params, dataset, nf, config.threads);

        StateAssignmentTable candidate = table;
        candidate.append_layer(config.num_states, states);
        const auto fps = fingerprints_from_table(dataset, candidate, criterion.mode);
        std::vector<std::vector<double>> features(fps.size());
        for (std::size_t g = 0; g < fps.size(); ++g)
            features[g] = fingerprint_features(fps[g], criterion);

        LinearModel clf = train_linear(select(features, fit_indices), fit_targets, config.classifier);
        const double score = val_indices.empty()
                                 ? accuracy(clf, select(features, fit_indices), fit_targets)
                                 : accuracy(clf, select(features, val_indices), val_targets);
        best.pool_scores.push_back(score);
        if (best.selected < 0 || score > best.accuracy) {
            best.selected = member;
            best.accuracy = score;
            best.params = std::move(trained.params);
            best.states = std::move(states);
        }
    }
    return best;
}

StackModel train_stack(const GraphDataset& train, const StackConfig& config) {
    const std::vector<int> targets = dataset_targets(train);
    {
        std::map<int, int> classes;
        for (int t : targets) ++classes[t];
        if (classes.size() < 2) throw DataError("train_stack: fewer than 2 classes in targets");
    }
    std::vector<std::size_t> fit, val;
    split_validation(targets, config.validation_fraction, derive_seed(config.seed, "validation-split"),
                     fit, val);

    std::vector<NeighborIndex> indices(train.size());
    for_chunks(train.size(), kGraphChunk, config.threads, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t g = b; g < e; ++g)
            indices[g] = NeighborIndex(train.graphs[g], train.num_arc_labels);
    });

    StackModel stack;
    stack.num_vertex_labels = train.num_vertex_labels;
    stack.num_arc_labels = train.num_arc_labels;
    StateAssignmentTable table;

    double best_accuracy = -1.0;
    int best_depth = 0;
    int bad_streak = 0;
    stack.log.stopping_reason = "max_layers";
    for (int depth = 1; depth <= config.max_layers; ++depth) {
        PoolSelection sel = pool_train_select(train, fit, val, stack, table, indices, config);
        stack.layers.push_back(std::move(sel.params));
        table.append_layer(config.num_states, std::move(sel.states));

        DepthRecord record;
        record.depth = depth;
        record.pool_size = config.pool_size;
        record.pool_scores = std::move(sel.pool_scores);
        record.selected = sel.selected;
        record.accuracy = sel.accuracy;
        stack.log.depths.push_back(std::move(record));

        if (sel.accuracy > best_accuracy) {
            best_accuracy = sel.accuracy;
            best_depth = depth;
            bad_streak = 0;
        } else if (++bad_streak >= config.patience) {
            stack.log.stopping_reason = "no_improvement";
            break;
        }
    }
    stack.layers.resize(best_depth);
    stack.log.selected_depth = best_depth;
    for (DepthRecord& r : stack.log.depths) r.kept = r.depth <= best_depth;
    return stack;
}

// ---- persistence ----------------------------------------------------------

namespace {

constexpr const char* kModelHeader = "cgmm-model v1";

void write_row(std::ostream& out, const double* v, int n) {
    for (int k = 0; k < n; ++k) {
        if (k > 0) out << ' ';
        out << format_double(v[k]);
    }
    out << '\n';
}

class ModelReader {
public:
    explicit ModelReader(std::istream& in) : in_(in) {}

    std::string token(const char* what) {
        std::string t;
        if (!(in_ >> t)) throw DataError(std::string("truncated model file: expected ") + what);
        return t;
    }
    void expect(const char* literal) {
        const std::string t = token(literal);
        if (t != literal)
            throw DataError("malformed model file: expected '" + std::string(literal) + "', got '" + t + "'");
    }
    int integer(const char* what) {
        const std::string t = token(what);
        try {
            return std::stoi(t);
        } catch (const std::exception&) {
            throw DataError(std::string("malformed model file: bad integer for ") + what);
        }
    }
    double real(const char* what) {
        double v;
        if (!(in_ >> v)) throw DataError(std::string("truncated model file: expected ") + what);
        return v;
    }
    void reals(double* out, int n, const char* what) {
        for (int k = 0; k < n; ++k) out[k] = real(what);
    }
    bool at_end() {
        std::string t;
        return !(in_ >> t);
    }

private:
    std::istream& in_;
};

} // namespace

void save_stack(const StackModel& stack, std::ostream& out) {
    out << kModelHeader << '\n';
    out << "alphabet " << stack.num_vertex_labels << ' ' << stack.num_arc_labels << '\n';
    out << "layers " << stack.num_layers() << '\n';
    for (int l = 0; l < stack.num_layers(); ++l) {
        const LayerParams& params = stack.layers[l];
        const LayerShape& s = params.shape;
        out << "layer " << l << " states " << s.num_states << (s.is_base() ? " base" : " deep") << '\n';
        if (s.is_base()) {
            out << "prior\n";
            write_row(out, params.prior.data(), s.num_states);
        } else {
            out << "predecessors " << s.predecessors.size();
            for (int id : s.predecessors) out << ' ' << id;
            out << '\n';
            out << "predecessor_states";
            for (int c : s.predecessor_states) out << ' ' << c;
            out << '\n';
        }
        out << "emission\n";
        for (int i = 0; i < s.num_states; ++i)
            write_row(out, params.emission.data() + static_cast<std::size_t>(i) * s.num_vertex_labels,
                      s.num_vertex_labels);
        if (!s.is_base()) {
            const int P = static_cast<int>(s.predecessors.size());
            out << "layer_weight\n";
            write_row(out, params.layer_weight.data(), P);
            out << "arc_weight\n";
            for (int p = 0; p < P; ++p)
                write_row(out, params.arc_weight.data() + static_cast<std::size_t>(p) * s.num_arc_labels,
                          s.num_arc_labels);
            for (int p = 0; p < P; ++p) {
                const int w = s.predecessor_states[p] + 1;
                for (int a0 = 0; a0 < s.num_arc_labels; ++a0) {
                    out << "transition " << p << ' ' << (a0 + 1) << '\n';
                    for (int i = 0; i < s.num_states; ++i)
                        write_row(out,
                                  params.transition[p].data() +
                                      (static_cast<std::size_t>(a0) * s.num_states + i) * w,
                                  w);
                }
            }
        }
    }
    out << "construction-log " << stack.log.depths.size() << '\n';
    for (const DepthRecord& r : stack.log.depths) {
        out << "depth " << r.depth << " pool " << r.pool_size << " selected " << r.selected
            << " accuracy " << format_double(r.accuracy) << " kept " << (r.kept ? 1 : 0) << " scores";
        for (double sc : r.pool_scores) out << ' ' << format_double(sc);
        out << '\n';
    }
    out << "stopping " << (stack.log.stopping_reason.empty() ? "-" : stack.log.stopping_reason) << '\n';
    out << "selected_depth " << stack.log.selected_depth << '\n';
    out << "end\n";
    if (!out) throw DataError("model write failed");
}

void save_stack_file(const StackModel& stack, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open model file for writing: " + path);
    save_stack(stack, out);
}

StackModel load_stack(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw DataError("truncated model file: missing header");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != kModelHeader) {
        if (header.rfind("cgmm-model", 0) == 0)
            throw DataError("unsupported model file version: '" + header + "' (expected '" +
                            kModelHeader + "')");
        throw DataError("not a cgmm model file (bad header)");
    }
    ModelReader r(in);
    StackModel stack;
    r.expect("alphabet");
    stack.num_vertex_labels = r.integer("M");
    stack.num_arc_labels = r.integer("A");
    if (stack.num_vertex_labels < 1 || stack.num_arc_labels < 1)
        throw DataError("malformed model file: alphabet sizes must be >= 1");
    r.expect("layers");
    const int L = r.integer("layer count");
    if (L < 0) throw DataError("malformed model file: negative layer count");
    for (int l = 0; l < L; ++l) {
        r.expect("layer");
        if (r.integer("layer index") != l)
            throw DataError("malformed model file: layer indices out of order");
        r.expect("states");
        LayerParams params;
        params.shape.num_states = r.integer("state count");
        params.shape.num_vertex_labels = stack.num_vertex_labels;
        params.shape.num_arc_labels = stack.num_arc_labels;
        if (params.shape.num_states < 1) throw DataError("malformed model file: states must be >= 1");
        const std::string kind = r.token("layer kind");
        const int C = params.shape.num_states;
        if (kind == "base") {
            r.expect("prior");
            params.prior.resize(C);
            r.reals(params.prior.data(), C, "prior");
        } else if (kind == "deep") {
            r.expect("predecessors");
            const int P = r.integer("predecessor count");
            if (P < 1) throw DataError("malformed model file: deep layer needs predecessors");
            params.shape.predecessors.resize(P);
            for (int p = 0; p < P; ++p) {
                params.shape.predecessors[p] = r.integer("predecessor id");
                if (params.shape.predecessors[p] < 0 || params.shape.predecessors[p] >= l)
                    throw DataError("malformed model file: predecessor id must reference an earlier layer");
            }
            r.expect("predecessor_states");
            params.shape.predecessor_states.resize(P);
            for (int p = 0; p < P; ++p) {
                params.shape.predecessor_states[p] = r.integer("predecessor state count");
                const int expected = stack.layers[params.shape.predecessors[p]].shape.num_states;
                if (params.shape.predecessor_states[p] != expected)
                    throw DataError("malformed model file: predecessor state count mismatch");
            }
        } else {
            throw DataError("malformed model file: layer kind must be base|deep");
        }
        r.expect("emission");
        params.emission.resize(static_cast<std::size_t>(C) * stack.num_vertex_labels);
        r.reals(params.emission.data(), C * stack.num_vertex_labels, "emission");
        if (kind == "deep") {
            const int P = static_cast<int>(params.shape.predecessors.size());
            const int A = stack.num_arc_labels;
            r.expect("layer_weight");
            params.layer_weight.resize(P);
            r.reals(params.layer_weight.data(), P, "layer_weight");
            r.expect("arc_weight");
            params.arc_weight.resize(static_cast<std::size_t>(P) * A);
            r.reals(params.arc_weight.data(), P * A, "arc_weight");
            params.transition.resize(P);
            for (int p = 0; p < P; ++p) {
                const int w = params.shape.predecessor_states[p] + 1;
                params.transition[p].resize(static_cast<std::size_t>(A) * C * w);
                for (int a0 = 0; a0 < A; ++a0) {
                    r.expect("transition");
                    if (r.integer("transition predecessor") != p || r.integer("transition arc") != a0 + 1)
                        throw DataError("malformed model file: transition blocks out of order");
                    r.reals(params.transition[p].data() + static_cast<std::size_t>(a0) * C * w, C * w,
                            "transition");
                }
            }
        }
        const auto violations = validate_params(params, 1e-9);
        if (!violations.empty())
            throw DataError("model file layer " + std::to_string(l) +
                            " has invalid distributions: " + violations.front());
        stack.layers.push_back(std::move(params));
    }
    r.expect("construction-log");
    const int D = r.integer("log record count");
    for (int d = 0; d < D; ++d) {
        r.expect("depth");
        DepthRecord rec;
        rec.depth = r.integer("depth");
        r.expect("pool");
        rec.pool_size = r.integer("pool size");
        r.expect("selected");
        rec.selected = r.integer("selected index");
        r.expect("accuracy");
        rec.accuracy = r.real("accuracy");
        r.expect("kept");
        rec.kept = r.integer("kept flag") != 0;
        r.expect("scores");
        rec.pool_scores.resize(rec.pool_size);
        r.reals(rec.pool_scores.data(), rec.pool_size, "pool scores");
        stack.log.depths.push_back(std::move(rec));
    }
    r.expect("stopping");
    stack.log.stopping_reason = r.token("stopping reason");
    if (stack.log.stopping_reason == "-") stack.log.stopping_reason.clear();
    r.expect("selected_depth");
    stack.log.selected_depth = r.integer("selected depth");
    r.expect("end");
    if (!r.at_end()) throw DataError("malformed model file: trailing content after 'end'");
    return stack;
}

StackModel load_stack_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    return load_stack(in);
}

// ---- CSV outputs ----------------------------------------------------------

void write_fingerprint_csv(const std::vector<Fingerprint>& fps, const FingerprintOptions& options,
                           std::ostream& out) {
    std::size_t width = 0;
    for (const Fingerprint& fp : fps)
        width = std::max(width, fingerprint_features(fp, options).size());
    out << "graph_id,target";
    for (std::size_t k = 0; k < width; ++k) out << ",c_" << (k + 1);
    out << '\n';
    for (const Fingerprint& fp : fps) {
        out << fp.graph_id << ',';
        if (fp.target == Graph::kNoTarget)
            out << '-';
        else
            out << fp.target;
        const auto features = fingerprint_features(fp, options);
        for (double v : features) {
            out << ',';
            if (options.normalize)
                out << format_double(v);
            else
                out << static_cast<long long>(v);
        }
        out << '\n';
    }
}

void inspect_fingerprints(const StackModel& stack, const GraphDataset& dataset, FingerprintMode mode,
                          std::ostream& out, int threads) {
    const auto targets = dataset_targets(dataset); // throws on unlabeled graphs
    const auto fps = compute_fingerprints(stack, dataset, mode, threads);
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t g = 0; g < fps.size(); ++g) by_class[targets[g]].push_back(g);
    for (const auto& [label, members] : by_class) {
        for (int l = 0; l < stack.num_layers(); ++l) {
            const std::size_t width = fps[members.front()].layers[l].size();
            std::vector<double> mean(width, 0.0);
            for (std::size_t g : members)
                for (std::size_t k = 0; k < width; ++k)
                    mean[k] += static_cast<double>(fps[g].layers[l][k]);
            out << label << ',' << (l + 1);
            for (double v : mean) out << ',' << format_double(v / static_cast<double>(members.size()));
            out << '\n';
        }
    }
}

} // namespace cgmm
