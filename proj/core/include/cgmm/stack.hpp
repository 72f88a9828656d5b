#ifndef CGMM_STACK_HPP
#define CGMM_STACK_HPP

#include "cgmm/classify.hpp"
#include "cgmm/graph.hpp"
#include "cgmm/layer.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cgmm {

enum class FingerprintMode { Unigram, Unibigram };

struct FingerprintOptions {
    FingerprintMode mode = FingerprintMode::Unigram;
    bool last_layer_only = false; // feature vector uses only the deepest layer
    bool normalize = false;       // divide counts by |V_g|
};

// Per-layer state-occurrence counts: a unigram block of length C_l
// (occurrences of each inferred state over the vertices) and, in unibigram
// mode, a bigram block of length C_l^2 (ordered state pairs (q_u, q_v), one
// per directed arc). Blocks concatenate across layers in layer order.
struct Fingerprint {
    std::string graph_id;
    int target = Graph::kNoTarget;
    int num_vertices = 0;
    std::vector<std::vector<long long>> layers;
};

// Feature vector for kernels/classifier per the options.
std::vector<double> fingerprint_features(const Fingerprint& fp, const FingerprintOptions& options);

struct DepthRecord {
    int depth = 0; // 1-based
    int pool_size = 0;
    std::vector<double> pool_scores; // validation accuracy per pool member
    int selected = 0;                // winning pool index (lowest on ties)
    double accuracy = 0.0;           // winner's validation accuracy
    bool kept = false;               // survived final truncation
};

struct ConstructionLog {
    std::vector<DepthRecord> depths;
    std::string stopping_reason; // "max_layers" | "no_improvement"
    int selected_depth = 0;
};

// Ordered frozen layers; the deployable artifact.
struct StackModel {
    int num_vertex_labels = 1;
    int num_arc_labels = 1;
    std::vector<LayerParams> layers;
    ConstructionLog log;

    int num_layers() const { return static_cast<int>(layers.size()); }
};

struct StackConfig {
    int num_states = 10;        // C, same for every layer
    int max_layers = 4;
    int pool_size = 5;
    int patience = 1;           // consecutive non-improving depths before stopping
    int predecessor_depth = 1;  // frozen layers visible to a new layer; 0 = all
    double validation_fraction = 0.2; // stratified hold-out used for selection
    EmConfig em;                // em.num_states is overridden by num_states
    FingerprintOptions fingerprint;
    LinearConfig classifier;
    std::uint64_t seed = 0;
    int threads = 1;
};

// Runs inference layer by layer, feeding frozen assignments upward, then
// counts. Throws DataError on an empty stack or alphabet mismatch.
Fingerprint compute_fingerprint(const StackModel& stack, const Graph& graph, FingerprintMode mode);

std::vector<Fingerprint> compute_fingerprints(const StackModel& stack, const GraphDataset& dataset,
                                              FingerprintMode mode, int threads = 1);

// Counting from already-inferred assignments (used during construction; the
// same counting code backs compute_fingerprint).
std::vector<Fingerprint> fingerprints_from_table(const GraphDataset& dataset,
                                                 const StateAssignmentTable& table,
                                                 FingerprintMode mode);

struct PoolSelection {
    LayerParams params;
    std::vector<std::vector<int>> states; // winner's assignments on the full dataset
    std::vector<double> pool_scores;
    int selected = 0;
    double accuracy = 0.0;
};

// Trains pool_size candidate layers at depth stack.num_layers()+1 with
// distinct derived seeds and keeps the one whose fingerprints-up-to-depth
// maximize validation accuracy of the built-in linear classifier.
PoolSelection pool_train_select(const GraphDataset& dataset,
                                const std::vector<std::size_t>& fit_indices,
                                const std::vector<std::size_t>& val_indices,
                                const StackModel& stack, const StateAssignmentTable& table,
                                const std::vector<NeighborIndex>& indices,
                                const StackConfig& config);

// Incremental construction: grow depth while the supervised criterion
// improves on the best depth so far, then truncate to the best depth.
StackModel train_stack(const GraphDataset& train, const StackConfig& config);

// Inference table for a whole dataset under a trained stack.
StateAssignmentTable infer_stack_states(const StackModel& stack, const GraphDataset& dataset,
                                        int threads = 1);

// Versioned text model file, 17 significant digits; save -> load -> save is
// byte-identical.
void save_stack(const StackModel& stack, std::ostream& out);
void save_stack_file(const StackModel& stack, const std::string& path);
StackModel load_stack(std::istream& in);
StackModel load_stack_file(const std::string& path);

// CSV `graph_id,target,c_1,...,c_K` (header line included).
void write_fingerprint_csv(const std::vector<Fingerprint>& fps, const FingerprintOptions& options,
                           std::ostream& out);

// Per-class mean fingerprints, one CSV row per (class, layer):
// class,layer,<mean counts of that layer block>. Throws on unlabeled data.
void inspect_fingerprints(const StackModel& stack, const GraphDataset& dataset,
                          FingerprintMode mode, std::ostream& out, int threads = 1);

} // namespace cgmm

#endif
