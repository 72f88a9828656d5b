#ifndef CGMM_GRAPH_HPP
#define CGMM_GRAPH_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cgmm {

// Conventions used throughout the library:
//   - vertex indices are 0-based within a graph
//   - vertex labels live in {1..M}, arc labels in {1..A} (1-based, as in the
//     dataset text format; label 0 is free as a sentinel)
//   - arcs are directed; an undirected edge is two arcs sharing one label

struct Arc {
    int src = 0;
    int dst = 0;
    int label = 1;
    bool operator==(const Arc&) const = default;
};

struct Graph {
    std::string id;
    std::vector<int> vertex_labels; // index = vertex, value in {1..M}
    std::vector<Arc> arcs;          // duplicates allowed, counted with multiplicity
    int target = kNoTarget;         // class label >= 0, or kNoTarget

    static constexpr int kNoTarget = -1;

    int num_vertices() const { return static_cast<int>(vertex_labels.size()); }
    bool has_target() const { return target != kNoTarget; }
};

struct GraphDataset {
    std::string name;
    int num_vertex_labels = 1; // M, declared alphabet size (not inferred)
    int num_arc_labels = 1;    // A
    std::vector<Graph> graphs;

    std::size_t size() const { return graphs.size(); }
    std::size_t total_vertices() const;
};

// Incoming-arc neighborhoods: Ne_a(u) = multiset of sources v of arcs (v,u)
// with label a, in ascending source order. Context flows along arc direction.
class NeighborIndex {
public:
    NeighborIndex() = default;
    NeighborIndex(const Graph& g, int num_arc_labels);

    // a is a 1-based arc label
    std::span<const int> neighbors(int u, int a) const {
        const std::size_t b = static_cast<std::size_t>(u) * num_arc_labels_ + (a - 1);
        return {sources_.data() + offsets_[b], sources_.data() + offsets_[b + 1]};
    }

    int in_degree(int u) const {
        const std::size_t b = static_cast<std::size_t>(u) * num_arc_labels_;
        return static_cast<int>(offsets_[b + num_arc_labels_] - offsets_[b]);
    }

    int num_vertices() const { return num_vertices_; }
    int num_arc_labels() const { return num_arc_labels_; }

private:
    int num_vertices_ = 0;
    int num_arc_labels_ = 0;
    std::vector<std::size_t> offsets_; // size V*A + 1
    std::vector<int> sources_;
};

NeighborIndex build_neighbor_index(const Graph& g, int num_arc_labels);

// Line-based dataset text format ('#' starts a comment):
//   dataset <name> <M> <A>
//   graph <id> <target|->
//   v <vertex_index> <label>
//   e <src> <dst> <arc_label> <d|u>
//   end
// Vertices must be declared before arcs referencing them; 'u' expands into
// two directed arcs sharing the label. Throws ParseError with line numbers.
GraphDataset parse_dataset(std::istream& in);
GraphDataset parse_dataset_file(const std::string& path);

// Canonical form: vertices in index order, arcs in stored order, all 'd'.
// parse(serialize(d)) == d, and serialization is idempotent byte-wise.
void serialize_dataset(const GraphDataset& d, std::ostream& out);
std::string serialize_dataset(const GraphDataset& d);

// Empty iff all Graph invariants hold; entries name the graph and offence.
std::vector<std::string> validate_dataset(const GraphDataset& d);

// New dataset holding copies of the selected graphs, same alphabets.
GraphDataset subset_dataset(const GraphDataset& d, std::span<const std::size_t> indices);

} // namespace cgmm

#endif
