#include "cgmm/graph.hpp"

#include "cgmm/errors.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace cgmm {

std::size_t GraphDataset::total_vertices() const {
    std::size_t n = 0;
    for (const Graph& g : graphs) n += g.vertex_labels.size();
    return n;
}

NeighborIndex::NeighborIndex(const Graph& g, int num_arc_labels)
    : num_vertices_(g.num_vertices()), num_arc_labels_(num_arc_labels) {
    const std::size_t buckets = static_cast<std::size_t>(num_vertices_) * num_arc_labels_;
    std::vector<std::size_t> counts(buckets, 0);
    for (const Arc& arc : g.arcs)
        ++counts[static_cast<std::size_t>(arc.dst) * num_arc_labels_ + (arc.label - 1)];

    offsets_.assign(buckets + 1, 0);
    for (std::size_t b = 0; b < buckets; ++b) offsets_[b + 1] = offsets_[b] + counts[b];

    sources_.resize(g.arcs.size());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const Arc& arc : g.arcs) {
        const std::size_t b = static_cast<std::size_t>(arc.dst) * num_arc_labels_ + (arc.label - 1);
        sources_[cursor[b]++] = arc.src;
    }
    // ascending source order within each (u, a) bucket
    for (std::size_t b = 0; b < buckets; ++b)
        std::sort(sources_.begin() + offsets_[b], sources_.begin() + offsets_[b + 1]);
}

NeighborIndex build_neighbor_index(const Graph& g, int num_arc_labels) {
    return NeighborIndex(g, num_arc_labels);
}

namespace {

struct LineTokens {
    std::vector<std::string> tokens;
    int line_no;
};

bool next_line(std::istream& in, LineTokens& out, int& line_no) {
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv(line);
        if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
        std::istringstream ss{std::string(sv)};
        std::vector<std::string> toks;
        std::string t;
        while (ss >> t) toks.push_back(t);
        if (toks.empty()) continue;
        out.tokens = std::move(toks);
        out.line_no = line_no;
        return true;
    }
    return false;
}

int parse_int(const std::string& s, const char* what, int line) {
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(s, &pos);
    } catch (const std::exception&) {
        throw ParseError(std::string("expected integer for ") + what + ", got '" + s + "'", line);
    }
    if (pos != s.size())
        throw ParseError(std::string("expected integer for ") + what + ", got '" + s + "'", line);
    return v;
}

} // namespace

GraphDataset parse_dataset(std::istream& in) {
    GraphDataset ds;
    bool have_header = false;
    int line_no = 0;
    LineTokens lt;

    bool in_graph = false;
    Graph cur;
    std::vector<int> declared;           // vertex index -> label, -1 = undeclared
    std::vector<Arc> pending_arcs;
    int cur_line = 0;

    auto finish_graph = [&](int end_line) {
        for (std::size_t i = 0; i < declared.size(); ++i)
            if (declared[i] < 0)
                throw ParseError("graph '" + cur.id + "' is missing vertex " + std::to_string(i) +
                                     " (vertex indices must cover 0..V-1)",
                                 end_line);
        cur.vertex_labels = declared;
        cur.arcs = std::move(pending_arcs);
        ds.graphs.push_back(std::move(cur));
        cur = Graph{};
        declared.clear();
        pending_arcs.clear();
        in_graph = false;
    };

    while (next_line(in, lt, line_no)) {
        const auto& t = lt.tokens;
        cur_line = lt.line_no;
        const std::string& kw = t[0];

        if (kw == "dataset") {
            if (have_header) throw ParseError("duplicate 'dataset' header", cur_line);
            if (t.size() != 4) throw ParseError("expected: dataset <name> <M> <A>", cur_line);
            ds.name = t[1];
            ds.num_vertex_labels = parse_int(t[2], "M", cur_line);
            ds.num_arc_labels = parse_int(t[3], "A", cur_line);
            if (ds.num_vertex_labels < 1 || ds.num_arc_labels < 1)
                throw ParseError("alphabet sizes must be >= 1", cur_line);
            have_header = true;
        } else if (kw == "graph") {
            if (!have_header) throw ParseError("'graph' before 'dataset' header", cur_line);
            if (in_graph) throw ParseError("'graph' inside an unterminated graph (missing 'end')", cur_line);
            if (t.size() != 3) throw ParseError("expected: graph <id> <target|->", cur_line);
            in_graph = true;
            cur.id = t[1];
            if (t[2] == "-") {
                cur.target = Graph::kNoTarget;
            } else {
                cur.target = parse_int(t[2], "target", cur_line);
                if (cur.target < 0) throw ParseError("target must be >= 0 or '-'", cur_line);
            }
        } else if (kw == "v") {
            if (!in_graph) throw ParseError("'v' outside a graph block", cur_line);
            if (t.size() != 3) throw ParseError("expected: v <vertex_index> <label>", cur_line);
            const int idx = parse_int(t[1], "vertex index", cur_line);
            const int label = parse_int(t[2], "vertex label", cur_line);
            if (idx < 0) throw ParseError("vertex index must be >= 0", cur_line);
            if (label < 1 || label > ds.num_vertex_labels)
                throw ParseError("vertex label " + std::to_string(label) + " outside alphabet {1.." +
                                     std::to_string(ds.num_vertex_labels) + "}",
                                 cur_line);
            if (static_cast<std::size_t>(idx) >= declared.size()) declared.resize(idx + 1, -1);
            if (declared[idx] >= 0)
                throw ParseError("duplicate vertex index " + std::to_string(idx), cur_line);
            declared[idx] = label;
        } else if (kw == "e") {
            if (!in_graph) throw ParseError("'e' outside a graph block", cur_line);
            if (t.size() != 5) throw ParseError("expected: e <src> <dst> <arc_label> <d|u>", cur_line);
            const int src = parse_int(t[1], "src", cur_line);
            const int dst = parse_int(t[2], "dst", cur_line);
            const int label = parse_int(t[3], "arc label", cur_line);
            auto known = [&](int v) {
                return v >= 0 && static_cast<std::size_t>(v) < declared.size() && declared[v] >= 0;
            };
            if (!known(src))
                throw ParseError("arc source " + std::to_string(src) + " is not a declared vertex", cur_line);
            if (!known(dst))
                throw ParseError("arc destination " + std::to_string(dst) + " is not a declared vertex",
                                 cur_line);
            if (label < 1 || label > ds.num_arc_labels)
                throw ParseError("arc label " + std::to_string(label) + " outside alphabet {1.." +
                                     std::to_string(ds.num_arc_labels) + "}",
                                 cur_line);
            if (t[4] == "d") {
                pending_arcs.push_back({src, dst, label});
            } else if (t[4] == "u") {
                pending_arcs.push_back({src, dst, label});
                pending_arcs.push_back({dst, src, label});
            } else {
                throw ParseError("direction flag must be 'd' or 'u', got '" + t[4] + "'", cur_line);
            }
        } else if (kw == "end") {
            if (!in_graph) throw ParseError("'end' outside a graph block", cur_line);
            if (t.size() != 1) throw ParseError("unexpected tokens after 'end'", cur_line);
            finish_graph(cur_line);
        } else {
            throw ParseError("unknown keyword '" + kw + "'", cur_line);
        }
    }
    if (in_graph) throw ParseError("unterminated graph '" + cur.id + "' at end of input", cur_line);
    if (!have_header) throw ParseError("missing 'dataset' header", line_no == 0 ? 1 : line_no);
    return ds;
}

GraphDataset parse_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    return parse_dataset(in);
}

void serialize_dataset(const GraphDataset& d, std::ostream& out) {
    out << "dataset " << d.name << ' ' << d.num_vertex_labels << ' ' << d.num_arc_labels << '\n';
    for (const Graph& g : d.graphs) {
        out << "graph " << g.id << ' ';
        if (g.has_target())
            out << g.target;
        else
            out << '-';
        out << '\n';
        for (int u = 0; u < g.num_vertices(); ++u)
            out << "v " << u << ' ' << g.vertex_labels[u] << '\n';
        for (const Arc& a : g.arcs)
            out << "e " << a.src << ' ' << a.dst << ' ' << a.label << " d\n";
        out << "end\n";
    }
}

std::string serialize_dataset(const GraphDataset& d) {
    std::ostringstream ss;
    serialize_dataset(d, ss);
    return ss.str();
}

std::vector<std::string> validate_dataset(const GraphDataset& d) {
    std::vector<std::string> violations;
    if (d.num_vertex_labels < 1) violations.push_back("dataset: vertex alphabet size M < 1");
    if (d.num_arc_labels < 1) violations.push_back("dataset: arc alphabet size A < 1");
    for (const Graph& g : d.graphs) {
        for (int u = 0; u < g.num_vertices(); ++u) {
            const int label = g.vertex_labels[u];
            if (label < 1 || label > d.num_vertex_labels)
                violations.push_back("graph '" + g.id + "': vertex " + std::to_string(u) + " label " +
                                     std::to_string(label) + " outside {1.." +
                                     std::to_string(d.num_vertex_labels) + "}");
        }
        for (std::size_t k = 0; k < g.arcs.size(); ++k) {
            const Arc& a = g.arcs[k];
            const std::string where = "graph '" + g.id + "': arc #" + std::to_string(k);
            if (a.src < 0 || a.src >= g.num_vertices() || a.dst < 0 || a.dst >= g.num_vertices())
                violations.push_back(where + " endpoint (" + std::to_string(a.src) + "," +
                                     std::to_string(a.dst) + ") out of range");
            if (a.label < 1 || a.label > d.num_arc_labels)
                violations.push_back(where + " label " + std::to_string(a.label) + " outside {1.." +
                                     std::to_string(d.num_arc_labels) + "}");
        }
        if (g.has_target() && g.target < 0)
            violations.push_back("graph '" + g.id + "': negative target");
    }
    return violations;
}

GraphDataset subset_dataset(const GraphDataset& d, std::span<const std::size_t> indices) {
    GraphDataset out;
    out.name = d.name;
    out.num_vertex_labels = d.num_vertex_labels;
    out.num_arc_labels = d.num_arc_labels;
    out.graphs.reserve(indices.size());
    for (std::size_t i : indices) out.graphs.push_back(d.graphs[i]);
    return out;
}

} // namespace cgmm
