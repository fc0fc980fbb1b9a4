#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfgrass/coarsen.hpp"
#include "sfgrass/errors.hpp"
#include "sfgrass/graph.hpp"
#include "sfgrass/sparsify.hpp"

namespace sfgrass {

enum class MmField { real, integer, pattern };
enum class MmSymmetry { general, symmetric };

struct MmEntry {
    std::int64_t row = 0; // 0-based
    std::int64_t col = 0; // 0-based
    double value = 0.0;
};

struct MatrixMarketData {
    std::vector<MmEntry> entries;
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    MmField field = MmField::real;
    MmSymmetry symmetry = MmSymmetry::general;
};

namespace detail {

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

inline double parse_double(const std::string& tok, std::size_t line_no) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + tok + "'");
    return v;
}

inline std::int64_t parse_int(const std::string& tok, std::size_t line_no) {
    std::int64_t v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad integer '" + tok + "'");
    return v;
}

/// Shortest decimal form that round-trips the double exactly.
inline std::string format_weight(double w) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", w);
    double back = 0.0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == w) {
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[40];
            std::snprintf(shorter, sizeof shorter, "%.*g", prec, w);
            double b2 = 0.0;
            std::from_chars(shorter, shorter + std::char_traits<char>::length(shorter), b2);
            if (b2 == w) return shorter;
        }
    }
    return buf;
}

} // namespace detail

/// Parse a Matrix Market coordinate file (real/integer/pattern,
/// general/symmetric). File indices are 1-based; the returned entries are
/// 0-based and pattern entries carry value 1.0.
inline MatrixMarketData parse_matrix_market(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw MalformedHeader("empty input");
    ++line_no;
    const auto header = detail::split_ws(line);
    if (header.size() < 5 || header[0] != "%%MatrixMarket")
        throw MalformedHeader("missing %%MatrixMarket banner");
    const std::string object = detail::lower(header[1]);
    const std::string format = detail::lower(header[2]);
    const std::string field_str = detail::lower(header[3]);
    const std::string symmetry_str = detail::lower(header[4]);
    if (object != "matrix" || format != "coordinate")
        throw MalformedHeader("expected 'matrix coordinate' header, got '" + object + " " +
                              format + "'");
    MatrixMarketData data;
    if (field_str == "real")
        data.field = MmField::real;
    else if (field_str == "integer")
        data.field = MmField::integer;
    else if (field_str == "pattern")
        data.field = MmField::pattern;
    else if (field_str == "complex")
        throw UnsupportedField("complex matrices are not supported");
    else
        throw MalformedHeader("unknown field '" + field_str + "'");
    if (symmetry_str == "general")
        data.symmetry = MmSymmetry::general;
    else if (symmetry_str == "symmetric")
        data.symmetry = MmSymmetry::symmetric;
    else
        throw MalformedHeader("unsupported symmetry '" + symmetry_str + "'");

    std::int64_t declared = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '%') continue;
        const auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        if (declared < 0) {
            if (toks.size() != 3)
                throw MalformedHeader("size line must be 'rows cols nnz', got '" + line + "'");
            data.rows = detail::parse_int(toks[0], line_no);
            data.cols = detail::parse_int(toks[1], line_no);
            declared = detail::parse_int(toks[2], line_no);
            if (data.rows < 0 || data.cols < 0 || declared < 0)
                throw MalformedHeader("negative size entry");
            data.entries.reserve(static_cast<std::size_t>(declared));
            continue;
        }
        const std::size_t want = data.field == MmField::pattern ? 2 : 3;
        if (toks.size() != want)
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(want) + " fields, got " + std::to_string(toks.size()));
        MmEntry e;
        e.row = detail::parse_int(toks[0], line_no) - 1;
        e.col = detail::parse_int(toks[1], line_no) - 1;
        e.value = data.field == MmField::pattern ? 1.0 : detail::parse_double(toks[2], line_no);
        if (e.row < 0 || e.row >= data.rows || e.col < 0 || e.col >= data.cols)
            throw IndexOutOfBounds("line " + std::to_string(line_no) + ": index (" +
                                   std::to_string(e.row + 1) + "," + std::to_string(e.col + 1) +
                                   ") outside " + std::to_string(data.rows) + "x" +
                                   std::to_string(data.cols));
        data.entries.push_back(e);
    }
    if (declared < 0) throw MalformedHeader("missing size line");
    if (static_cast<std::int64_t>(data.entries.size()) != declared)
        throw EntryCountMismatch("declared " + std::to_string(declared) + " entries, found " +
                                 std::to_string(data.entries.size()));
    return data;
}

/// Convert a square sparse matrix to a Laplacian graph: every strictly
/// lower-triangular nonzero A(p,q) becomes the edge (q,p) with weight
/// |A(p,q)|. The diagonal and the upper triangle are ignored.
inline Graph matrix_to_laplacian_graph(const MatrixMarketData& data) {
    if (data.rows != data.cols)
        throw NonSquareMatrix("matrix is " + std::to_string(data.rows) + "x" +
                              std::to_string(data.cols));
    std::vector<WeightedEdge> triples;
    triples.reserve(data.entries.size());
    for (const auto& e : data.entries) {
        if (e.row <= e.col) continue;
        if (e.value == 0.0) continue;
        triples.push_back({static_cast<NodeId>(e.col), static_cast<NodeId>(e.row),
                           std::abs(e.value)});
    }
    return build_graph(triples, static_cast<NodeId>(data.rows));
}

/// Edge-list TSV: one "u<TAB>v<TAB>w" line per edge with u < v, in
/// canonical sorted order. Weights round-trip bit-identically.
inline void write_edge_list(const Graph& g, std::ostream& out) {
    for (const auto& e : g.edges())
        out << e.u << '\t' << e.v << '\t' << detail::format_weight(e.weight) << '\n';
    if (!out) throw IoError("write_edge_list: stream failure");
}

struct EdgeListReadResult {
    Graph graph;
    std::size_t self_loops_dropped = 0;
};

/// Read an edge-list TSV. A trailing tag column (as written for
/// sparsifiers) is tolerated and ignored. Self-loop lines are dropped and
/// counted. When num_nodes is negative it is inferred as max id + 1.
inline EdgeListReadResult read_edge_list(std::istream& in, NodeId num_nodes = -1) {
    std::vector<WeightedEdge> triples;
    std::string line;
    std::size_t line_no = 0;
    NodeId max_id = -1;
    std::size_t self_loops = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto toks = detail::split_ws(line);
        if (toks.size() != 3 && toks.size() != 4)
            throw ParseError("line " + std::to_string(line_no) + ": expected 'u v w', got '" +
                             line + "'");
        const std::int64_t u = detail::parse_int(toks[0], line_no);
        const std::int64_t v = detail::parse_int(toks[1], line_no);
        const double w = detail::parse_double(toks[2], line_no);
        if (u < 0 || v < 0)
            throw ParseError("line " + std::to_string(line_no) + ": negative node id");
        if (u == v) {
            ++self_loops;
            continue;
        }
        triples.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), w});
        max_id = std::max({max_id, static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }
    const NodeId n = num_nodes >= 0 ? num_nodes : max_id + 1;
    return {build_graph(triples, n), self_loops};
}

/// Sparsifier TSV: edge-list lines with a trailing "tree"/"offtree" tag.
inline void write_sparsifier(const Sparsifier& p, std::ostream& out) {
    for (std::size_t i = 0; i < p.graph.num_edges(); ++i) {
        const auto& e = p.graph.edge(i);
        out << e.u << '\t' << e.v << '\t' << detail::format_weight(e.weight) << '\t'
            << (p.is_tree[i] ? "tree" : "offtree") << '\n';
    }
    if (!out) throw IoError("write_sparsifier: stream failure");
}

inline Sparsifier read_sparsifier(std::istream& in, NodeId num_nodes = -1) {
    std::vector<std::pair<WeightedEdge, std::uint8_t>> rows;
    std::string line;
    std::size_t line_no = 0;
    NodeId max_id = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto toks = detail::split_ws(line);
        if (toks.size() != 4)
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected 'u v w tree|offtree'");
        const std::int64_t u = detail::parse_int(toks[0], line_no);
        const std::int64_t v = detail::parse_int(toks[1], line_no);
        const double w = detail::parse_double(toks[2], line_no);
        std::uint8_t tree = 0;
        if (toks[3] == "tree")
            tree = 1;
        else if (toks[3] == "offtree")
            tree = 0;
        else
            throw ParseError("line " + std::to_string(line_no) + ": unknown tag '" + toks[3] +
                             "'");
        if (u < 0 || v < 0 || u == v)
            throw ParseError("line " + std::to_string(line_no) + ": bad edge (" +
                             std::to_string(u) + "," + std::to_string(v) + ")");
        rows.push_back({{static_cast<NodeId>(u), static_cast<NodeId>(v), w}, tree});
        max_id = std::max({max_id, static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }
    const NodeId n = num_nodes >= 0 ? num_nodes : max_id + 1;
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        const NodeId au = std::min(a.first.u, a.first.v), av = std::max(a.first.u, a.first.v);
        const NodeId bu = std::min(b.first.u, b.first.v), bv = std::max(b.first.u, b.first.v);
        return au != bu ? au < bu : av < bv;
    });
    Sparsifier p;
    std::vector<WeightedEdge> edges;
    edges.reserve(rows.size());
    for (const auto& [e, tree] : rows) {
        edges.push_back({std::min(e.u, e.v), std::max(e.u, e.v), e.weight});
        p.is_tree.push_back(tree);
    }
    p.graph = Graph(n, std::move(edges));

    // Tree edges must form a spanning forest of the sparsifier itself.
    detail::UnionFind uf(p.graph.num_nodes());
    std::size_t tree_count = 0;
    for (std::size_t i = 0; i < p.graph.num_edges(); ++i) {
        if (!p.is_tree[i]) continue;
        ++tree_count;
        const auto& e = p.graph.edge(i);
        const NodeId ru = uf.find(e.u);
        const NodeId rv = uf.find(e.v);
        if (ru == rv) throw InvalidInput("read_sparsifier: tree edges contain a cycle");
        uf.unite(ru, rv);
    }
    const auto comps = connected_components(p.graph);
    if (tree_count != static_cast<std::size_t>(p.graph.num_nodes() - comps.num_components))
        throw InvalidInput("read_sparsifier: tree edges do not span the sparsifier");
    return p;
}

/// Per-step aggregation map as "fine_node<TAB>cluster" lines.
inline void write_aggregation_map(const AggregationMap& m, std::ostream& out) {
    for (NodeId p = 0; p < m.num_fine(); ++p)
        out << p << '\t' << m.fine_to_coarse[static_cast<std::size_t>(p)] << '\n';
    if (!out) throw IoError("write_aggregation_map: stream failure");
}

/// Serialize a metrics report as one JSON document. Non-finite numbers are
/// replaced by null and listed under a top-level "warnings" array.
inline void write_metrics(const nlohmann::json& report, std::ostream& out) {
    nlohmann::json doc = report;
    std::vector<std::string> warnings;
    const std::function<void(nlohmann::json&, const std::string&)> sanitize =
        [&](nlohmann::json& node, const std::string& path) {
            if (node.is_number_float()) {
                const double v = node.get<double>();
                if (!std::isfinite(v)) {
                    warnings.push_back("non-finite value at " + path + " replaced by null");
                    node = nullptr;
                }
            } else if (node.is_object()) {
                for (auto& [key, child] : node.items()) sanitize(child, path + "/" + key);
            } else if (node.is_array()) {
                std::size_t i = 0;
                for (auto& child : node) sanitize(child, path + "/" + std::to_string(i++));
            }
        };
    sanitize(doc, "");
    if (!warnings.empty()) doc["warnings"] = warnings;
    out << doc.dump() << '\n';
    if (!out) throw IoError("write_metrics: stream failure");
}

} // namespace sfgrass
