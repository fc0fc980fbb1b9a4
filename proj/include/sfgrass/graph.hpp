#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sfgrass/errors.hpp"

namespace sfgrass {

using NodeId = std::int32_t;

struct WeightedEdge {
    NodeId u = 0;
    NodeId v = 0;
    double weight = 0.0;

    friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Weighted undirected graph with CSR adjacency. Immutable after
/// construction; canonical edge list is sorted by (u, v) with u < v.
class Graph {
public:
    Graph() = default;

    Graph(NodeId num_nodes, std::vector<WeightedEdge> canonical_edges)
        : n_(num_nodes), edges_(std::move(canonical_edges)) {
        build_adjacency();
    }

    NodeId num_nodes() const { return n_; }
    std::size_t num_edges() const { return edges_.size(); }
    std::span<const WeightedEdge> edges() const { return edges_; }
    const WeightedEdge& edge(std::size_t i) const { return edges_[i]; }

    /// Weighted degree D(p) = sum of incident edge weights.
    double degree(NodeId p) const { return degrees_[static_cast<std::size_t>(p)]; }

    std::span<const NodeId> neighbors(NodeId p) const {
        const auto b = adj_offsets_[static_cast<std::size_t>(p)];
        const auto e = adj_offsets_[static_cast<std::size_t>(p) + 1];
        return {adj_nodes_.data() + b, adj_nodes_.data() + e};
    }

    std::span<const double> neighbor_weights(NodeId p) const {
        const auto b = adj_offsets_[static_cast<std::size_t>(p)];
        const auto e = adj_offsets_[static_cast<std::size_t>(p) + 1];
        return {adj_weights_.data() + b, adj_weights_.data() + e};
    }

    /// Weight of edge (u, v); 0 when absent.
    double edge_weight(NodeId u, NodeId v) const {
        const auto nb = neighbors(u);
        const auto it = std::lower_bound(nb.begin(), nb.end(), v);
        if (it == nb.end() || *it != v) return 0.0;
        return neighbor_weights(u)[static_cast<std::size_t>(it - nb.begin())];
    }

    bool has_edge(NodeId u, NodeId v) const { return edge_weight(u, v) != 0.0; }

    double total_weight() const {
        double s = 0.0;
        for (const auto& e : edges_) s += e.weight;
        return s;
    }

private:
    void build_adjacency() {
        const auto n = static_cast<std::size_t>(n_);
        adj_offsets_.assign(n + 1, 0);
        for (const auto& e : edges_) {
            ++adj_offsets_[static_cast<std::size_t>(e.u) + 1];
            ++adj_offsets_[static_cast<std::size_t>(e.v) + 1];
        }
        for (std::size_t i = 0; i < n; ++i) adj_offsets_[i + 1] += adj_offsets_[i];
        adj_nodes_.resize(2 * edges_.size());
        adj_weights_.resize(2 * edges_.size());
        // edges_ is sorted by (u, v) with u < v: filling each row's smaller
        // neighbors (from the v side) before its larger ones (from the u
        // side) leaves every row sorted without a per-row sort.
        std::vector<std::size_t> cursor(adj_offsets_.begin(), adj_offsets_.end() - 1);
        for (const auto& e : edges_) {
            adj_nodes_[cursor[static_cast<std::size_t>(e.v)]] = e.u;
            adj_weights_[cursor[static_cast<std::size_t>(e.v)]++] = e.weight;
        }
        for (const auto& e : edges_) {
            adj_nodes_[cursor[static_cast<std::size_t>(e.u)]] = e.v;
            adj_weights_[cursor[static_cast<std::size_t>(e.u)]++] = e.weight;
        }
        degrees_.assign(n, 0.0);
        for (std::size_t p = 0; p < n; ++p) {
            double d = 0.0;
            for (double w : neighbor_weights(static_cast<NodeId>(p))) d += w;
            degrees_[p] = d;
        }
    }

    NodeId n_ = 0;
    std::vector<WeightedEdge> edges_;
    std::vector<std::size_t> adj_offsets_;
    std::vector<NodeId> adj_nodes_;
    std::vector<double> adj_weights_;
    std::vector<double> degrees_;
};

/// Build a graph from raw (u, v, w) triples. Self-loops and zero weights are
/// dropped, duplicate/reversed pairs merged by weight summation, negative
/// weights rejected.
inline Graph build_graph(std::span<const WeightedEdge> triples, NodeId num_nodes) {
    if (num_nodes < 0) throw NodeIdOutOfRange("negative node count");
    std::vector<WeightedEdge> canon;
    canon.reserve(triples.size());
    for (const auto& t : triples) {
        if (t.u < 0 || t.u >= num_nodes || t.v < 0 || t.v >= num_nodes)
            throw NodeIdOutOfRange("node id (" + std::to_string(t.u) + "," + std::to_string(t.v) +
                                   ") outside [0," + std::to_string(num_nodes) + ")");
        if (t.weight < 0.0)
            throw NegativeWeight("negative weight on edge (" + std::to_string(t.u) + "," +
                                 std::to_string(t.v) + ")");
        if (t.u == t.v) continue;
        if (t.weight == 0.0) continue;
        canon.push_back({std::min(t.u, t.v), std::max(t.u, t.v), t.weight});
    }
    std::sort(canon.begin(), canon.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    std::vector<WeightedEdge> merged;
    merged.reserve(canon.size());
    for (const auto& e : canon) {
        if (!merged.empty() && merged.back().u == e.u && merged.back().v == e.v)
            merged.back().weight += e.weight;
        else
            merged.push_back(e);
    }
    return Graph(num_nodes, std::move(merged));
}

inline Graph build_graph(const std::vector<WeightedEdge>& triples, NodeId num_nodes) {
    return build_graph(std::span<const WeightedEdge>(triples), num_nodes);
}

/// y = L x with L = D - A, row by row in fixed CSR order.
inline std::vector<double> laplacian_apply(const Graph& g, std::span<const double> x) {
    if (static_cast<NodeId>(x.size()) != g.num_nodes())
        throw DimensionMismatch("laplacian_apply: vector length " + std::to_string(x.size()) +
                                " != node count " + std::to_string(g.num_nodes()));
    std::vector<double> y(x.size());
    for (NodeId p = 0; p < g.num_nodes(); ++p) {
        double acc = g.degree(p) * x[static_cast<std::size_t>(p)];
        const auto nb = g.neighbors(p);
        const auto wt = g.neighbor_weights(p);
        for (std::size_t i = 0; i < nb.size(); ++i)
            acc -= wt[i] * x[static_cast<std::size_t>(nb[i])];
        y[static_cast<std::size_t>(p)] = acc;
    }
    return y;
}

/// x^T L x accumulated edge-wise: sum of w(u,v) (x(u) - x(v))^2.
inline double quadratic_form(const Graph& g, std::span<const double> x) {
    if (static_cast<NodeId>(x.size()) != g.num_nodes())
        throw DimensionMismatch("quadratic_form: vector length " + std::to_string(x.size()) +
                                " != node count " + std::to_string(g.num_nodes()));
    double acc = 0.0;
    for (const auto& e : g.edges()) {
        const double d = x[static_cast<std::size_t>(e.u)] - x[static_cast<std::size_t>(e.v)];
        acc += e.weight * d * d;
    }
    return acc;
}

struct ComponentLabels {
    std::vector<NodeId> label;
    NodeId num_components = 0;
};

/// BFS labeling; component ids follow the order of first-seen node ids, so
/// the root of each component is its minimum node id.
inline ComponentLabels connected_components(const Graph& g) {
    const auto n = static_cast<std::size_t>(g.num_nodes());
    ComponentLabels out;
    out.label.assign(n, -1);
    std::vector<NodeId> queue;
    for (NodeId start = 0; start < g.num_nodes(); ++start) {
        if (out.label[static_cast<std::size_t>(start)] >= 0) continue;
        const NodeId comp = out.num_components++;
        out.label[static_cast<std::size_t>(start)] = comp;
        queue.clear();
        queue.push_back(start);
        for (std::size_t head = 0; head < queue.size(); ++head) {
            for (NodeId q : g.neighbors(queue[head])) {
                if (out.label[static_cast<std::size_t>(q)] < 0) {
                    out.label[static_cast<std::size_t>(q)] = comp;
                    queue.push_back(q);
                }
            }
        }
    }
    return out;
}

} // namespace sfgrass
