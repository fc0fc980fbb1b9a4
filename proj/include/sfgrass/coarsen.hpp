#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sfgrass/errors.hpp"
#include "sfgrass/graph.hpp"
#include "sfgrass/random.hpp"
#include "sfgrass/smoothing.hpp"

namespace sfgrass {

/// Node aggregation at one level: fine node -> coarse cluster id. Cluster
/// ids are contiguous, every cluster is non-empty and connected in the fine
/// graph (merges only happen across edges).
struct AggregationMap {
    std::vector<NodeId> fine_to_coarse;
    std::vector<NodeId> cluster_sizes;

    NodeId num_clusters() const { return static_cast<NodeId>(cluster_sizes.size()); }
    NodeId num_fine() const { return static_cast<NodeId>(fine_to_coarse.size()); }
};

struct CoarsenParams {
    int max_cluster_size = 8;
    double target_ratio = 0.4;
    NodeId coarsest_size = 64;
    int max_levels = 20;
    bool heavy_edge = false; // fallback: order merges by raw weight instead of affinity
    EmbedParams embed;

    void validate() const {
        if (max_cluster_size < 2) throw InvalidInput("CoarsenParams: max_cluster_size must be >= 2");
        if (!(target_ratio > 0.0 && target_ratio < 1.0))
            throw InvalidInput("CoarsenParams: target_ratio must be in (0,1)");
        if (coarsest_size < 1) throw InvalidInput("CoarsenParams: coarsest_size must be >= 1");
        if (max_levels < 1) throw InvalidInput("CoarsenParams: max_levels must be >= 1");
        embed.validate();
    }
};

struct Hierarchy {
    std::vector<Graph> graphs;                 // G_0 .. G_lf
    std::vector<AggregationMap> maps;          // maps[i]: graphs[i] -> graphs[i+1]
    std::vector<EmbeddingMatrix> embeddings;   // embedding of graphs[i] used to build maps[i]

    std::size_t num_levels() const { return graphs.size(); }
    const Graph& coarsest() const { return graphs.back(); }
};

/// Sparse matrix in coordinate form, enough for the mapping operators and
/// their structural checks.
struct SparseCoo {
    NodeId rows = 0;
    NodeId cols = 0;
    std::vector<NodeId> row;
    std::vector<NodeId> col;
    std::vector<double> value;

    void push(NodeId r, NodeId c, double v) {
        row.push_back(r);
        col.push_back(c);
        value.push_back(v);
    }
};

/// Restriction H (cluster averaging) and prolongation H+ (piecewise
/// constant): H(i,p) = 1/|S_i| for p in S_i, H+(p,i) = 1 for p in S_i.
/// H * H+ is the identity on the coarse space.
inline std::pair<SparseCoo, SparseCoo> mapping_operators(const AggregationMap& m) {
    const NodeId n_fine = m.num_fine();
    const NodeId n_coarse = m.num_clusters();
    SparseCoo h, h_plus;
    h.rows = n_coarse;
    h.cols = n_fine;
    h_plus.rows = n_fine;
    h_plus.cols = n_coarse;
    for (NodeId p = 0; p < n_fine; ++p) {
        const NodeId i = m.fine_to_coarse[static_cast<std::size_t>(p)];
        h.push(i, p, 1.0 / static_cast<double>(m.cluster_sizes[static_cast<std::size_t>(i)]));
        h_plus.push(p, i, 1.0);
    }
    return {std::move(h), std::move(h_plus)};
}

/// x_coarse = H x_fine (cluster averages).
inline std::vector<double> apply_restriction(const AggregationMap& m, std::span<const double> x) {
    if (static_cast<NodeId>(x.size()) != m.num_fine())
        throw DimensionMismatch("apply_restriction: vector length mismatch");
    std::vector<double> out(static_cast<std::size_t>(m.num_clusters()), 0.0);
    for (NodeId p = 0; p < m.num_fine(); ++p)
        out[static_cast<std::size_t>(m.fine_to_coarse[static_cast<std::size_t>(p)])] +=
            x[static_cast<std::size_t>(p)];
    for (NodeId i = 0; i < m.num_clusters(); ++i)
        out[static_cast<std::size_t>(i)] /= static_cast<double>(m.cluster_sizes[static_cast<std::size_t>(i)]);
    return out;
}

/// x_fine = H+ x_coarse (copy each cluster's value to its members).
inline std::vector<double> apply_prolongation(const AggregationMap& m, std::span<const double> x) {
    if (static_cast<NodeId>(x.size()) != m.num_clusters())
        throw DimensionMismatch("apply_prolongation: vector length mismatch");
    std::vector<double> out(static_cast<std::size_t>(m.num_fine()));
    for (NodeId p = 0; p < m.num_fine(); ++p)
        out[static_cast<std::size_t>(p)] =
            x[static_cast<std::size_t>(m.fine_to_coarse[static_cast<std::size_t>(p)])];
    return out;
}

/// Galerkin coarse graph: omega_l(i,j) = sum of fine weights crossing
/// S_i x S_j. Equal to the off-diagonal of (H+)^T L H+ with the sign
/// flipped; intra-cluster edges collapse.
inline Graph coarse_graph(const Graph& fine, const AggregationMap& m) {
    if (m.num_fine() != fine.num_nodes())
        throw DimensionMismatch("coarse_graph: aggregation map does not match graph");
    std::vector<WeightedEdge> coarse_edges;
    coarse_edges.reserve(fine.num_edges());
    for (const auto& e : fine.edges()) {
        const NodeId cu = m.fine_to_coarse[static_cast<std::size_t>(e.u)];
        const NodeId cv = m.fine_to_coarse[static_cast<std::size_t>(e.v)];
        if (cu == cv) continue;
        coarse_edges.push_back({std::min(cu, cv), std::max(cu, cv), e.weight});
    }
    return build_graph(coarse_edges, m.num_clusters());
}

namespace detail {

class UnionFind {
public:
    explicit UnionFind(NodeId n) : parent_(static_cast<std::size_t>(n)), size_(static_cast<std::size_t>(n), 1) {
        std::iota(parent_.begin(), parent_.end(), NodeId{0});
    }

    NodeId find(NodeId x) {
        while (parent_[static_cast<std::size_t>(x)] != x) {
            parent_[static_cast<std::size_t>(x)] =
                parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
            x = parent_[static_cast<std::size_t>(x)];
        }
        return x;
    }

    NodeId size(NodeId root) { return size_[static_cast<std::size_t>(root)]; }

    /// Merge the two roots; the smaller id stays the root so relabeling by
    /// first-seen order is stable.
    NodeId unite(NodeId ra, NodeId rb) {
        const NodeId keep = std::min(ra, rb);
        const NodeId drop = std::max(ra, rb);
        parent_[static_cast<std::size_t>(drop)] = keep;
        size_[static_cast<std::size_t>(keep)] += size_[static_cast<std::size_t>(drop)];
        return keep;
    }

private:
    std::vector<NodeId> parent_;
    std::vector<NodeId> size_;
};

/// Greedy edge contraction in descending priority order with a cluster size
/// cap and an early stop at the target cluster count.
inline AggregationMap contract_by_priority(const Graph& g, std::span<const double> priority,
                                           const CoarsenParams& params) {
    const NodeId n = g.num_nodes();
    std::vector<std::size_t> order(g.num_edges());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (priority[a] != priority[b]) return priority[a] > priority[b];
        const auto& ea = g.edge(a);
        const auto& eb = g.edge(b);
        return ea.u != eb.u ? ea.u < eb.u : ea.v < eb.v;
    });

    UnionFind uf(n);
    NodeId clusters = n;
    const double target = params.target_ratio * static_cast<double>(n);
    for (std::size_t idx : order) {
        if (static_cast<double>(clusters) <= target) break;
        const auto& e = g.edge(idx);
        const NodeId ru = uf.find(e.u);
        const NodeId rv = uf.find(e.v);
        if (ru == rv) continue;
        if (uf.size(ru) + uf.size(rv) > params.max_cluster_size) continue;
        uf.unite(ru, rv);
        --clusters;
    }

    AggregationMap m;
    m.fine_to_coarse.assign(static_cast<std::size_t>(n), -1);
    std::vector<NodeId> root_to_cluster(static_cast<std::size_t>(n), -1);
    NodeId next = 0;
    for (NodeId p = 0; p < n; ++p) {
        const NodeId r = uf.find(p);
        if (root_to_cluster[static_cast<std::size_t>(r)] < 0) {
            root_to_cluster[static_cast<std::size_t>(r)] = next++;
            m.cluster_sizes.push_back(0);
        }
        const NodeId c = root_to_cluster[static_cast<std::size_t>(r)];
        m.fine_to_coarse[static_cast<std::size_t>(p)] = c;
        ++m.cluster_sizes[static_cast<std::size_t>(c)];
    }
    return m;
}

} // namespace detail

/// Per-edge affinity in the embedding space: squared cosine of the two
/// endpoint rows. Zero rows get affinity 0.
inline std::vector<double> edge_affinities(const Graph& g, const EmbeddingMatrix& x) {
    if (x.num_nodes != g.num_nodes())
        throw EmbeddingMismatch("edge_affinities: embedding built on a different node count");
    std::vector<double> row_norm2(static_cast<std::size_t>(g.num_nodes()), 0.0);
    for (const auto& col : x.columns)
        for (std::size_t p = 0; p < col.size(); ++p) row_norm2[p] += col[p] * col[p];
    std::vector<double> affinity(g.num_edges());
    for (std::size_t i = 0; i < g.num_edges(); ++i) {
        const auto& e = g.edge(i);
        const double denom = row_norm2[static_cast<std::size_t>(e.u)] *
                             row_norm2[static_cast<std::size_t>(e.v)];
        if (denom == 0.0) {
            affinity[i] = 0.0;
            continue;
        }
        const double dot = x.row_dot(e.u, e.v);
        affinity[i] = dot * dot / denom;
    }
    return affinity;
}

/// Greedy affinity aggregation: contract edges in descending embedding
/// affinity, capped at max_cluster_size, stopping once the cluster count
/// reaches target_ratio * N. Unmatched nodes stay singletons.
inline AggregationMap aggregate(const Graph& g, const EmbeddingMatrix& x,
                                const CoarsenParams& params) {
    params.validate();
    const std::vector<double> affinity = edge_affinities(g, x);
    return detail::contract_by_priority(g, affinity, params);
}

/// Fallback aggregation ordered by raw edge weight (heavy-edge matching).
inline AggregationMap aggregate_by_weight(const Graph& g, const CoarsenParams& params) {
    params.validate();
    std::vector<double> weight(g.num_edges());
    for (std::size_t i = 0; i < g.num_edges(); ++i) weight[i] = g.edge(i).weight;
    return detail::contract_by_priority(g, weight, params);
}

/// Multilevel spectral graph reduction: repeat embed -> aggregate ->
/// coarse_graph until the graph is small enough, the level cap is hit, or a
/// level fails to shrink. A level whose embedding degenerates (every
/// component smoothed exactly to a constant) falls back to heavy-edge
/// aggregation rather than erroring.
inline Hierarchy build_hierarchy(const Graph& g, const CoarsenParams& params) {
    params.validate();
    Hierarchy h;
    h.graphs.push_back(g);
    while (h.graphs.back().num_nodes() > params.coarsest_size &&
           static_cast<int>(h.graphs.size()) < params.max_levels) {
        const Graph& fine = h.graphs.back();
        if (fine.num_edges() == 0) break;
        EmbedParams ep = params.embed;
        ep.seed = substream_seed(params.embed.seed, 0x10000ULL + h.maps.size());
        AggregationMap m;
        EmbeddingMatrix x;
        if (params.heavy_edge) {
            m = aggregate_by_weight(fine, params);
        } else {
            try {
                x = embed(fine, ep);
                m = aggregate(fine, x, params);
            } catch (const DegenerateColumn&) {
                m = aggregate_by_weight(fine, params);
            }
        }
        if (m.num_clusters() == fine.num_nodes()) break;
        Graph coarse = coarse_graph(fine, m);
        h.maps.push_back(std::move(m));
        h.embeddings.push_back(std::move(x));
        h.graphs.push_back(std::move(coarse));
    }
    return h;
}

} // namespace sfgrass
