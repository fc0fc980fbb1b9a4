#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sfgrass/coarsen.hpp"
#include "sfgrass/detail/parallel.hpp"
#include "sfgrass/errors.hpp"
#include "sfgrass/graph.hpp"
#include "sfgrass/smoothing.hpp"

namespace sfgrass {

/// Subgraph of a parent graph split into a spanning forest (tree edges) and
/// the off-tree edges added on top of it. Edge weights match the parent.
struct Sparsifier {
    Graph graph;
    std::vector<std::uint8_t> is_tree; // parallel to graph.edges()

    std::size_t tree_edge_count() const {
        return static_cast<std::size_t>(std::count(is_tree.begin(), is_tree.end(), 1));
    }
    std::size_t off_tree_edge_count() const { return graph.num_edges() - tree_edge_count(); }
};

enum class ScoreEmbedding { sparsifier, graph };

struct SparsifyParams {
    double budget_fraction = 0.05; // off-tree edges per level, as a fraction of the level's node count
    ScoreEmbedding score_embedding = ScoreEmbedding::sparsifier;
    int score_batches = 8; // per-level budget is spent in this many rounds, re-embedding between rounds
    EmbedParams embed;
    CoarsenParams coarsen;

    void validate() const {
        if (!(budget_fraction >= 0.0))
            throw InvalidInput("SparsifyParams: budget_fraction must be >= 0");
        if (score_batches < 1) throw InvalidInput("SparsifyParams: score_batches must be >= 1");
        embed.validate();
        coarsen.validate();
    }
};

/// Kruskal maximum spanning forest: descending weight, ties by smallest
/// (u, v) pair. Returns indices into g.edges(), ascending.
inline std::vector<std::size_t> max_spanning_forest(const Graph& g) {
    std::vector<std::size_t> order(g.num_edges());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ea = g.edge(a);
        const auto& eb = g.edge(b);
        if (ea.weight != eb.weight) return ea.weight > eb.weight;
        return ea.u != eb.u ? ea.u < eb.u : ea.v < eb.v;
    });
    detail::UnionFind uf(g.num_nodes());
    std::vector<std::size_t> kept;
    kept.reserve(static_cast<std::size_t>(g.num_nodes()));
    for (std::size_t idx : order) {
        const auto& e = g.edge(idx);
        const NodeId ru = uf.find(e.u);
        const NodeId rv = uf.find(e.v);
        if (ru == rv) continue;
        uf.unite(ru, rv);
        kept.push_back(idx);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

/// Whole graph as a sparsifier of itself, partitioned into its maximum
/// spanning forest plus off-tree edges.
inline Sparsifier full_graph_sparsifier(const Graph& g) {
    Sparsifier p;
    p.graph = g;
    p.is_tree.assign(g.num_edges(), 0);
    for (std::size_t idx : max_spanning_forest(g)) p.is_tree[idx] = 1;
    return p;
}

/// Spanning-forest-only sparsifier (no off-tree edges).
inline Sparsifier forest_sparsifier(const Graph& g) {
    const std::vector<std::size_t> kept = max_spanning_forest(g);
    std::vector<WeightedEdge> edges;
    edges.reserve(kept.size());
    for (std::size_t idx : kept) edges.push_back(g.edge(idx));
    Sparsifier p;
    p.graph = Graph(g.num_nodes(), std::move(edges));
    p.is_tree.assign(kept.size(), 1);
    return p;
}

/// True when every edge of p exists in g with identical weight.
inline bool is_subgraph(const Sparsifier& p, const Graph& g) {
    if (p.graph.num_nodes() != g.num_nodes()) return false;
    auto pe = p.graph.edges();
    auto ge = g.edges();
    std::size_t j = 0;
    for (const auto& e : pe) {
        while (j < ge.size() && (ge[j].u < e.u || (ge[j].u == e.u && ge[j].v < e.v))) ++j;
        if (j == ge.size() || ge[j].u != e.u || ge[j].v != e.v || ge[j].weight != e.weight)
            return false;
    }
    return true;
}

/// True when p connects exactly the components of g.
inline bool spans_components(const Sparsifier& p, const Graph& g) {
    if (p.graph.num_nodes() != g.num_nodes()) return false;
    return connected_components(p.graph).num_components ==
           connected_components(g).num_components;
}

namespace detail {

struct PairKey {
    NodeId a, b; // a < b
    friend bool operator<(const PairKey& x, const PairKey& y) {
        return x.a != y.a ? x.a < y.a : x.b < y.b;
    }
    friend bool operator==(const PairKey&, const PairKey&) = default;
};

} // namespace detail

/// Map a coarse sparsifier down one level: per-cluster maximum spanning
/// trees for the inner-cluster edges, plus the single maximum-weight fine
/// edge crossing each cluster pair joined by a coarse sparsifier edge.
/// Crossing edges lifted from coarse tree edges stitch the cluster trees
/// into the fine spanning forest; crossing edges lifted from coarse
/// off-tree edges close cycles and become fine off-tree edges.
inline Sparsifier backward_map(const Sparsifier& p_coarse, const Graph& g_fine,
                               const AggregationMap& m) {
    if (m.num_fine() != g_fine.num_nodes())
        throw DimensionMismatch("backward_map: aggregation map does not match fine graph");
    if (p_coarse.graph.num_nodes() != m.num_clusters())
        throw DimensionMismatch("backward_map: coarse sparsifier does not match aggregation map");

    const auto& f2c = m.fine_to_coarse;

    // Best crossing fine edge per coarse pair: max weight, ties by pair.
    std::vector<std::pair<detail::PairKey, std::size_t>> crossing;
    std::vector<std::size_t> intra;
    for (std::size_t i = 0; i < g_fine.num_edges(); ++i) {
        const auto& e = g_fine.edge(i);
        const NodeId cu = f2c[static_cast<std::size_t>(e.u)];
        const NodeId cv = f2c[static_cast<std::size_t>(e.v)];
        if (cu == cv) {
            intra.push_back(i);
        } else {
            crossing.push_back({{std::min(cu, cv), std::max(cu, cv)}, i});
        }
    }
    std::sort(crossing.begin(), crossing.end(), [&](const auto& x, const auto& y) {
        if (!(x.first == y.first)) return x.first < y.first;
        const auto& ex = g_fine.edge(x.second);
        const auto& ey = g_fine.edge(y.second);
        if (ex.weight != ey.weight) return ex.weight > ey.weight;
        return ex.u != ey.u ? ex.u < ey.u : ex.v < ey.v;
    });
    std::vector<std::pair<detail::PairKey, std::size_t>> best;
    for (const auto& c : crossing)
        if (best.empty() || !(best.back().first == c.first)) best.push_back(c);

    std::vector<std::size_t> selected; // fine edge indices
    std::vector<std::uint8_t> selected_tree;
    detail::UnionFind uf(g_fine.num_nodes());

    // (a) Per-cluster maximum spanning trees over the inner-cluster edges.
    std::sort(intra.begin(), intra.end(), [&](std::size_t a, std::size_t b) {
        const auto& ea = g_fine.edge(a);
        const auto& eb = g_fine.edge(b);
        if (ea.weight != eb.weight) return ea.weight > eb.weight;
        return ea.u != eb.u ? ea.u < eb.u : ea.v < eb.v;
    });
    for (std::size_t idx : intra) {
        const auto& e = g_fine.edge(idx);
        const NodeId ru = uf.find(e.u);
        const NodeId rv = uf.find(e.v);
        if (ru == rv) continue;
        uf.unite(ru, rv);
        selected.push_back(idx);
        selected_tree.push_back(1);
    }

    // (b) One crossing edge per coarse sparsifier edge; coarse tree edges
    // first so their lifts claim the tree slots.
    auto lift = [&](bool want_tree_edges) {
        for (std::size_t ci = 0; ci < p_coarse.graph.num_edges(); ++ci) {
            if ((p_coarse.is_tree[ci] != 0) != want_tree_edges) continue;
            const auto& ce = p_coarse.graph.edge(ci);
            const detail::PairKey key{std::min(ce.u, ce.v), std::max(ce.u, ce.v)};
            const auto it = std::lower_bound(
                best.begin(), best.end(), key,
                [](const auto& entry, const detail::PairKey& k) { return entry.first < k; });
            if (it == best.end() || !(it->first == key))
                throw InconsistentMap("backward_map: coarse edge (" + std::to_string(ce.u) +
                                      "," + std::to_string(ce.v) +
                                      ") has no crossing fine edge");
            const auto& fe = g_fine.edge(it->second);
            const NodeId ru = uf.find(fe.u);
            const NodeId rv = uf.find(fe.v);
            selected.push_back(it->second);
            if (ru != rv) {
                uf.unite(ru, rv);
                selected_tree.push_back(1);
            } else {
                selected_tree.push_back(0);
            }
        }
    };
    lift(true);
    lift(false);

    // Assemble the fine sparsifier in canonical edge order.
    std::vector<std::size_t> perm(selected.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return selected[a] < selected[b]; });
    std::vector<WeightedEdge> edges;
    edges.reserve(selected.size());
    Sparsifier out;
    out.is_tree.reserve(selected.size());
    for (std::size_t i : perm) {
        edges.push_back(g_fine.edge(selected[i]));
        out.is_tree.push_back(selected_tree[i]);
    }
    out.graph = Graph(g_fine.num_nodes(), std::move(edges));
    return out;
}

struct ScoredEdge {
    NodeId u = 0;
    NodeId v = 0;
    double weight = 0.0;
    double score = 0.0;
};

/// Distortion score w(p,q) * sum_c (x_c(p) - x_c(q))^2 for every candidate
/// edge of g missing from the sparsifier, sorted descending (ties by pair).
inline std::vector<ScoredEdge> edge_distortion_scores(const Graph& g, const Sparsifier& p,
                                                      const EmbeddingMatrix& x) {
    if (x.num_nodes != g.num_nodes())
        throw EmbeddingMismatch("edge_distortion_scores: embedding node count mismatch");
    std::vector<ScoredEdge> scored;
    scored.reserve(g.num_edges() - std::min(g.num_edges(), p.graph.num_edges()));
    auto pe = p.graph.edges();
    std::size_t j = 0;
    for (const auto& e : g.edges()) {
        while (j < pe.size() && (pe[j].u < e.u || (pe[j].u == e.u && pe[j].v < e.v))) ++j;
        if (j < pe.size() && pe[j].u == e.u && pe[j].v == e.v) continue;
        scored.push_back({e.u, e.v, e.weight, 0.0});
    }
    detail::parallel_for(scored.size(), [&](std::size_t i) {
        scored[i].score = scored[i].weight * x.row_dist2(scored[i].u, scored[i].v);
    });
    std::sort(scored.begin(), scored.end(), [](const ScoredEdge& a, const ScoredEdge& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    return scored;
}

namespace detail {

/// Top `take` candidates by distortion score without sorting the whole
/// candidate list; matches the head of edge_distortion_scores exactly.
inline std::vector<ScoredEdge> top_distortion_edges(const Graph& g, const Sparsifier& p,
                                                    const EmbeddingMatrix& x, std::size_t take) {
    if (x.num_nodes != g.num_nodes())
        throw EmbeddingMismatch("edge_distortion_scores: embedding node count mismatch");
    std::vector<ScoredEdge> scored;
    auto pe = p.graph.edges();
    std::size_t j = 0;
    for (const auto& e : g.edges()) {
        while (j < pe.size() && (pe[j].u < e.u || (pe[j].u == e.u && pe[j].v < e.v))) ++j;
        if (j < pe.size() && pe[j].u == e.u && pe[j].v == e.v) continue;
        scored.push_back({e.u, e.v, e.weight, 0.0});
    }
    parallel_for(scored.size(), [&](std::size_t i) {
        scored[i].score = scored[i].weight * x.row_dist2(scored[i].u, scored[i].v);
    });
    const auto better = [](const ScoredEdge& a, const ScoredEdge& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    };
    take = std::min(take, scored.size());
    std::nth_element(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                     scored.end(), better);
    scored.resize(take);
    std::sort(scored.begin(), scored.end(), better);
    return scored;
}

} // namespace detail

/// Add the highest-scored candidate edges as off-tree edges.
inline Sparsifier add_top_edges(const Sparsifier& p, std::span<const ScoredEdge> scores,
                                std::size_t budget) {
    const std::size_t take = std::min(budget, scores.size());
    if (take == 0) return p;
    std::vector<std::pair<WeightedEdge, std::uint8_t>> extra;
    extra.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
        extra.push_back({{scores[i].u, scores[i].v, scores[i].weight}, 0});
    const auto by_pair = [](const auto& a, const auto& b) {
        return a.first.u != b.first.u ? a.first.u < b.first.u : a.first.v < b.first.v;
    };
    std::sort(extra.begin(), extra.end(), by_pair);

    Sparsifier out;
    std::vector<WeightedEdge> edges;
    edges.reserve(p.graph.num_edges() + take);
    out.is_tree.reserve(p.graph.num_edges() + take);
    std::size_t i = 0, j = 0;
    while (i < p.graph.num_edges() || j < extra.size()) {
        const bool from_extra =
            i == p.graph.num_edges() ||
            (j < extra.size() && by_pair(extra[j], std::pair{p.graph.edge(i), std::uint8_t{0}}));
        if (from_extra) {
            edges.push_back(extra[j].first);
            out.is_tree.push_back(extra[j].second);
            ++j;
        } else {
            edges.push_back(p.graph.edge(i));
            out.is_tree.push_back(p.is_tree[i]);
            ++i;
        }
    }
    out.graph = Graph(p.graph.num_nodes(), std::move(edges));
    return out;
}

struct LevelStats {
    int level = 0;
    NodeId n = 0;
    std::size_t m = 0;                // edges of G_l
    std::size_t sparsifier_edges = 0; // edges of P_l
    std::size_t tree_edges = 0;
    std::size_t candidates = 0;       // off-subgraph edges |E_l - E(P_l)| before additions
    std::size_t edges_added = 0;
    double seconds = 0.0;
};

struct SfGrassResult {
    Sparsifier sparsifier; // P_0
    Hierarchy hierarchy;
    std::vector<LevelStats> levels; // coarsest first
    double coarsen_seconds = 0.0;
    double sparsify_seconds = 0.0;
};

/// The SF-GRASS driver: coarsen to a hierarchy, take the whole coarsest
/// graph as its own sparsifier, then walk back to the finest level, at each
/// step backward-mapping the sparsifier and adding the
/// ceil(budget_fraction * N) candidate edges with the largest embedding
/// distortion. Scoring embeds the current sparsifier by default; the
/// `graph` mode embeds the level graph instead.
inline SfGrassResult sf_grass(const Graph& g, const SparsifyParams& params) {
    params.validate();
    using clock = std::chrono::steady_clock;
    const auto seconds_since = [](clock::time_point t0) {
        return std::chrono::duration<double>(clock::now() - t0).count();
    };

    SfGrassResult result;
    const auto t_reduce = clock::now();
    result.hierarchy = build_hierarchy(g, params.coarsen);
    result.coarsen_seconds = seconds_since(t_reduce);

    const auto t_spar = clock::now();
    const Hierarchy& h = result.hierarchy;
    const int lf = static_cast<int>(h.num_levels()) - 1;

    Sparsifier p = full_graph_sparsifier(h.coarsest());
    {
        LevelStats s;
        s.level = lf;
        s.n = h.coarsest().num_nodes();
        s.m = h.coarsest().num_edges();
        s.sparsifier_edges = p.graph.num_edges();
        s.tree_edges = p.tree_edge_count();
        result.levels.push_back(s);
    }

    for (int l = lf; l >= 1; --l) {
        const auto t_level = clock::now();
        const Graph& fine = h.graphs[static_cast<std::size_t>(l - 1)];
        p = backward_map(p, fine, h.maps[static_cast<std::size_t>(l - 1)]);

        LevelStats s;
        s.level = l - 1;
        s.n = fine.num_nodes();
        s.m = fine.num_edges();
        s.candidates = fine.num_edges() - p.graph.num_edges();
        const auto budget = static_cast<std::size_t>(
            std::ceil(params.budget_fraction * static_cast<double>(fine.num_nodes())));
        if (budget > 0 && s.candidates > 0) {
            // Spend the budget over a few rounds: once a round's additions
            // fix a weak cut, the re-embedded vectors stop stretching
            // across it and the next round targets the next-worst regions.
            const std::size_t before = p.graph.num_edges();
            std::size_t remaining = budget;
            for (int round = 0; round < params.score_batches && remaining > 0; ++round) {
                if (fine.num_edges() == p.graph.num_edges()) break;
                const std::size_t rounds_left =
                    static_cast<std::size_t>(params.score_batches - round);
                const std::size_t take = (remaining + rounds_left - 1) / rounds_left;
                EmbedParams ep = params.embed;
                ep.seed = substream_seed(params.embed.seed,
                                         0x20000ULL + (static_cast<std::uint64_t>(l - 1) << 8) +
                                             static_cast<std::uint64_t>(round));
                const EmbeddingMatrix x = params.score_embedding == ScoreEmbedding::sparsifier
                                              ? embed(p.graph, ep)
                                              : embed(fine, ep);
                const std::vector<ScoredEdge> scores =
                    detail::top_distortion_edges(fine, p, x, take);
                const std::size_t added_before = p.graph.num_edges();
                p = add_top_edges(p, scores, take);
                remaining -= p.graph.num_edges() - added_before;
            }
            s.edges_added = p.graph.num_edges() - before;
        }
        s.sparsifier_edges = p.graph.num_edges();
        s.tree_edges = p.tree_edge_count();
        s.seconds = seconds_since(t_level);
        result.levels.push_back(s);
    }
    result.sparsify_seconds = seconds_since(t_spar);
    result.sparsifier = std::move(p);
    return result;
}

} // namespace sfgrass
