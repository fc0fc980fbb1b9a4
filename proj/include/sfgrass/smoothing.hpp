#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sfgrass/detail/parallel.hpp"
#include "sfgrass/errors.hpp"
#include "sfgrass/graph.hpp"
#include "sfgrass/random.hpp"

namespace sfgrass {

struct EmbedParams {
    int k = 10;
    int sweeps = 8;
    std::uint64_t seed = 0;

    void validate() const {
        if (k < 1) throw InvalidInput("EmbedParams: k must be >= 1");
        if (sweeps < 1) throw InvalidInput("EmbedParams: sweeps must be >= 1");
    }
};

/// K low-pass-filtered test vectors, stored as unit-norm columns that are
/// orthogonal to the all-one vector (per component after smoothing).
struct EmbeddingMatrix {
    NodeId num_nodes = 0;
    int k = 0;
    std::vector<std::vector<double>> columns;

    /// Row inner product sum_c x_c(u) * x_c(v).
    double row_dot(NodeId u, NodeId v) const {
        double s = 0.0;
        for (const auto& col : columns)
            s += col[static_cast<std::size_t>(u)] * col[static_cast<std::size_t>(v)];
        return s;
    }

    /// Squared embedding distance sum_c (x_c(u) - x_c(v))^2.
    double row_dist2(NodeId u, NodeId v) const {
        double s = 0.0;
        for (const auto& col : columns) {
            const double d = col[static_cast<std::size_t>(u)] - col[static_cast<std::size_t>(v)];
            s += d * d;
        }
        return s;
    }
};

namespace detail {

inline double column_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline void deflate_constant(std::span<double> x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (double& v : x) v -= mean;
}

/// One in-order pass of x(p) <- (sum_q w(p,q) x(q)) / D(p). Nodes with zero
/// degree are skipped; the caller decides whether that is an error.
inline void gs_pass(const Graph& g, std::span<double> x, bool forward) {
    const NodeId n = g.num_nodes();
    for (NodeId step = 0; step < n; ++step) {
        const NodeId p = forward ? step : n - 1 - step;
        const double d = g.degree(p);
        if (d == 0.0) continue;
        const auto nb = g.neighbors(p);
        const auto wt = g.neighbor_weights(p);
        double acc = 0.0;
        for (std::size_t i = 0; i < nb.size(); ++i)
            acc += wt[i] * x[static_cast<std::size_t>(nb[i])];
        x[static_cast<std::size_t>(p)] = acc / d;
    }
}

} // namespace detail

enum class SweepOrder { forward, backward };

/// In-place Gauss-Seidel relaxation sweep for L x = 0. Each coordinate
/// update minimizes the quadratic form over that coordinate, so the energy
/// x^T L x never increases.
inline void gauss_seidel_sweep(const Graph& g, std::span<double> x, SweepOrder order) {
    if (static_cast<NodeId>(x.size()) != g.num_nodes())
        throw DimensionMismatch("gauss_seidel_sweep: vector length mismatch");
    for (NodeId p = 0; p < g.num_nodes(); ++p)
        if (g.degree(p) == 0.0)
            throw IsolatedNode("gauss_seidel_sweep: node " + std::to_string(p) +
                               " has zero degree");
    detail::gs_pass(g, x, order == SweepOrder::forward);
}

/// K random columns, each drawn i.i.d. uniform(-1,1) from its own
/// substream, deflated against the all-one vector and normalized.
inline EmbeddingMatrix random_test_vectors(NodeId n, int k, std::uint64_t seed) {
    if (k < 1) throw InvalidInput("random_test_vectors: k must be >= 1");
    if (n < 1) throw InvalidInput("random_test_vectors: empty graph");
    EmbeddingMatrix out;
    out.num_nodes = n;
    out.k = k;
    out.columns.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(n)));
    for (int c = 0; c < k; ++c) {
        auto& col = out.columns[static_cast<std::size_t>(c)];
        bool ok = false;
        for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
            SplitMix64 rng(substream_seed(seed, (static_cast<std::uint64_t>(c) << 8) |
                                                    static_cast<std::uint64_t>(attempt)));
            for (double& v : col) v = rng.next_symmetric();
            detail::deflate_constant(col);
            const double norm = detail::column_norm(col);
            if (norm > 1e-12 * std::sqrt(static_cast<double>(n))) {
                for (double& v : col) v /= norm;
                ok = true;
            }
        }
        if (!ok)
            throw DegenerateColumn("random_test_vectors: column " + std::to_string(c) +
                                   " vanished after deflation (n=" + std::to_string(n) + ")");
    }
    return out;
}

namespace detail {

/// Gauss-Seidel pass over a contiguous column block of a row-major n x k
/// buffer. Each column sees exactly the per-column update order of gs_pass,
/// so results do not depend on how columns are grouped into blocks.
inline void gs_pass_block(const Graph& g, double* buf, int k, int c0, int c1, bool forward) {
    const NodeId n = g.num_nodes();
    double acc[64];
    const int width = c1 - c0;
    for (NodeId step = 0; step < n; ++step) {
        const NodeId p = forward ? step : n - 1 - step;
        const double d = g.degree(p);
        if (d == 0.0) continue;
        for (int c = 0; c < width; ++c) acc[c] = 0.0;
        const auto nb = g.neighbors(p);
        const auto wt = g.neighbor_weights(p);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            const double w = wt[i];
            const double* xq = buf + static_cast<std::size_t>(nb[i]) * k + c0;
            for (int c = 0; c < width; ++c) acc[c] += w * xq[c];
        }
        double* xp = buf + static_cast<std::size_t>(p) * k + c0;
        for (int c = 0; c < width; ++c) xp[c] = acc[c] / d;
    }
}

} // namespace detail

/// Local spectral embedding: smooth K random signals with alternating
/// forward/backward Gauss-Seidel sweeps on L x = 0, then deflate per
/// component and normalize. Deterministic for a fixed seed regardless of
/// thread count (columns are independent).
inline EmbeddingMatrix embed(const Graph& g, const EmbedParams& params) {
    params.validate();
    EmbeddingMatrix x = random_test_vectors(g.num_nodes(), params.k, params.seed);
    const ComponentLabels comps = connected_components(g);
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(comps.num_components));
    for (NodeId p = 0; p < g.num_nodes(); ++p)
        members[static_cast<std::size_t>(comps.label[static_cast<std::size_t>(p)])].push_back(p);

    const auto n = static_cast<std::size_t>(g.num_nodes());
    const int k = params.k;
    std::vector<double> buf(n * static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c)
        for (std::size_t p = 0; p < n; ++p)
            buf[p * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)] =
                x.columns[static_cast<std::size_t>(c)][p];

    // Column blocks bounded by the gs_pass_block accumulator size; blocking
    // only groups memory traffic, the per-column arithmetic is fixed.
    std::vector<std::pair<int, int>> blocks;
    const int block_width = std::clamp(k / std::max(1, max_threads()), 1, 64);
    for (int c0 = 0; c0 < k; c0 += block_width)
        blocks.emplace_back(c0, std::min(k, c0 + block_width));
    detail::parallel_for(blocks.size(), [&](std::size_t b) {
        for (int s = 0; s < params.sweeps; ++s)
            detail::gs_pass_block(g, buf.data(), k, blocks[b].first, blocks[b].second,
                                  /*forward=*/s % 2 == 0);
    });

    for (int c = 0; c < k; ++c)
        for (std::size_t p = 0; p < n; ++p)
            x.columns[static_cast<std::size_t>(c)][p] =
                buf[p * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)];

    for (int c = 0; c < k; ++c) {
        auto& col = x.columns[static_cast<std::size_t>(c)];
        // Deflate against each component's indicator vector; single-node
        // components land exactly at zero.
        for (const auto& nodes : members) {
            double mean = 0.0;
            for (NodeId p : nodes) mean += col[static_cast<std::size_t>(p)];
            mean /= static_cast<double>(nodes.size());
            for (NodeId p : nodes) col[static_cast<std::size_t>(p)] -= mean;
        }
        const double norm = detail::column_norm(col);
        if (!(norm > 1e-14))
            throw DegenerateColumn("embed: smoothed column " + std::to_string(c) +
                                   " is numerically zero after deflation");
        for (double& v : col) v /= norm;
    }
    return x;
}

} // namespace sfgrass
