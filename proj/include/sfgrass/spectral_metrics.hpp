#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfgrass/coarsen.hpp"
#include "sfgrass/errors.hpp"
#include "sfgrass/graph.hpp"
#include "sfgrass/linsolve.hpp"
#include "sfgrass/random.hpp"
#include "sfgrass/sparsify.hpp"

namespace sfgrass {

inline constexpr NodeId kDefaultDenseCap = 3000;

inline Eigen::MatrixXd dense_laplacian(const Graph& g) {
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : g.edges()) {
        l(e.u, e.u) += e.weight;
        l(e.v, e.v) += e.weight;
        l(e.u, e.v) -= e.weight;
        l(e.v, e.u) -= e.weight;
    }
    return l;
}

struct EigenPairs {
    std::vector<double> values;   // ascending
    Eigen::MatrixXd vectors;      // orthonormal columns, aligned with values
};

/// Full symmetric eigendecomposition of the dense Laplacian. Oracle-grade:
/// capped at kDefaultDenseCap nodes by default.
inline EigenPairs dense_eigen(const Graph& g, NodeId dense_cap = kDefaultDenseCap) {
    if (g.num_nodes() > dense_cap)
        throw TooLargeForDense("dense_eigen: " + std::to_string(g.num_nodes()) + " nodes > cap " +
                               std::to_string(dense_cap));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense_laplacian(g));
    if (solver.info() != Eigen::Success)
        throw NumericalBreakdown("dense_eigen: eigendecomposition failed");
    EigenPairs out;
    out.values.assign(solver.eigenvalues().data(),
                      solver.eigenvalues().data() + solver.eigenvalues().size());
    out.vectors = solver.eigenvectors();
    return out;
}

enum class PencilMethod { dense, iterative };

struct PencilSpectrum {
    double lambda_min = 1.0;
    double lambda_max = 1.0;
    double kappa = 1.0;
    PencilMethod method = PencilMethod::dense;
    bool converged = true; // false flags an iteration stall; values are best estimates
    int iterations = 0;
};

struct PencilOptions {
    NodeId dense_cap = kDefaultDenseCap;
    double tol = 1e-4;     // relative tolerance on the extreme Ritz values
    int maxiter = 500;
    std::uint64_t seed = 0x5eedULL;
};

namespace detail {

/// Orthonormal basis of the complement of the per-component constant
/// vectors, via a full QR of the component indicator matrix.
inline Eigen::MatrixXd component_complement_basis(const Graph& g, const ComponentLabels& comps) {
    const auto n = static_cast<Eigen::Index>(g.num_nodes());
    const auto c = static_cast<Eigen::Index>(comps.num_components);
    Eigen::MatrixXd indicators = Eigen::MatrixXd::Zero(n, c);
    for (NodeId p = 0; p < g.num_nodes(); ++p)
        indicators(p, comps.label[static_cast<std::size_t>(p)]) = 1.0;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(indicators);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return q.rightCols(n - c);
}

inline void project_component_means(std::span<double> x,
                                    const std::vector<std::vector<NodeId>>& members) {
    for (const auto& nodes : members) {
        double mean = 0.0;
        for (NodeId p : nodes) mean += x[static_cast<std::size_t>(p)];
        mean /= static_cast<double>(nodes.size());
        for (NodeId p : nodes) x[static_cast<std::size_t>(p)] -= mean;
    }
}

struct RitzExtremes {
    double min = 0.0;
    double max = 0.0;
};

inline RitzExtremes tridiagonal_extremes(const std::vector<double>& alpha,
                                         const std::vector<double>& beta) {
    const auto m = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        t(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < m) {
            t(i, i + 1) = beta[static_cast<std::size_t>(i)];
            t(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    return {es.eigenvalues()(0), es.eigenvalues()(m - 1)};
}

} // namespace detail

/// Extreme generalized eigenvalues of L_G v = lambda L_P v restricted to
/// the complement of the shared nullspace. The dense method reduces the
/// pencil with an explicit projection; the iterative method runs Lanczos on
/// the preconditioned operator precond_solve(L_P) . laplacian_apply(L_G) in
/// the L_P inner product, which yields both ends of the spectrum.
inline PencilSpectrum relative_condition_number(const Graph& g, const Sparsifier& p,
                                                PencilMethod method,
                                                const PencilOptions& opts = {}) {
    if (p.graph.num_nodes() != g.num_nodes())
        throw DimensionMismatch("relative_condition_number: node count mismatch");
    if (!spans_components(p, g))
        throw NotSpanning("relative_condition_number: sparsifier does not span the graph");

    const ComponentLabels comps = connected_components(g);
    const Eigen::Index reduced_dim =
        static_cast<Eigen::Index>(g.num_nodes()) - comps.num_components;
    if (reduced_dim <= 0) return {1.0, 1.0, 1.0, method, true, 0};

    if (method == PencilMethod::dense) {
        if (g.num_nodes() > opts.dense_cap)
            throw TooLargeForDense("relative_condition_number: " +
                                   std::to_string(g.num_nodes()) + " nodes > dense cap " +
                                   std::to_string(opts.dense_cap));
        const Eigen::MatrixXd q = detail::component_complement_basis(g, comps);
        const Eigen::MatrixXd a = q.transpose() * dense_laplacian(g) * q;
        const Eigen::MatrixXd b = q.transpose() * dense_laplacian(p.graph) * q;
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(a, b);
        if (ges.info() != Eigen::Success)
            throw NumericalBreakdown("relative_condition_number: pencil solve failed");
        const double lo = ges.eigenvalues()(0);
        const double hi = ges.eigenvalues()(reduced_dim - 1);
        return {lo, hi, hi / lo, PencilMethod::dense, true, 0};
    }

    // Lanczos with full reorthogonalization in the L_P inner product.
    const SddFactorization factor(p.graph);
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(comps.num_components));
    for (NodeId v = 0; v < g.num_nodes(); ++v)
        members[static_cast<std::size_t>(comps.label[static_cast<std::size_t>(v)])].push_back(v);

    const std::size_t n = static_cast<std::size_t>(g.num_nodes());
    const int basis_cap = static_cast<int>(std::min<Eigen::Index>(
        {static_cast<Eigen::Index>(opts.maxiter), reduced_dim, 160}));

    std::vector<std::vector<double>> basis;      // v_j
    std::vector<std::vector<double>> basis_lp;   // L_P v_j, reused for reorthogonalization
    std::vector<double> alpha, beta;

    std::vector<double> v(n);
    {
        SplitMix64 rng(substream_seed(opts.seed, 0x11aULL));
        for (double& z : v) z = rng.next_symmetric();
        detail::project_component_means(v, members);
        const double pn = std::sqrt(quadratic_form(p.graph, v));
        if (!(pn > 0.0))
            throw NumericalBreakdown("relative_condition_number: degenerate start vector");
        for (double& z : v) z /= pn;
    }

    PencilSpectrum result;
    result.method = PencilMethod::iterative;
    result.converged = false;
    double prev_min = std::numeric_limits<double>::quiet_NaN();
    double prev_max = std::numeric_limits<double>::quiet_NaN();

    for (int j = 0; j < basis_cap; ++j) {
        basis.push_back(v);
        basis_lp.push_back(laplacian_apply(p.graph, v));

        std::vector<double> w = factor.solve(laplacian_apply(g, v));
        detail::project_component_means(w, members);
        // alpha_j = <T v, v>_P = v^T L_G v
        const double a_j = quadratic_form(g, v);
        alpha.push_back(a_j);
        for (std::size_t i = 0; i < n; ++i) w[i] -= a_j * basis.back()[i];
        if (j > 0) {
            const double b_prev = beta.back();
            for (std::size_t i = 0; i < n; ++i) w[i] -= b_prev * basis[basis.size() - 2][i];
        }
        // Full reorthogonalization: <w, v_i>_P = w . (L_P v_i)
        for (std::size_t bi = 0; bi < basis.size(); ++bi) {
            double coef = 0.0;
            for (std::size_t i = 0; i < n; ++i) coef += w[i] * basis_lp[bi][i];
            if (coef != 0.0)
                for (std::size_t i = 0; i < n; ++i) w[i] -= coef * basis[bi][i];
        }

        const detail::RitzExtremes ritz = detail::tridiagonal_extremes(alpha, beta);
        result.lambda_min = ritz.min;
        result.lambda_max = ritz.max;
        result.kappa = ritz.max / ritz.min;
        result.iterations = j + 1;
        const bool settled = std::isfinite(prev_min) &&
                             std::abs(ritz.min - prev_min) <= opts.tol * std::abs(ritz.min) &&
                             std::abs(ritz.max - prev_max) <= opts.tol * std::abs(ritz.max);
        if (settled && j >= 2) {
            result.converged = true;
            break;
        }
        prev_min = ritz.min;
        prev_max = ritz.max;

        const double b_j = std::sqrt(std::max(0.0, quadratic_form(p.graph, w)));
        if (b_j <= 1e-12 * std::abs(a_j)) {
            // Invariant subspace found: the Ritz values are exact on it.
            result.converged = true;
            break;
        }
        beta.push_back(b_j);
        for (std::size_t i = 0; i < n; ++i) w[i] /= b_j;
        v = std::move(w);
    }
    return result;
}

namespace detail {

inline void check_same_component(const Graph& g, NodeId u, NodeId v) {
    if (u < 0 || u >= g.num_nodes() || v < 0 || v >= g.num_nodes())
        throw NodeIdOutOfRange("effective_resistance: node id out of range");
    const ComponentLabels comps = connected_components(g);
    if (comps.label[static_cast<std::size_t>(u)] != comps.label[static_cast<std::size_t>(v)])
        throw DifferentComponents("effective_resistance: nodes " + std::to_string(u) + " and " +
                                  std::to_string(v) + " are in different components");
}

} // namespace detail

/// Effective resistance via the eigen-expansion sum over nonzero
/// eigenpairs of ((v_i(u) - v_i(v)) / sqrt(lambda_i))^2.
inline double effective_resistance_eigen_expansion(const Graph& g, NodeId u, NodeId v,
                                                   NodeId dense_cap = kDefaultDenseCap) {
    detail::check_same_component(g, u, v);
    const EigenPairs eig = dense_eigen(g, dense_cap);
    const NodeId skip = connected_components(g).num_components;
    double r = 0.0;
    for (std::size_t i = static_cast<std::size_t>(skip); i < eig.values.size(); ++i) {
        const double diff = eig.vectors(u, static_cast<Eigen::Index>(i)) -
                            eig.vectors(v, static_cast<Eigen::Index>(i));
        r += diff * diff / eig.values[i];
    }
    return r;
}

/// Effective resistance via the pseudoinverse quadratic form
/// e_uv^T L^+ e_uv; the independent second route.
inline double effective_resistance_pseudoinverse(const Graph& g, NodeId u, NodeId v,
                                                 NodeId dense_cap = kDefaultDenseCap) {
    detail::check_same_component(g, u, v);
    if (g.num_nodes() > dense_cap)
        throw TooLargeForDense("effective_resistance: graph exceeds dense cap");
    const Eigen::MatrixXd pinv =
        dense_laplacian(g).completeOrthogonalDecomposition().pseudoInverse();
    return pinv(u, u) + pinv(v, v) - 2.0 * pinv(u, v);
}

/// Both routes, cross-checked to 1e-9 absolute.
inline double effective_resistance(const Graph& g, NodeId u, NodeId v,
                                   NodeId dense_cap = kDefaultDenseCap) {
    const double a = effective_resistance_eigen_expansion(g, u, v, dense_cap);
    const double b = effective_resistance_pseudoinverse(g, u, v, dense_cap);
    if (std::abs(a - b) > 1e-9)
        throw NumericalBreakdown("effective_resistance: eigen-expansion and pseudoinverse routes "
                                 "disagree by " +
                                 std::to_string(std::abs(a - b)));
    return a;
}

/// First-order eigenvalue perturbation for adding edge (u, v, w):
/// delta lambda_i = w (v_i(u) - v_i(v))^2. Index 0 (the nullspace) is
/// excluded.
inline double eigenvalue_perturbation(const EigenPairs& eig, int i, NodeId u, NodeId v,
                                      double w) {
    if (i < 1 || static_cast<std::size_t>(i) >= eig.values.size())
        throw IndexOutOfRange("eigenvalue_perturbation: index " + std::to_string(i) +
                              " out of range");
    if (u < 0 || v < 0 || u >= eig.vectors.rows() || v >= eig.vectors.rows())
        throw IndexOutOfRange("eigenvalue_perturbation: node id out of range");
    const double diff = eig.vectors(u, i) - eig.vectors(v, i);
    return w * diff * diff;
}

/// Overall K-eigenvalue perturbation Delta_K = w ||U^T e_uv||^2 over the K
/// eigenvectors after the first; equals the sum of the per-index
/// first-order terms exactly.
inline double delta_k_score(const EigenPairs& eig, int k, NodeId u, NodeId v, double w) {
    if (k < 1 || static_cast<std::size_t>(k) >= eig.values.size())
        throw IndexOutOfRange("delta_k_score: K out of range");
    if (u < 0 || v < 0 || u >= eig.vectors.rows() || v >= eig.vectors.rows())
        throw IndexOutOfRange("delta_k_score: node id out of range");
    double s = 0.0;
    for (int i = 1; i <= k; ++i) {
        const double diff = eig.vectors(u, i) - eig.vectors(v, i);
        s += diff * diff;
    }
    return w * s;
}

struct SigmaResult {
    double sigma = 1.0;
    bool zero_energy = false; // some restricted vector fell into the coarse nullspace
};

/// Restricted spectral similarity: restrict the first k nontrivial fine
/// eigenvectors through H and compare energies; sigma is the worst
/// two-sided energy ratio.
inline SigmaResult restricted_similarity_sigma(const Graph& g_fine, const Graph& g_coarse,
                                               const AggregationMap& m, int k,
                                               NodeId dense_cap = kDefaultDenseCap) {
    if (k < 1) throw InvalidInput("restricted_similarity_sigma: k must be >= 1");
    if (k > g_coarse.num_nodes())
        throw InvalidInput("restricted_similarity_sigma: k exceeds coarse node count");
    if (g_coarse.num_nodes() > dense_cap || g_fine.num_nodes() > dense_cap)
        throw TooLargeForDense("restricted_similarity_sigma: graph exceeds dense cap");
    const EigenPairs eig = dense_eigen(g_fine, dense_cap);
    const NodeId skip = connected_components(g_fine).num_components;
    if (static_cast<std::size_t>(skip + k) > eig.values.size())
        throw InvalidInput("restricted_similarity_sigma: not enough nontrivial eigenvectors");

    SigmaResult out;
    for (int i = 0; i < k; ++i) {
        const Eigen::Index col = skip + i;
        std::vector<double> x_fine(static_cast<std::size_t>(g_fine.num_nodes()));
        for (NodeId p = 0; p < g_fine.num_nodes(); ++p) x_fine[static_cast<std::size_t>(p)] = eig.vectors(p, col);
        const std::vector<double> x_coarse = apply_restriction(m, x_fine);
        const double num = quadratic_form(g_coarse, x_coarse);
        const double den = quadratic_form(g_fine, x_fine);
        if (num <= 1e-30 * std::max(1.0, den)) {
            out.zero_energy = true;
            out.sigma = std::numeric_limits<double>::infinity();
            continue;
        }
        const double r = std::sqrt(num / den);
        out.sigma = std::max(out.sigma, std::max(r, 1.0 / r));
    }
    return out;
}

/// Principal angles between the column spaces of two bases: both are
/// orthonormalized, then the angles are arccos of the singular values of
/// U^T V, ascending.
inline std::vector<double> principal_angles(const Eigen::MatrixXd& u_basis,
                                            const Eigen::MatrixXd& v_basis) {
    if (u_basis.rows() != v_basis.rows())
        throw DimensionMismatch("principal_angles: row count mismatch");
    const auto orthonormalize = [](const Eigen::MatrixXd& mat) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(mat);
        return Eigen::MatrixXd(qr.householderQ() *
                               Eigen::MatrixXd::Identity(mat.rows(), mat.cols()));
    };
    const Eigen::MatrixXd u = orthonormalize(u_basis);
    const Eigen::MatrixXd v = orthonormalize(v_basis);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(u.transpose() * v);
    std::vector<double> angles;
    angles.reserve(static_cast<std::size_t>(svd.singularValues().size()));
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        angles.push_back(std::acos(std::clamp(svd.singularValues()(i), 0.0, 1.0)));
    std::sort(angles.begin(), angles.end());
    return angles;
}

/// Canonical angles between the first k nontrivial fine eigenvectors and
/// the lifted (H^T, orthonormalized) first k nontrivial coarse
/// eigenvectors. All angles lie in [0, pi/2], ascending.
inline std::vector<double> canonical_angles(const Graph& g_fine, const Graph& g_coarse,
                                            const AggregationMap& m, int k,
                                            NodeId dense_cap = kDefaultDenseCap) {
    if (k < 1) throw InvalidInput("canonical_angles: k must be >= 1");
    if (k > g_coarse.num_nodes())
        throw InvalidInput("canonical_angles: k exceeds coarse node count");
    const EigenPairs fine = dense_eigen(g_fine, dense_cap);
    const EigenPairs coarse = dense_eigen(g_coarse, dense_cap);
    const NodeId skip_fine = connected_components(g_fine).num_components;
    const NodeId skip_coarse = connected_components(g_coarse).num_components;
    if (static_cast<std::size_t>(skip_fine + k) > fine.values.size() ||
        static_cast<std::size_t>(skip_coarse + k) > coarse.values.size())
        throw InvalidInput("canonical_angles: not enough nontrivial eigenvectors");

    const Eigen::MatrixXd u_fine = fine.vectors.middleCols(skip_fine, k);
    Eigen::MatrixXd lifted(g_fine.num_nodes(), k);
    for (NodeId p = 0; p < g_fine.num_nodes(); ++p) {
        const NodeId c = m.fine_to_coarse[static_cast<std::size_t>(p)];
        const double scale = 1.0 / static_cast<double>(m.cluster_sizes[static_cast<std::size_t>(c)]);
        for (int i = 0; i < k; ++i)
            lifted(p, i) = scale * coarse.vectors(c, skip_coarse + i);
    }
    return principal_angles(u_fine, lifted);
}

} // namespace sfgrass
