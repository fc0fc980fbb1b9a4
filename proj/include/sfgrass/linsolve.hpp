#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "sfgrass/errors.hpp"
#include "sfgrass/graph.hpp"
#include "sfgrass/random.hpp"

namespace sfgrass {

/// Sparse Cholesky factorization of a graph Laplacian made nonsingular by
/// grounding the minimum-id node of every component (its row/column is
/// deleted). Uses a fill-reducing AMD ordering; exact for trees.
class SddFactorization {
public:
    explicit SddFactorization(const Graph& g) : n_(g.num_nodes()) {
        if (n_ == 0) throw InvalidInput("factorize_sdd: empty graph");
        comps_ = connected_components(g);
        comp_members_.assign(static_cast<std::size_t>(comps_.num_components), {});
        for (NodeId p = 0; p < n_; ++p)
            comp_members_[static_cast<std::size_t>(comps_.label[static_cast<std::size_t>(p)])]
                .push_back(p);
        grounded_.resize(static_cast<std::size_t>(comps_.num_components));
        for (NodeId c = 0; c < comps_.num_components; ++c)
            grounded_[static_cast<std::size_t>(c)] = comp_members_[static_cast<std::size_t>(c)].front();

        full_to_reduced_.assign(static_cast<std::size_t>(n_), -1);
        for (NodeId p = 0; p < n_; ++p) {
            if (p == grounded_[static_cast<std::size_t>(comps_.label[static_cast<std::size_t>(p)])])
                continue;
            full_to_reduced_[static_cast<std::size_t>(p)] = static_cast<NodeId>(reduced_to_full_.size());
            reduced_to_full_.push_back(p);
        }

        const auto dim = static_cast<Eigen::Index>(reduced_to_full_.size());
        if (dim == 0) return; // edgeless graph: every node grounded
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(4 * g.num_edges());
        for (const auto& e : g.edges()) {
            const NodeId ru = full_to_reduced_[static_cast<std::size_t>(e.u)];
            const NodeId rv = full_to_reduced_[static_cast<std::size_t>(e.v)];
            if (ru >= 0) trip.emplace_back(ru, ru, e.weight);
            if (rv >= 0) trip.emplace_back(rv, rv, e.weight);
            if (ru >= 0 && rv >= 0) {
                trip.emplace_back(ru, rv, -e.weight);
                trip.emplace_back(rv, ru, -e.weight);
            }
        }
        Eigen::SparseMatrix<double> reduced(dim, dim);
        reduced.setFromTriplets(trip.begin(), trip.end());
        llt_.compute(reduced);
        if (llt_.info() != Eigen::Success)
            throw NumericalBreakdown("factorize_sdd: Cholesky failed (nonpositive pivot)");
    }

    NodeId num_nodes() const { return n_; }
    const std::vector<NodeId>& grounded_nodes() const { return grounded_; }
    const ComponentLabels& components() const { return comps_; }

    std::vector<NodeId> permutation() const {
        const auto& idx = llt_.permutationP().indices();
        return {idx.data(), idx.data() + idx.size()};
    }

    /// Nonzeros of the lower-triangular factor, diagonal included.
    std::size_t factor_nonzeros() const {
        if (reduced_to_full_.empty()) return 0;
        return static_cast<std::size_t>(
            Eigen::SparseMatrix<double>(llt_.matrixL()).nonZeros());
    }

    /// Solve L x = b on the grounded system; b is first projected
    /// orthogonal to the per-component constant vectors, and the grounded
    /// coordinate of every component comes back as 0. Linear in b.
    std::vector<double> solve(std::span<const double> b) const {
        if (static_cast<NodeId>(b.size()) != n_)
            throw DimensionMismatch("precond_solve: rhs length mismatch");
        std::vector<double> projected(b.begin(), b.end());
        for (const auto& members : comp_members_) {
            double mean = 0.0;
            for (NodeId p : members) mean += projected[static_cast<std::size_t>(p)];
            mean /= static_cast<double>(members.size());
            for (NodeId p : members) projected[static_cast<std::size_t>(p)] -= mean;
        }
        std::vector<double> x(static_cast<std::size_t>(n_), 0.0);
        if (reduced_to_full_.empty()) return x;
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(reduced_to_full_.size()));
        for (std::size_t i = 0; i < reduced_to_full_.size(); ++i)
            rhs[static_cast<Eigen::Index>(i)] =
                projected[static_cast<std::size_t>(reduced_to_full_[i])];
        const Eigen::VectorXd sol = llt_.solve(rhs);
        for (std::size_t i = 0; i < reduced_to_full_.size(); ++i)
            x[static_cast<std::size_t>(reduced_to_full_[i])] = sol[static_cast<Eigen::Index>(i)];
        return x;
    }

private:
    NodeId n_ = 0;
    ComponentLabels comps_;
    std::vector<std::vector<NodeId>> comp_members_;
    std::vector<NodeId> grounded_;
    std::vector<NodeId> full_to_reduced_;
    std::vector<NodeId> reduced_to_full_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
};

inline SddFactorization factorize_sdd(const Graph& g) { return SddFactorization(g); }

inline std::vector<double> precond_solve(const SddFactorization& f, std::span<const double> b) {
    return f.solve(b);
}

using LinearOperator = std::function<std::vector<double>(std::span<const double>)>;

inline LinearOperator identity_operator() {
    return [](std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); };
}

struct PcgResult {
    std::vector<double> solution;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    std::vector<double> residual_history;        // ||r_k|| / ||b|| per iteration
    std::vector<double> precond_energy_history;  // sqrt(r_k^T M^-1 r_k) per iteration
};

/// Preconditioned conjugate gradient for SPSD systems with b in the range
/// of A. Stops when ||A x - b|| / ||b|| < tol; the returned
/// relative_residual is recomputed from the final iterate.
inline PcgResult pcg(const LinearOperator& apply_a, const LinearOperator& precond,
                     std::span<const double> b, double tol = 1e-3, int maxiter = 1000) {
    const std::size_t n = b.size();
    const auto dot = [](const std::vector<double>& x, const std::vector<double>& y) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
        return s;
    };
    const auto norm = [&](const std::vector<double>& x) { return std::sqrt(dot(x, x)); };

    PcgResult out;
    out.solution.assign(n, 0.0);
    std::vector<double> r(b.begin(), b.end());
    const double bnorm = norm(r);
    if (bnorm == 0.0) {
        out.converged = true;
        return out;
    }

    std::vector<double> z = precond(r);
    std::vector<double> p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= maxiter; ++it) {
        const std::vector<double> q = apply_a(p);
        const double pq = dot(p, q);
        if (!(pq > 0.0))
            throw NumericalBreakdown("pcg: search direction with nonpositive curvature");
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) out.solution[i] += alpha * p[i];
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * q[i];
        out.iterations = it;
        out.residual_history.push_back(norm(r) / bnorm);
        z = precond(r);
        const double rz_next = dot(r, z);
        out.precond_energy_history.push_back(std::sqrt(std::max(0.0, rz_next)));
        if (out.residual_history.back() < tol) {
            out.converged = true;
            break;
        }
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }

    const std::vector<double> ax = apply_a(out.solution);
    std::vector<double> res(n);
    for (std::size_t i = 0; i < n; ++i) res[i] = ax[i] - b[i];
    out.relative_residual = norm(res) / bnorm;
    return out;
}

/// Seeded uniform(-1,1) right-hand side projected orthogonal to the
/// per-component constant vectors, so it lies in the Laplacian's range.
inline std::vector<double> random_projected_rhs(const Graph& g, std::uint64_t seed) {
    SplitMix64 rng(substream_seed(seed, 0x7b5ULL));
    std::vector<double> b(static_cast<std::size_t>(g.num_nodes()));
    for (double& v : b) v = rng.next_symmetric();
    const ComponentLabels comps = connected_components(g);
    std::vector<double> sum(static_cast<std::size_t>(comps.num_components), 0.0);
    std::vector<double> count(static_cast<std::size_t>(comps.num_components), 0.0);
    for (NodeId p = 0; p < g.num_nodes(); ++p) {
        sum[static_cast<std::size_t>(comps.label[static_cast<std::size_t>(p)])] +=
            b[static_cast<std::size_t>(p)];
        count[static_cast<std::size_t>(comps.label[static_cast<std::size_t>(p)])] += 1.0;
    }
    for (NodeId p = 0; p < g.num_nodes(); ++p) {
        const auto c = static_cast<std::size_t>(comps.label[static_cast<std::size_t>(p)]);
        b[static_cast<std::size_t>(p)] -= sum[c] / count[c];
    }
    return b;
}

} // namespace sfgrass
