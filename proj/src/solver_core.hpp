#pragma once

// Internal descent machinery shared by the eigensolver and the Dirichlet
// solver: free-dof bookkeeping and the Sobolev preconditioner (Euclidean P1
// stiffness plus lumped mass on free nodes, factored once per grid).

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <vector>

#include "qcrit/common.hpp"
#include "qcrit/energy.hpp"
#include "qcrit/grid.hpp"

namespace qcrit::detail {

struct FreeMap {
    std::vector<int> nodes;   // free node ids in ascending order
    std::vector<int> index;   // node id -> dense index, -1 when constrained

    explicit FreeMap(const Grid& g) : nodes(g.free_nodes()), index(g.n_nodes(), -1) {
        for (std::size_t k = 0; k < nodes.size(); ++k)
            index[static_cast<std::size_t>(nodes[k])] = static_cast<int>(k);
    }
};

class SobolevPrecond {
public:
    /// Stiffness plus lumped mass on the free nodes. An optional per-simplex
    /// weight (lagged diffusivity) scales the stiffness contribution so the
    /// factored operator tracks the local curvature of a degenerate energy.
    explicit SobolevPrecond(const Grid& g, const FreeMap& fm,
                            const std::function<double(const Simplex&)>& stiffness_weight = {})
        : fm_(fm) {
        const int m = static_cast<int>(fm_.nodes.size());
        std::vector<Eigen::Triplet<double>> trip;
        for_each_active_simplex(g, [&](const Simplex& s) {
            double wt = stiffness_weight ? stiffness_weight(s) : 1.0;
            for (int a = 0; a < s.n_vertices; ++a) {
                int ia = fm_.index[static_cast<std::size_t>(s.nodes[a])];
                if (ia < 0) continue;
                for (int b = 0; b < s.n_vertices; ++b) {
                    int ib = fm_.index[static_cast<std::size_t>(s.nodes[b])];
                    if (ib < 0) continue;
                    trip.emplace_back(ia, ib, wt * dot(s.grad_phi[a], s.grad_phi[b]) * s.volume);
                }
            }
        });
        for (int k = 0; k < m; ++k)
            trip.emplace_back(k, k, g.mass(fm_.nodes[static_cast<std::size_t>(k)]));
        Eigen::SparseMatrix<double> P(m, m);
        P.setFromTriplets(trip.begin(), trip.end());
        diag_.assign(fm_.index.size(), 0.0);
        for (const auto& t : trip)
            if (t.row() == t.col())
                diag_[static_cast<std::size_t>(fm_.nodes[static_cast<std::size_t>(t.row())])] +=
                    t.value();
        ldlt_.compute(P);
        if (ldlt_.info() != Eigen::Success)
            throw SolveError("preconditioner factorization failed");
    }

    /// Diagonal entry of P for a node (zero on constrained nodes): the
    /// natural scale for pointwise gradient steps on obstacle-pinned dofs.
    double diag(int node) const { return diag_[static_cast<std::size_t>(node)]; }

    /// Solve P d = r for a nodal residual r; d is zero on constrained nodes.
    std::vector<double> apply(const std::vector<double>& r) const {
        Eigen::VectorXd rhs(fm_.nodes.size());
        for (std::size_t k = 0; k < fm_.nodes.size(); ++k)
            rhs[static_cast<Eigen::Index>(k)] = r[static_cast<std::size_t>(fm_.nodes[k])];
        Eigen::VectorXd sol = ldlt_.solve(rhs);
        std::vector<double> d(r.size(), 0.0);
        for (std::size_t k = 0; k < fm_.nodes.size(); ++k)
            d[static_cast<std::size_t>(fm_.nodes[k])] = sol[static_cast<Eigen::Index>(k)];
        return d;
    }

    /// Dual norm sqrt(r' P^{-1} r) over free nodes.
    double dual_norm(const std::vector<double>& r) const {
        Eigen::VectorXd rhs(fm_.nodes.size());
        for (std::size_t k = 0; k < fm_.nodes.size(); ++k)
            rhs[static_cast<Eigen::Index>(k)] = r[static_cast<std::size_t>(fm_.nodes[k])];
        Eigen::VectorXd sol = ldlt_.solve(rhs);
        double acc = rhs.dot(sol);
        return acc > 0.0 ? std::sqrt(acc) : 0.0;
    }

private:
    FreeMap fm_;
    std::vector<double> diag_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

/// Smoothing widths for the gradient-degeneracy continuation: h halved down
/// to eps_min, then the exact (unsmoothed) stage.  p = 2 needs no smoothing.
inline std::vector<double> eps_schedule(double p, double h, double eps_min) {
    std::vector<double> eps;
    if (p != 2.0)
        for (double e = h; e > eps_min; e *= 0.5) eps.push_back(e);
    eps.push_back(0.0);
    return eps;
}

}  // namespace qcrit::detail
