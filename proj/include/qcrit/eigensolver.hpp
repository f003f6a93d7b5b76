#pragma once

#include <cstdint>
#include <vector>

#include "qcrit/grid.hpp"
#include "qcrit/operator_family.hpp"

namespace qcrit {

struct SolverConfig {
    int max_iters = 20000;
    double tol = 1e-8;        // residual tolerance, applied as tol * (1 + |lambda|)
    int restarts = 3;
    double eps_min = 1e-8;    // floor of the smoothing continuation
    std::uint64_t seed = 1;
    int stall_iters = 25;     // window for the quotient-stall criterion
    double stall_rel = 1e-12; // relative decrease under which the stage stalls
    int max_outer = 200;      // outer cap for the monotone iteration
    bool coercivity_check = true;  // Dirichlet zero-boundary eigensolve precheck
};

struct EigenResult {
    double lambda1 = 0.0;
    GridFunction eigenfunction;     // ||u||_p = 1, nonnegative
    double residual = 0.0;          // first-order optimality in the dual norm
    int iterations = 0;
    std::vector<double> trace;      // Rayleigh quotient per accepted step
    double positivity_margin = 0.0; // min over free nodes
    double simplicity_gap = 0.0;    // max pairwise sup-distance across restarts
    bool converged = false;
};

/// Minimum of the Rayleigh quotient Q[u] / ||u||_p^p over the free nodes by
/// preconditioned projected gradient descent on the unit ||.||_p sphere with
/// Armijo backtracking and smoothing continuation; best of cfg.restarts
/// seeded positive starts, ties broken by lowest seed.  The potential is
/// centered at a reference node during iteration and the shift added back at
/// the end, so a constant added to V moves lambda1 by exactly that constant.
EigenResult principal_eigen(const AOperator& op, const GridFunction& V,
                            const std::shared_ptr<const Grid>& grid, const SolverConfig& cfg);

/// Same minimization with the sphere measured by sum_i m_i w_i |u_i|^p for
/// nonnegative node weights w (patch-restricted denominators).  Null weights
/// reduce to the plain solve.  No potential centering: a constant shift of V
/// is not equivalent to an eigenvalue shift under a weighted denominator.
EigenResult principal_eigen_weighted(const AOperator& op, const GridFunction& V,
                                     const std::shared_ptr<const Grid>& grid,
                                     const SolverConfig& cfg,
                                     const std::vector<double>* denom_weights);

/// Dual norm of the first variation of Q_{V - lambda} at u over free nodes,
/// divided by ||u||_p^{p-1}; zero exactly at discrete eigenpairs.
double eigen_residual(const AOperator& op, const GridFunction& V, double lambda,
                      const GridFunction& u);

struct LowerBoundReport {
    double bound = 0.0;   // -C_emp * alpha^{-n/(pq-n)} * ||V||^{pq/(pq-n)}
    double c_emp = 0.0;   // worst constant over the built-in corpus at delta = alpha
    double morrey = 0.0;
    double delta = 0.0;
};

/// Empirical eigenvalue lower bound from the potential-absorption inequality
/// with delta equal to the operator's ellipticity floor.  Soft contract:
/// computed lambda1 should dominate `bound` whenever the corpus constant is
/// valid on the instance.
LowerBoundReport lambda1_lower_bound(const AOperator& op, const GridFunction& V, double p,
                                     double q);

struct SimplicityReport {
    double gap = 0.0;                // max pairwise sup-distance of restart minimizers
    double shift_consistency = 0.0;  // |lambda1(V - (lambda1 + d)) + d|
    EigenResult base;
};

/// Cross-restart agreement plus the shifted-eigenvalue consistency check:
/// solving with potential V - (lambda1 + d) must return -d.
SimplicityReport check_simplicity(const AOperator& op, const GridFunction& V,
                                  const std::shared_ptr<const Grid>& grid,
                                  const SolverConfig& cfg);

}  // namespace qcrit
