#pragma once

#include <vector>

#include "qcrit/eigensolver.hpp"
#include "qcrit/grid.hpp"
#include "qcrit/operator_family.hpp"

namespace qcrit {

/// The problem  -div A(x, grad u) + V |u|^{p-2} u = g  with boundary values
/// read from `boundary` on active non-free nodes (all-zero for the
/// homogeneous problem).
struct DirichletProblem {
    AOperator op;
    GridFunction V;
    GridFunction g;
    GridFunction boundary;
    std::shared_ptr<const Grid> grid;

    static DirichletProblem zero_boundary(AOperator op, GridFunction V, GridFunction g);
};

struct DirichletResult {
    GridFunction u;
    double j_value = 0.0;   // Q[u] - p * int g u
    double residual = 0.0;  // scaled dual norm of the first variation of J
    int iterations = 0;
    std::vector<double> trace;  // J per accepted step
    bool converged = false;
    double lambda1 = 0.0;  // from the coercivity precheck (when performed)
    bool lambda1_known = false;
};

/// Minimizes J[u] = Q[u] - p * int g u over the affine space fixed by the
/// boundary data.  With zero boundary data the coercivity precheck requires
/// lambda1 > 0 (skipped when cfg.coercivity_check is false).
DirichletResult solve_dirichlet(const DirichletProblem& prob, const SolverConfig& cfg);

struct MonotoneResult {
    GridFunction from_below;
    GridFunction from_above;
    double gap = 0.0;  // sup distance between the two limits
    double monotonicity_violation = 0.0;  // worst step against the expected order
    double sandwich_violation = 0.0;      // worst escape from [sub, super]
    double sub_violation = 0.0;    // worst failure of sub as a weak subsolution
    double super_violation = 0.0;  // worst failure of super as a weak supersolution
    int outer_iterations = 0;
    bool converged = false;
};

/// Iterates v -> solve(Q'_{|V|}[u] = g + 2 V^- v^{p-1}) from both ends of the
/// order interval [sub, super].  Ordering violations are rejected; the
/// sub/supersolution quality of the input pair (tested weakly against every
/// nonnegative nodal hat) is reported, not enforced, since useful brackets
/// such as large constants fail it pointwise for sign-changing V.
MonotoneResult monotone_iterate(const DirichletProblem& prob, const GridFunction& sub,
                                const GridFunction& super, const SolverConfig& cfg);

struct ComparisonReport {
    double violation = 0.0;  // max over nodes of (u1 - u2)^+
    bool lambda1_positive = false;
    bool rhs_ordered = false;       // g1 <= g2 nodewise
    bool boundary_ordered = false;  // boundary1 <= boundary2 on the discrete boundary
    bool premises_ok() const { return lambda1_positive && rhs_ordered && boundary_ordered; }
};

/// Records how badly u1 <= u2 fails together with whether the comparison
/// hypotheses held, so a violation can be told apart from an instance that
/// simply leaves the theorem's scope.
ComparisonReport check_weak_comparison(const DirichletProblem& p1, const DirichletProblem& p2,
                                       const GridFunction& u1, const GridFunction& u2,
                                       const SolverConfig& cfg);

struct MaxPrincipleReport {
    double lambda1 = 0.0;
    bool principle_holds = false;    // every corpus solve nonnegative, zero or positive
    double min_solution_value = 0.0; // worst interior minimum across solves
    int n_instances = 0;
    bool witness_found = false;  // lambda1 < 0: negative solution exhibited
    GridFunction witness;
    double witness_min = 0.0;
    double witness_residual = 0.0;
};

/// Desk-scale check of the equivalence "lambda1 > 0 iff nonnegative data
/// produce nonnegative (zero or strictly positive) solutions".  For
/// lambda1 < 0 the negative of the principal eigenfunction is returned as
/// the violating solution of a nonnegative-data problem.
MaxPrincipleReport check_maximum_principle(const AOperator& op, const GridFunction& V,
                                           const std::shared_ptr<const Grid>& grid,
                                           const SolverConfig& cfg);

}  // namespace qcrit
