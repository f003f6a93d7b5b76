#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qcrit/common.hpp"
#include "qcrit/dirichlet.hpp"
#include "qcrit/energy.hpp"
#include "qcrit/grid.hpp"

using namespace qcrit;

namespace {

SolverConfig cfg2() {
    SolverConfig cfg;
    cfg.restarts = 2;
    return cfg;
}

DirichletProblem torsion_problem(double p, int n) {
    auto g = Grid::interval(0.0, 1.0, n);
    AOperator op = AOperator::p_laplacian(p, 1);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    GridFunction rhs(g, 1.0, SpaceTag::W1p);
    return DirichletProblem::zero_boundary(std::move(op), std::move(V), std::move(rhs));
}

}  // namespace

TEST_CASE("interval torsion solutions match the closed form") {
    for (double p : {1.5, 2.0, 3.0}) {
        DirichletProblem prob = torsion_problem(p, 201);
        DirichletResult r = solve_dirichlet(prob, cfg2());
        INFO("p = ", p);
        CHECK(r.converged);
        CHECK(r.j_value == doctest::Approx(oracle::torsion_j(p)).epsilon(2e-3));
        double sup = 0.0;
        for (int i = 0; i < prob.grid->n_nodes(); ++i)
            sup = std::max(sup, std::fabs(r.u.v[static_cast<std::size_t>(i)] -
                                          oracle::torsion_u(p, prob.grid->node_x(i))));
        CHECK(sup <= 2e-3);
    }
}

TEST_CASE("solution satisfies the difference equation nodewise") {
    DirichletProblem prob = torsion_problem(2.0, 101);
    DirichletResult r = solve_dirichlet(prob, cfg2());
    const Grid& g = *prob.grid;
    double h = g.hx();
    // -u'' = 1 at interior nodes (p = 2 reduces to the classical stencil)
    for (int i = 1; i + 1 < g.n_nodes(); ++i) {
        std::size_t k = static_cast<std::size_t>(i);
        double lap = (-r.u.v[k - 1] + 2.0 * r.u.v[k] - r.u.v[k + 1]) / (h * h);
        CHECK(lap == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("nonconstant boundary data reproduces the catenary-type profile") {
    auto g = Grid::interval(0.0, 1.0, 401);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(g, 1.0, SpaceTag::W1p);
    GridFunction rhs(g, 0.0, SpaceTag::W1p);
    GridFunction bd(g, 1.0, SpaceTag::W1p);
    DirichletProblem prob{op, V, rhs, bd, g};
    DirichletResult r = solve_dirichlet(prob, cfg2());
    CHECK(r.converged);
    // -u'' + u = 0, u(0) = u(1) = 1: u = cosh(x - 1/2) / cosh(1/2)
    double sup = 0.0;
    for (int i = 0; i < g->n_nodes(); ++i) {
        double x = g->node_x(i);
        double exact = std::cosh(x - 0.5) / std::cosh(0.5);
        sup = std::max(sup, std::fabs(r.u.v[static_cast<std::size_t>(i)] - exact));
    }
    CHECK(sup <= 1e-5);
    CHECK(r.j_value == doctest::Approx(2.0 * std::tanh(0.5)).epsilon(1e-6));
}

TEST_CASE("coercivity precheck rejects an indefinite functional") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(g, -2.0 * oracle::kLambda1P2, SpaceTag::W1p);
    GridFunction rhs(g, 1.0, SpaceTag::W1p);
    DirichletProblem prob =
        DirichletProblem::zero_boundary(std::move(op), std::move(V), std::move(rhs));
    CHECK_THROWS_AS(solve_dirichlet(prob, cfg2()), SolveError);
    SolverConfig loose = cfg2();
    loose.coercivity_check = false;
    loose.max_iters = 300;  // the unbounded functional must not loop forever
    CHECK_THROWS_AS(solve_dirichlet(prob, loose), SolveError);
}

TEST_CASE("weak comparison orders solutions with ordered data") {
    auto g = Grid::interval(0.0, 1.0, 151);
    AOperator op = AOperator::p_laplacian(2.5, 1);
    GridFunction V(g, 1.0, SpaceTag::W1p);
    GridFunction g1 = GridFunction::from_fn(g, [](double x, double) { return x; });
    GridFunction g2 = GridFunction::from_fn(g, [](double x, double) { return x + 0.5; });
    GridFunction zero(g, 0.0, SpaceTag::W1p);
    DirichletProblem p1{op, V, g1, zero, g};
    DirichletProblem p2{op, V, g2, zero, g};
    SolverConfig cfg = cfg2();
    DirichletResult r1 = solve_dirichlet(p1, cfg);
    DirichletResult r2 = solve_dirichlet(p2, cfg);
    ComparisonReport rep = check_weak_comparison(p1, p2, r1.u, r2.u, cfg);
    CHECK(rep.premises_ok());
    CHECK(rep.violation <= 1e-9);
}

TEST_CASE("maximum principle holds iff the eigenvalue is positive") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    SolverConfig cfg = cfg2();

    GridFunction Vpos(g, -5.0, SpaceTag::W1p);  // lambda1 = pi^2 - 5 > 0
    MaxPrincipleReport good = check_maximum_principle(op, Vpos, g, cfg);
    CHECK(good.lambda1 > 0.0);
    CHECK(good.principle_holds);
    CHECK(good.min_solution_value > 0.0);
    CHECK(good.n_instances > 0);

    GridFunction Vneg(g, -15.0, SpaceTag::W1p);  // lambda1 = pi^2 - 15 < 0
    MaxPrincipleReport bad = check_maximum_principle(op, Vneg, g, cfg);
    CHECK(bad.lambda1 < 0.0);
    CHECK_FALSE(bad.principle_holds);
    CHECK(bad.witness_found);
    CHECK(bad.witness_min < 0.0);
    CHECK(bad.witness_residual <= 1e-6);
}

TEST_CASE("monotone iteration brackets the solution from both sides") {
    DirichletProblem prob = torsion_problem(2.0, 101);
    DirichletResult direct = solve_dirichlet(prob, cfg2());
    GridFunction sub(prob.grid, 0.0, SpaceTag::W1p0);
    GridFunction super(prob.grid, 0.2, SpaceTag::W1p);  // torsion peak is 1/8
    MonotoneResult mono = monotone_iterate(prob, sub, super, cfg2());
    CHECK(mono.converged);
    CHECK(mono.gap <= 1e-6);
    CHECK(mono.monotonicity_violation <= 1e-9);
    CHECK(mono.sandwich_violation <= 1e-9);
    double sup = 0.0;
    for (std::size_t i = 0; i < direct.u.v.size(); ++i)
        sup = std::max(sup, std::fabs(mono.from_below.v[i] - direct.u.v[i]));
    CHECK(sup <= 1e-5);
}

TEST_CASE("problem validation names the offending input") {
    auto g = Grid::interval(0.0, 1.0, 51);
    auto other = Grid::interval(0.0, 1.0, 61);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(other, 0.0, SpaceTag::W1p);
    GridFunction rhs(g, 1.0, SpaceTag::W1p);
    GridFunction zero(g, 0.0, SpaceTag::W1p);
    DirichletProblem prob{op, V, rhs, zero, g};
    CHECK_THROWS_AS(solve_dirichlet(prob, cfg2()), InvalidInput);
}
