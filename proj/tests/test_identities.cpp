#include <doctest.h>

#include <cmath>
#include <random>

#include "qcrit/common.hpp"
#include "qcrit/dirichlet.hpp"
#include "qcrit/eigensolver.hpp"
#include "qcrit/energy.hpp"
#include "qcrit/grid.hpp"
#include "qcrit/identities.hpp"

using namespace qcrit;

namespace {

constexpr double kPi = 3.14159265358979323846;

SolverConfig cfg2() {
    SolverConfig cfg;
    cfg.restarts = 2;
    return cfg;
}

GridFunction random_nonneg(const std::shared_ptr<const Grid>& g, std::uint64_t seed,
                           SpaceTag tag) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    double a = coef(rng), b = coef(rng), c = coef(rng);
    double x0 = g->x0(), x1 = g->x1();
    GridFunction f = GridFunction::from_fn(
        g,
        [&](double x, double y) {
            double s = a * std::sin(3.0 * x + y) + b * std::cos(5.0 * x) + c * x + 1.5;
            // taper to zero at the boundary so gradients stay O(1)
            double q = 4.0 * (x - x0) * (x1 - x) / ((x1 - x0) * (x1 - x0));
            return std::fabs(s) * q;
        },
        tag);
    return f;
}

// Strictly positive profile bounded well away from zero, as the identity
// requires of v; amplitudes keep the p-th powers near unit scale so the
// two routes can be compared at 1e-10.
GridFunction random_positive(const std::shared_ptr<const Grid>& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-0.4, 0.4);
    double a = coef(rng), b = coef(rng);
    return GridFunction::from_fn(g, [&](double x, double y) {
        return 1.5 + a * std::sin(3.0 * x + y) + b * std::cos(5.0 * x);
    });
}

// Positive solution of the homogeneous problem with boundary values one:
// the natural v for the functional identity, bounded below on the closure.
DirichletResult boundary_one_solution(const AOperator& op, const GridFunction& V,
                                      const std::shared_ptr<const Grid>& g, double tol) {
    GridFunction zero(g, 0.0, SpaceTag::W1p);
    GridFunction one(g, 1.0, SpaceTag::W1p);
    DirichletProblem prob{op, V, zero, one, g};
    SolverConfig cfg;
    cfg.tol = tol;
    cfg.max_iters = 20000;
    return solve_dirichlet(prob, cfg);
}

}  // namespace

TEST_CASE("two picone routes agree cellwise and stay nonnegative") {
    auto g = Grid::interval(0.0, 1.0, 101);
    for (double p : {1.5, 2.0, 3.0}) {
        AOperator op = AOperator::p_laplacian(p, 1);
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            GridFunction u = random_nonneg(g, seed, SpaceTag::W1p0);
            GridFunction v = random_positive(g, seed + 1000);
            PiconeReport rep = picone_check(op, u, v);
            INFO("p = ", p, " seed = ", seed);
            CHECK(rep.max_lr_gap <= 1e-10);
            CHECK(rep.min_l >= -1e-12);
            CHECK(rep.cells_used > 0);
        }
    }
}

TEST_CASE("picone vanishes identically on constant multiples") {
    auto g = Grid::interval(0.0, 1.0, 101);
    for (double p : {1.5, 3.0}) {
        AOperator op = AOperator::p_laplacian(p, 1);
        GridFunction v = random_positive(g, 5);
        GridFunction u = v;
        for (double& x : u.v) x *= 2.0;
        u.tag = SpaceTag::W1p;
        PiconeReport rep = picone_check(op, u, v);
        CHECK(rep.max_lr_gap <= 1e-13);
        CHECK(std::fabs(rep.integral_l) <= 1e-12);
        CHECK(rep.min_l >= -1e-13);
    }
}

TEST_CASE("picone functional identity binds at a positive solution") {
    // Q[u] = integral of L when v solves the homogeneous problem; the
    // midpoint chain rule leaves an O(h^2) quadrature gap, so the bound
    // here reflects the measured constant at this resolution.
    auto g = Grid::interval(0.0, 1.0, 801);
    GridFunction V = GridFunction::from_fn(g, [](double x, double) { return std::sin(4.0 * x); });
    GridFunction u = GridFunction::from_fn(
        g,
        [](double x, double) {
            double s = std::sin(kPi * x);
            return s * s;
        },
        SpaceTag::W1p0);
    for (double p : {1.5, 2.0, 3.0}) {
        AOperator op = AOperator::p_laplacian(p, 1);
        DirichletResult sol = boundary_one_solution(op, V, g, 1e-10);
        REQUIRE(sol.converged);
        PiconeReport rep = picone_check(op, u, sol.u, &V);
        INFO("p = ", p);
        CHECK(rep.has_functional);
        CHECK(rep.max_lr_gap <= 1e-12);
        CHECK(rep.min_l >= -1e-12);
        CHECK(rep.functional_gap <= 5e-6);
    }
}

TEST_CASE("picone functional gap shrinks quadratically with the mesh") {
    AOperator op = AOperator::p_laplacian(2.0, 1);
    double gaps[2];
    int k = 0;
    for (int n : {401, 801}) {
        auto g = Grid::interval(0.0, 1.0, n);
        GridFunction V = GridFunction::from_fn(g, [](double x, double) { return std::sin(4.0 * x); });
        GridFunction u = GridFunction::from_fn(
            g,
            [](double x, double) {
                double s = std::sin(kPi * x);
                return s * s;
            },
            SpaceTag::W1p0);
        DirichletResult sol = boundary_one_solution(op, V, g, 1e-10);
        REQUIRE(sol.converged);
        gaps[k++] = picone_check(op, u, sol.u, &V).functional_gap;
    }
    CHECK(gaps[0] / gaps[1] >= 2.5);
}

TEST_CASE("picone rejects sign-changing or mismatched inputs") {
    auto g = Grid::interval(0.0, 1.0, 51);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction u = GridFunction::from_fn(
        g, [](double x, double) { return std::sin(6.28 * x); }, SpaceTag::W1p0);
    GridFunction v(g, 1.0, SpaceTag::W1p);
    CHECK_THROWS_AS(picone_check(op, u, v), InvalidInput);
    auto other = Grid::interval(0.0, 1.0, 61);
    GridFunction u2(other, 1.0, SpaceTag::W1p0);
    CHECK_THROWS_AS(picone_check(op, u2, v), InvalidInput);
}

TEST_CASE("data-difference pairing dominates the bracket form") {
    auto g = Grid::interval(0.0, 1.0, 101);
    for (double p : {2.0, 3.0}) {
        AOperator op = AOperator::p_laplacian(p, 1);
        GridFunction V1(g, 0.5, SpaceTag::W1p);
        GridFunction V2(g, 1.0, SpaceTag::W1p);
        GridFunction g1(g, 1.0, SpaceTag::W1p);
        GridFunction g2 = GridFunction::from_fn(g, [](double x, double) { return 1.0 + x; });
        SolverConfig cfg = cfg2();
        DirichletResult w1 = solve_dirichlet(
            DirichletProblem::zero_boundary(op, V1, g1), cfg);
        DirichletResult w2 = solve_dirichlet(
            DirichletProblem::zero_boundary(op, V2, g2), cfg);
        REQUIRE(w1.converged);
        REQUIRE(w2.converged);
        for (double h : {0.0, 1e-3, 0.1}) {
            DiazSaaReport rep = diaz_saa_check(op, w1.u, g1, V1, w2.u, g2, V2, h);
            INFO("p = ", p, " h = ", h);
            CHECK(rep.l_h >= -1e-12);
            CHECK(rep.slack >= -1e-8);
        }
    }
}

TEST_CASE("degenerate pairing vanishes when both solutions coincide") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(g, 1.0, SpaceTag::W1p);
    GridFunction rhs(g, 1.0, SpaceTag::W1p);
    DirichletResult w = solve_dirichlet(DirichletProblem::zero_boundary(op, V, rhs), cfg2());
    REQUIRE(w.converged);
    DiazSaaReport rep = diaz_saa_check(op, w.u, rhs, V, w.u, rhs, V, 0.01);
    CHECK(std::fabs(rep.i_h) <= 1e-10);
    CHECK(std::fabs(rep.l_h) <= 1e-12);
}

TEST_CASE("constant positive field is exact and scale invariant") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.5, 1);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    GridFunction v(g, 3.0, SpaceTag::W1p);
    FirstOrderField f = field_from_solution(op, V, v);
    CHECK(f.residual == 0.0);
    for (const Vec& s : f.S) CHECK(std::fabs(s.a[0]) == 0.0);

    GridFunction w = random_positive(g, 11);
    GridFunction w2 = w;
    for (double& x : w2.v) x *= 2.0;
    FirstOrderField fw = field_from_solution(op, V, w);
    FirstOrderField fw2 = field_from_solution(op, V, w2);
    CHECK(fw.residual == doctest::Approx(fw2.residual).epsilon(1e-12));
    for (std::size_t i = 0; i < fw.S.size(); ++i)
        CHECK(fw.S[i].a[0] == doctest::Approx(fw2.S[i].a[0]).epsilon(1e-12));
}

TEST_CASE("field residual of a positive solution tracks the solver tolerance") {
    // The per-hat residual of S = grad v / v floors at the cubic quadrature
    // error of the weak form, so the solver bound needs resolution.
    AOperator op = AOperator::p_laplacian(2.0, 1);
    double res[2];
    int k = 0;
    for (int n : {401, 801}) {
        auto g = Grid::interval(0.0, 1.0, n);
        GridFunction V(g, -5.0, SpaceTag::W1p);  // lambda1 = pi^2 - 5 > 0
        DirichletResult sol = boundary_one_solution(op, V, g, 1e-8);
        REQUIRE(sol.converged);
        res[k++] = field_from_solution(op, V, sol.u).residual;
    }
    CHECK(res[0] / res[1] >= 5.0);  // cubic decay, not quadratic

    auto g = Grid::interval(0.0, 1.0, 2001);
    GridFunction V(g, -5.0, SpaceTag::W1p);
    SolverConfig cfg;
    cfg.tol = 1e-8;
    cfg.max_iters = 20000;
    DirichletResult sol = boundary_one_solution(op, V, g, cfg.tol);
    REQUIRE(sol.converged);
    FirstOrderField field = field_from_solution(op, V, sol.u);
    CHECK(field.residual <= 10.0 * cfg.tol);
}

TEST_CASE("field rejects profiles that dip below the positivity floor") {
    auto g = Grid::interval(0.0, 1.0, 51);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    GridFunction v = GridFunction::from_fn(
        g, [](double x, double) { return x - 0.5; }, SpaceTag::W1p);
    CHECK_THROWS_AS(field_from_solution(op, V, v), InvalidInput);
}

TEST_CASE("field route certifies nonnegativity for a subcritical potential") {
    auto g = Grid::interval(0.0, 1.0, 2001);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(g, -5.0, SpaceTag::W1p);  // lambda1 = pi^2 - 5 > 0
    DirichletResult sol = boundary_one_solution(op, V, g, 1e-8);
    REQUIRE(sol.converged);
    FirstOrderField field = field_from_solution(op, V, sol.u);
    CHECK(field.residual <= 1e-7);
    NonnegativityReport rep = nonnegativity_from_field(op, field, V, 7);
    CHECK(rep.min_q >= -1e-8);
    CHECK(rep.min_young_slack >= -1e-8);
    CHECK(rep.max_holder_violation <= 1e-10);
    CHECK(rep.corpus_fingerprint != 0);
}
