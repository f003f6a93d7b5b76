#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "qcrit/common.hpp"
#include "qcrit/eigensolver.hpp"
#include "qcrit/energy.hpp"
#include "qcrit/grid.hpp"

using namespace qcrit;

namespace {

SolverConfig fast_cfg() {
    SolverConfig cfg;
    cfg.restarts = 2;
    return cfg;
}

}  // namespace

TEST_CASE("frozen continuum eigenvalues agree with both oracle routes") {
    CHECK(oracle::shooting_lambda1(1.5) == doctest::Approx(oracle::kLambda1P15).epsilon(5e-9));
    CHECK(oracle::shooting_lambda1(2.0) == doctest::Approx(oracle::kLambda1P2).epsilon(5e-9));
    CHECK(oracle::shooting_lambda1(3.0) == doctest::Approx(oracle::kLambda1P3).epsilon(5e-9));
    CHECK(oracle::closed_form_lambda1(1.5) == doctest::Approx(oracle::kLambda1P15).epsilon(1e-13));
    CHECK(oracle::closed_form_lambda1(2.0) == doctest::Approx(oracle::kLambda1P2).epsilon(1e-13));
    CHECK(oracle::closed_form_lambda1(3.0) == doctest::Approx(oracle::kLambda1P3).epsilon(1e-13));
}

TEST_CASE("linear interval eigenvalue matches the pencil oracle exactly") {
    auto g = Grid::interval(0.0, 1.0, 201);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    EigenResult r = principal_eigen(op, V, g, fast_cfg());
    CHECK(r.converged);
    double ref = oracle::fd_lambda1(V.v, 0.0, 1.0, g->n_nodes());
    CHECK(r.lambda1 == doctest::Approx(ref).epsilon(1e-9));
    CHECK(r.lambda1 == doctest::Approx(oracle::kLambda1P2).epsilon(1e-3));
}

TEST_CASE("random potentials stay tied to the pencil oracle") {
    auto g = Grid::interval(0.0, 1.0, 151);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> amp(-30.0, 30.0);
    for (int trial = 0; trial < 5; ++trial) {
        GridFunction V(g, 0.0, SpaceTag::W1p);
        double a = amp(rng), b = amp(rng), c = amp(rng);
        for (int i = 0; i < g->n_nodes(); ++i) {
            double x = g->node_x(i);
            V.v[static_cast<std::size_t>(i)] = a + b * std::sin(5.0 * x) + c * x * x;
        }
        EigenResult r = principal_eigen(op, V, g, fast_cfg());
        double ref = oracle::fd_lambda1(V.v, 0.0, 1.0, g->n_nodes());
        INFO("trial ", trial);
        CHECK(r.converged);
        CHECK(r.lambda1 == doctest::Approx(ref).epsilon(1e-8));
    }
}

TEST_CASE("nonlinear interval eigenvalues approach the shooting values") {
    auto g = Grid::interval(0.0, 1.0, 201);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    struct Row {
        double p, target;
    } rows[] = {{1.5, oracle::kLambda1P15}, {3.0, oracle::kLambda1P3}};
    for (const Row& row : rows) {
        AOperator op = AOperator::p_laplacian(row.p, 1);
        EigenResult r = principal_eigen(op, V, g, fast_cfg());
        INFO("p = ", row.p);
        CHECK(r.converged);
        CHECK(r.lambda1 == doctest::Approx(row.target).epsilon(5e-3));
    }
}

TEST_CASE("eigenfunction is positive, normalized, and low-residual") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.5, 1);
    GridFunction V = GridFunction::from_fn(g, [](double x, double) { return 4.0 * x; });
    SolverConfig cfg = fast_cfg();
    EigenResult r = principal_eigen(op, V, g, cfg);
    CHECK(r.converged);
    CHECK(r.positivity_margin > 0.0);
    CHECK(lp_mass(*g, r.eigenfunction.v, 2.5) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(eigen_residual(op, V, r.lambda1, r.eigenfunction) <= 10.0 * cfg.tol);
}

TEST_CASE("constant shifts move the eigenvalue by exactly the constant") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V = GridFunction::from_fn(g, [](double x, double) { return std::cos(7.0 * x); });
    SolverConfig cfg = fast_cfg();
    double base = principal_eigen(op, V, g, cfg).lambda1;
    for (double c : {0.5, -3.0, 17.25}) {
        GridFunction Vc = V;
        for (double& x : Vc.v) x += c;
        double shifted = principal_eigen(op, Vc, g, cfg).lambda1;
        CHECK(shifted - base == doctest::Approx(c).epsilon(1e-13));
    }
}

TEST_CASE("matrix coefficients scale the plain eigenvalue") {
    // A = diag(4, 4) doubles gradients in the A-norm: lambda scales by 4
    auto g = Grid::rectangle(0.0, 1.0, 0.0, 1.0, 25, 25);
    SymMat m;
    m.a11 = 4.0;
    m.a22 = 4.0;
    GridFunction V(g, 0.0, SpaceTag::W1p);
    SolverConfig cfg = fast_cfg();
    double plain = principal_eigen(AOperator::p_laplacian(2.0, 2), V, g, cfg).lambda1;
    double scaled = principal_eigen(AOperator::pa_laplacian(2.0, 2, m), V, g, cfg).lambda1;
    CHECK(scaled == doctest::Approx(4.0 * plain).epsilon(1e-7));
}

TEST_CASE("square eigenvalue approaches two pi squared") {
    auto g = Grid::rectangle(0.0, 1.0, 0.0, 1.0, 33, 33);
    AOperator op = AOperator::p_laplacian(2.0, 2);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    EigenResult r = principal_eigen(op, V, g, fast_cfg());
    CHECK(r.converged);
    CHECK(r.lambda1 == doctest::Approx(2.0 * oracle::kLambda1P2).epsilon(5e-3));
}

TEST_CASE("pseudo family decouples coordinates in one dimension each") {
    // sum_i a_i |u_xi|^p with a = (1, 1) equals the plain form at p = 2
    auto g = Grid::rectangle(0.0, 1.0, 0.0, 1.0, 17, 17);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    SolverConfig cfg = fast_cfg();
    double plain = principal_eigen(AOperator::p_laplacian(2.0, 2), V, g, cfg).lambda1;
    double pseudo =
        principal_eigen(AOperator::pseudo_p_laplacian(2.0, 2, Vec(1.0, 1.0)), V, g, cfg).lambda1;
    CHECK(pseudo == doctest::Approx(plain).epsilon(1e-8));
}

TEST_CASE("identical seeds reproduce identical floats") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.5, 1);
    GridFunction V = GridFunction::from_fn(g, [](double x, double) { return std::sin(9.0 * x); });
    SolverConfig cfg = fast_cfg();
    cfg.seed = 31;
    EigenResult r1 = principal_eigen(op, V, g, cfg);
    EigenResult r2 = principal_eigen(op, V, g, cfg);
    CHECK(r1.lambda1 == r2.lambda1);
    CHECK(r1.iterations == r2.iterations);
    CHECK(r1.eigenfunction.v == r2.eigenfunction.v);
}

TEST_CASE("weighted denominator reproduces the discrete hardy constant") {
    int n = 201;
    auto g = Grid::interval(0.0, 1.0, n);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    for (int i = 1; i + 1 < n; ++i) {
        double x = g->node_x(i);
        w[static_cast<std::size_t>(i)] = 1.0 / (x * x);
    }
    EigenResult r = principal_eigen_weighted(op, V, g, fast_cfg(), &w);
    CHECK(r.converged);
    CHECK(r.lambda1 == doctest::Approx(oracle::hardy_best_constant(n)).epsilon(1e-8));
}

TEST_CASE("simplicity check agrees across restarts and shifts") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V = GridFunction::from_fn(g, [](double x, double) { return 2.0 * x; });
    SimplicityReport rep = check_simplicity(op, V, g, fast_cfg());
    CHECK(rep.base.converged);
    CHECK(rep.gap <= 1e-6);
    CHECK(rep.shift_consistency <= 1e-10);
}

TEST_CASE("empirical lower bound sits below the computed eigenvalue") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V = GridFunction::from_fn(g, [](double x, double) { return -2.0 + std::sin(3.0 * x); });
    EigenResult r = principal_eigen(op, V, g, fast_cfg());
    LowerBoundReport lb = lambda1_lower_bound(op, V, 2.0, 1.0);
    CHECK(r.lambda1 >= lb.bound - 1e-9);
}

TEST_CASE("solver rejects mismatched inputs") {
    auto g = Grid::interval(0.0, 1.0, 51);
    auto other = Grid::interval(0.0, 1.0, 61);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(other, 0.0, SpaceTag::W1p);
    CHECK_THROWS_AS(principal_eigen(op, V, g, fast_cfg()), InvalidInput);
    AOperator op2d = AOperator::p_laplacian(2.0, 2);
    GridFunction V1(g, 0.0, SpaceTag::W1p);
    CHECK_THROWS_AS(principal_eigen(op2d, V1, g, fast_cfg()), InvalidInput);
}
