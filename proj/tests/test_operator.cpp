#include <doctest.h>

#include <cmath>

#include "qcrit/common.hpp"
#include "qcrit/operator_family.hpp"

using namespace qcrit;

TEST_CASE("p-laplacian closed forms") {
    AOperator op = AOperator::p_laplacian(3.0, 2);
    Vec xi(3.0, 4.0);  // |xi| = 5
    CHECK(op.F(-1, xi) == doctest::Approx(125.0 / 3.0).epsilon(1e-14));
    Vec a = op.A(-1, xi);
    // A = |xi|^{p-2} xi = 5 xi
    CHECK(a[0] == doctest::Approx(15.0).epsilon(1e-14));
    CHECK(a[1] == doctest::Approx(20.0).epsilon(1e-14));
    CHECK(op.norm_A(-1, xi) == doctest::Approx(std::pow(125.0, 1.0 / 3.0)).epsilon(1e-14));
    CHECK(op.alpha() == doctest::Approx(1.0));
    CHECK(op.beta() == doctest::Approx(1.0));
}

TEST_CASE("matrix form reduces to plain form at identity") {
    SymMat id;
    AOperator mat = AOperator::pa_laplacian(2.5, 2, id);
    AOperator plain = AOperator::p_laplacian(2.5, 2);
    Vec xi(0.7, -1.3);
    CHECK(mat.F(-1, xi) == doctest::Approx(plain.F(-1, xi)).epsilon(1e-14));
    Vec am = mat.A(-1, xi), ap = plain.A(-1, xi);
    CHECK(am[0] == doctest::Approx(ap[0]).epsilon(1e-14));
    CHECK(am[1] == doctest::Approx(ap[1]).epsilon(1e-14));
}

TEST_CASE("euler identity ties flux to lagrangian") {
    SymMat m;
    m.a11 = 2.0;
    m.a12 = 0.3;
    m.a22 = 1.5;
    AOperator ops[] = {
        AOperator::p_laplacian(1.7, 2),
        AOperator::pa_laplacian(2.0, 2, m),
        AOperator::pseudo_p_laplacian(3.0, 2, Vec(1.0, 2.0)),
        AOperator::convex_combination(2.5, 2, 0.4, Vec(1.0, 0.5), m),
    };
    Vec xi(-0.4, 1.1);
    for (const AOperator& op : ops) {
        double lhs = dot(op.A(-1, xi), xi);
        CHECK(lhs == doctest::Approx(op.p() * op.F(-1, xi)).epsilon(1e-12));
    }
}

TEST_CASE("structure suite finds no violations on any family") {
    SymMat m;
    m.a11 = 3.0;
    m.a12 = 0.5;
    m.a22 = 1.0;
    AOperator ops[] = {
        AOperator::p_laplacian(1.5, 2),
        AOperator::p_laplacian(3.0, 1),
        AOperator::pa_laplacian(2.0, 2, m),
        AOperator::pseudo_p_laplacian(2.5, 2, Vec(0.5, 2.0)),
        AOperator::convex_combination(2.0, 2, 0.3, Vec(1.0, 1.0), m),
    };
    for (const AOperator& op : ops) {
        StructureReport rep = check_structure(op, 20000, 11);
        INFO(rep.family, " p=", rep.p);
        CHECK(rep.max_violation() <= 1e-10);
        CHECK(rep.convexity_c_empirical > 0.0);
        CHECK(rep.samples == 20000);
    }
}

TEST_CASE("pseudo form convexity constant reaches the provable bound") {
    for (double p : {2.0, 2.5, 3.0, 4.0}) {
        AOperator op = AOperator::pseudo_p_laplacian(p, 2, Vec(1.0, 1.5));
        StructureReport rep = check_structure(op, 20000, 5);
        CHECK(rep.convexity_c_declared == doctest::Approx(std::pow(2.0, 1.0 - p)));
        CHECK(rep.convexity_c_empirical >= std::pow(2.0, 1.0 - p) - 1e-6);
    }
}

TEST_CASE("sampled convexity constant for p below two is positive") {
    AOperator op = AOperator::p_laplacian(1.5, 2);
    CHECK(op.convexity_from_sampling());
    CHECK(op.convexity_constant() > 0.0);
    AOperator op2 = AOperator::p_laplacian(3.0, 2);
    CHECK_FALSE(op2.convexity_from_sampling());
    CHECK(op2.convexity_constant() == doctest::Approx(0.25));
}

TEST_CASE("ellipticity constants track the coefficient matrix") {
    SymMat m;
    m.a11 = 4.0;
    m.a12 = 0.0;
    m.a22 = 1.0;
    AOperator op = AOperator::pa_laplacian(2.0, 2, m);
    // eigenvalues of A are 1 and 4
    Vec e1(1.0, 0.0), e2(0.0, 1.0);
    CHECK(dot(op.A(-1, e1), e1) == doctest::Approx(4.0));
    CHECK(dot(op.A(-1, e2), e2) == doctest::Approx(1.0));
    CHECK(op.alpha() <= 1.0 + 1e-12);
    CHECK(op.beta() >= 4.0 - 1e-12);
}

TEST_CASE("invalid constructions are rejected") {
    CHECK_THROWS_AS(AOperator::p_laplacian(1.0, 1), InvalidInput);
    CHECK_THROWS_AS(AOperator::p_laplacian(2.0, 3), InvalidInput);
    SymMat bad;
    bad.a11 = 1.0;
    bad.a12 = 5.0;  // not positive definite
    bad.a22 = 1.0;
    CHECK_THROWS_AS(AOperator::pa_laplacian(2.0, 2, bad), InvalidInput);
    CHECK_THROWS_AS(AOperator::pseudo_p_laplacian(2.0, 2, Vec(-1.0, 1.0)), InvalidInput);
    // the mixed family needs p >= 2
    SymMat id;
    CHECK_THROWS_AS(AOperator::convex_combination(1.5, 2, 0.5, Vec(1.0, 1.0), id), InvalidInput);
}

TEST_CASE("bracket switches branch at p = 2") {
    AOperator high = AOperator::p_laplacian(3.0, 2);
    Vec xi(1.0, 0.0), eta(0.0, 1.0);
    Vec d = xi - eta;
    CHECK(high.bracket(-1, xi, eta) ==
          doctest::Approx(std::pow(norm2(d), 3.0)).epsilon(1e-12));
    AOperator low = AOperator::p_laplacian(1.5, 2);
    double expect = std::pow(norm2(eta) + norm2(d), -0.5) * dot(d, d);
    CHECK(low.bracket(-1, xi, eta) == doctest::Approx(expect).epsilon(1e-12));
}
