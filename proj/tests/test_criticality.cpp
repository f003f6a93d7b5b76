#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "qcrit/common.hpp"
#include "qcrit/criticality.hpp"
#include "qcrit/eigensolver.hpp"
#include "qcrit/energy.hpp"
#include "qcrit/grid.hpp"

using namespace qcrit;

namespace {

SolverConfig cfg2() {
    SolverConfig cfg;
    cfg.restarts = 2;
    return cfg;
}

}  // namespace

TEST_CASE("interval capacity of a pinned midpoint is two ramps") {
    auto g = Grid::interval(0.0, 1.0, 101);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    std::vector<int> K{50};  // x = 0.5
    for (double p : {1.5, 2.0, 3.0}) {
        AOperator op = AOperator::p_laplacian(p, 1);
        CapacityReport rep = capacity(op, V, K, g, cfg2());
        INFO("p = ", p);
        CHECK(rep.converged);
        // linear ramps of length 1/2 on both sides: 2 (1/2)^{1-p}
        CHECK(rep.value == doctest::Approx(std::pow(2.0, p)).epsilon(1e-6));
    }
}

TEST_CASE("asymmetric pin splits into unequal ramps") {
    auto g = Grid::interval(0.0, 1.0, 101);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    std::vector<int> K{30};  // x = 0.3
    AOperator op = AOperator::p_laplacian(2.0, 1);
    CapacityReport rep = capacity(op, V, K, g, cfg2());
    CHECK(rep.converged);
    CHECK(rep.value == doctest::Approx(1.0 / 0.3 + 1.0 / 0.7).epsilon(1e-6));
}

TEST_CASE("capacity rejects pins on the discrete boundary") {
    auto g = Grid::interval(0.0, 1.0, 101);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    std::vector<int> K{0};
    CHECK_THROWS_AS(capacity(op, V, K, g, cfg2()), InvalidInput);
}

TEST_CASE("perturbation threshold of a uniform dip equals lambda1") {
    auto g = Grid::interval(0.0, 1.0, 151);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    GridFunction W(g, -1.0, SpaceTag::W1p);
    SolverConfig cfg = cfg2();
    double lam = principal_eigen(op, V, g, cfg).lambda1;
    ThresholdReport rep = perturbation_threshold(op, V, W, g, cfg);
    CHECK(std::fabs(rep.tau_plus - lam) <= 1e-8);
    CHECK(std::fabs(rep.lambda_at_tau) <= 1e-8);
}

TEST_CASE("perturbation threshold with a compact dip zeroes the eigenvalue") {
    auto g = Grid::interval(0.0, 1.0, 151);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    GridFunction W = GridFunction::from_fn(g, [](double x, double) {
        double d = std::fabs(x - 0.5);
        if (d >= 0.2) return 0.0;
        double c = std::cos(0.5 * 3.14159265358979323846 * d / 0.2);
        return -c * c;
    });
    SolverConfig cfg = cfg2();
    ThresholdReport rep = perturbation_threshold(op, V, W, g, cfg);
    CHECK(rep.tau_plus > 0.0);
    CHECK(std::fabs(rep.lambda_at_tau) <= 1e-8);
    // independent re-solve at tau confirms the stored sample
    GridFunction Vt = V;
    for (int i = 0; i < g->n_nodes(); ++i)
        Vt.v[static_cast<std::size_t>(i)] += rep.tau_plus * W.v[static_cast<std::size_t>(i)];
    double lam = principal_eigen(op, Vt, g, cfg).lambda1;
    CHECK(std::fabs(lam) <= 1e-8);
}

TEST_CASE("threshold requires a genuinely negative perturbation") {
    auto g = Grid::interval(0.0, 1.0, 51);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    GridFunction W(g, 0.5, SpaceTag::W1p);
    CHECK_THROWS_AS(perturbation_threshold(op, V, W, g, cfg2()), InvalidInput);
}

TEST_CASE("classification triad at one resolution") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    SolverConfig cfg = cfg2();
    GridFunction zero(g, 0.0, SpaceTag::W1p);
    double lam0 = principal_eigen(op, zero, g, cfg).lambda1;

    CriticalityReport sub = classify(op, zero, g, 4, cfg);
    CHECK(sub.classification == Classification::Subcritical);
    REQUIRE(sub.hardy.has_value());
    CHECK(sub.hardy->min_slack >= 0.0);

    GridFunction Vc(g, -lam0, SpaceTag::W1p);
    CriticalityReport crit = classify(op, Vc, g, 4, cfg);
    CHECK(crit.classification == Classification::Critical);
    REQUIRE(crit.null_sequence.has_value());
    REQUIRE_FALSE(crit.null_sequence->energies.empty());
    CHECK(crit.null_sequence->energies.back() <= 1e-6);
    for (double nrm : crit.null_sequence->anchor_norms)
        CHECK(nrm == doctest::Approx(1.0).epsilon(1e-8));
    REQUIRE(crit.ground_state.has_value());
    // ground state of the flat-potential critical functional is sin(pi x)
    double sup = 0.0;
    for (int i = 0; i < g->n_nodes(); ++i) {
        double x = g->node_x(i);
        sup = std::max(sup, std::fabs(crit.ground_state->v[static_cast<std::size_t>(i)] -
                                      std::sin(3.14159265358979323846 * x)));
    }
    CHECK(sup <= 1e-3);

    GridFunction Vs(g, -2.0 * lam0, SpaceTag::W1p);
    CriticalityReport sup_rep = classify(op, Vs, g, 4, cfg);
    CHECK(sup_rep.classification == Classification::Supercritical);
    REQUIRE(sup_rep.witness.has_value());
    CHECK(sup_rep.witness_energy < 0.0);
    // the witness certifies by evaluation, not by trust
    CHECK(energy(op, Vs, *sup_rep.witness).total == doctest::Approx(sup_rep.witness_energy));
    CHECK(sup_rep.witness_energy <= -1.0);
}

TEST_CASE("hardy weight is strictly positive and corpus-validated") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.5, 1);
    GridFunction V(g, 0.0, SpaceTag::W1p);
    HardyReport rep = hardy_weight(op, V, g, cfg2());
    CHECK(rep.min_slack >= 0.0);
    CHECK(rep.multiplier <= 1.0);
    CHECK(rep.multiplier > 0.0);
    REQUIRE_FALSE(rep.patch_constants.empty());
    for (double c : rep.patch_constants) CHECK(c > 0.0);
    for (int i = 0; i < g->n_nodes(); ++i)
        if (g->node_active(i)) CHECK(rep.weight.v[static_cast<std::size_t>(i)] > 0.0);
}

TEST_CASE("null sequence construction drives the energy to zero") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    SolverConfig cfg = cfg2();
    GridFunction zero(g, 0.0, SpaceTag::W1p);
    double lam0 = principal_eigen(op, zero, g, cfg).lambda1;
    GridFunction Vc(g, -lam0, SpaceTag::W1p);
    NullSequence ns = build_null_sequence(op, Vc, g, 4, cfg);
    REQUIRE(ns.members.size() == ns.energies.size());
    REQUIRE_FALSE(ns.members.empty());
    CHECK(ns.energies.back() <= 1e-6);
    CHECK(ns.ts.back() <= 1e-6);
    // each member's recorded energy is its actual energy on the full grid
    for (std::size_t k = 0; k < ns.members.size(); ++k)
        CHECK(energy(op, Vc, ns.members[k]).total ==
              doctest::Approx(ns.energies[k]).epsilon(1e-10));
}

TEST_CASE("poincare check pairs the corpus against the ground state") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    SolverConfig cfg = cfg2();
    GridFunction zero(g, 0.0, SpaceTag::W1p);
    double lam0 = principal_eigen(op, zero, g, cfg).lambda1;
    GridFunction Vc(g, -lam0, SpaceTag::W1p);
    GridFunction psi(g, 1.0, SpaceTag::W1p);
    PoincareReport rep = poincare_type_check(op, Vc, psi, g, cfg);
    CHECK(rep.pairing > 0.0);
    CHECK(rep.c_value > 0.0);
    CHECK(rep.min_slack >= -1e-8);
    // a subcritical functional is rejected
    CHECK_THROWS_AS(poincare_type_check(op, zero, psi, g, cfg), InvalidInput);
}
