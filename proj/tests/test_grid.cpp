#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "qcrit/common.hpp"
#include "qcrit/energy.hpp"
#include "qcrit/grid.hpp"

using namespace qcrit;

TEST_CASE("interval layout and masses") {
    auto g = Grid::interval(0.0, 1.0, 11);
    CHECK(g->n_nodes() == 11);
    CHECK(g->n_cells() == 10);
    CHECK(g->hx() == doctest::Approx(0.1));
    CHECK(g->node_x(3) == doctest::Approx(0.3));
    CHECK(g->total_volume() == doctest::Approx(1.0));
    // lumped masses sum to the volume; end nodes carry half a cell
    double sum = 0.0;
    for (int i = 0; i < g->n_nodes(); ++i) sum += g->mass(i);
    CHECK(sum == doctest::Approx(1.0));
    CHECK(g->mass(0) == doctest::Approx(0.05));
    CHECK(g->mass(5) == doctest::Approx(0.1));
    // interior nodes are free, endpoints are not
    CHECK(g->free_nodes().size() == 9);
    CHECK_FALSE(g->node_free(0));
    CHECK(g->node_free(1));
}

TEST_CASE("rectangle masses and simplex areas") {
    auto g = Grid::rectangle(0.0, 2.0, 0.0, 1.0, 21, 11);
    CHECK(g->n_nodes() == 231);
    CHECK(g->total_volume() == doctest::Approx(2.0));
    double sum = 0.0;
    for (int i = 0; i < g->n_nodes(); ++i) sum += g->mass(i);
    CHECK(sum == doctest::Approx(2.0));
    double area = 0.0;
    int count = 0;
    for_each_active_simplex(*g, [&](const Simplex& s) {
        area += s.volume;
        ++count;
    });
    CHECK(area == doctest::Approx(2.0));
    CHECK(count == 2 * g->n_cells());
}

TEST_CASE("disc mask carves the active region") {
    auto g = Grid::rectangle(-1.0, 1.0, -1.0, 1.0, 81, 81);
    g->set_active([](double x, double y) { return x * x + y * y < 1.0; });
    const double pi = 3.14159265358979323846;
    CHECK(g->total_volume() == doctest::Approx(pi).epsilon(0.01));
    // boundary-adjacent nodes are active but not free
    int active = 0, free_n = 0;
    for (int i = 0; i < g->n_nodes(); ++i) {
        if (g->node_active(i)) ++active;
        if (g->node_free(i)) ++free_n;
    }
    CHECK(free_n < active);
    CHECK(g->active_diameter() <= 2.0 * std::sqrt(2.0) + 1e-12);
}

TEST_CASE("piecewise gradient of a linear field is exact") {
    auto g = Grid::rectangle(0.0, 1.0, 0.0, 1.0, 9, 9);
    GridFunction f = GridFunction::from_fn(g, [](double x, double y) { return 3.0 * x - 2.0 * y; });
    for_each_active_simplex(*g, [&](const Simplex& s) {
        Vec gr = simplex_gradient(s, f.v);
        CHECK(gr[0] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(gr[1] == doctest::Approx(-2.0).epsilon(1e-12));
    });
}

TEST_CASE("energy of a known profile") {
    auto g = Grid::interval(0.0, 1.0, 101);
    AOperator op = AOperator::p_laplacian(2.0, 1);
    GridFunction V(g, 1.0, SpaceTag::W1p);
    GridFunction u = GridFunction::from_fn(g, [](double x, double) { return x; });
    EnergyBreakdown e = energy(op, V, u);
    CHECK(e.gradient_term == doctest::Approx(1.0).epsilon(1e-12));
    // lumped quadrature of x^2 on [0,1]
    CHECK(e.potential_term == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
    CHECK(e.total == doctest::Approx(e.gradient_term + e.potential_term));
}

TEST_CASE("w1p0 tag zeroes the discrete boundary") {
    auto g = Grid::interval(0.0, 1.0, 11);
    GridFunction f(g, 2.0, SpaceTag::W1p0);
    CHECK(f.v[0] == 0.0);
    CHECK(f.v[10] == 0.0);
    CHECK(f.v[5] == 2.0);
}

TEST_CASE("csv round-trip preserves bits") {
    auto g = Grid::interval(0.0, 1.0, 17);
    GridFunction f = GridFunction::from_fn(
        g, [](double x, double) { return std::sin(7.0 * x) / 3.0; });
    std::string path = "roundtrip_test.csv";
    save_csv(f, path);
    GridFunction back = load_csv(g, path, SpaceTag::W1p);
    for (std::size_t i = 0; i < f.v.size(); ++i) CHECK(back.v[i] == f.v[i]);
    std::remove(path.c_str());
}

TEST_CASE("csv loader rejects the wrong grid") {
    auto g = Grid::interval(0.0, 1.0, 17);
    GridFunction f(g, 1.0, SpaceTag::W1p);
    std::string path = "shape_test.csv";
    save_csv(f, path);
    auto other = Grid::interval(0.0, 1.0, 19);
    CHECK_THROWS_AS(load_csv(other, path, SpaceTag::W1p), InvalidInput);
    std::remove(path.c_str());
}

TEST_CASE("nested exhaustion grids shrink the spectrum side") {
    auto g = Grid::interval(0.0, 1.0, 101);
    auto sub = g->with_active([](double x, double) { return x > 0.25 && x < 0.75; });
    CHECK(sub->total_volume() < g->total_volume());
    CHECK(sub->n_nodes() == g->n_nodes());  // same index space
    int sub_free = static_cast<int>(sub->free_nodes().size());
    CHECK(sub_free < static_cast<int>(g->free_nodes().size()));
}

TEST_CASE("boundary distance vanishes on constrained nodes") {
    auto g = Grid::interval(0.0, 1.0, 21);
    std::vector<double> bd = g->boundary_distance();
    CHECK(bd[0] == doctest::Approx(0.0));
    CHECK(bd[10] > 0.4);
}
