#include "qcrit/morrey.hpp"

#include <algorithm>
#include <cmath>

#include "qcrit/common.hpp"
#include "qcrit/energy.hpp"
#include "qcrit/parallel.hpp"

namespace qcrit {
namespace {

void check_regime_args(double p, int n, double q) {
    if (!(p > 1.0)) throw InvalidInput("morrey_norm: requires p > 1");
    if (p < n && !(q > n / p))
        throw InvalidInput("morrey_norm: p < n regime requires q > n/p");
    if (p == n && !(q > n))
        throw InvalidInput("morrey_norm: p = n regime requires q > n");
    if (p > n && q != 1.0)
        throw InvalidInput("morrey_norm: p > n regime uses the L1 norm, q must be 1");
}

// Per-cell integral of |f| as cell-average times volume.
struct CellTable {
    std::vector<double> avg;  // mean of |f| over the cell's corner nodes
    double cell_vol = 0.0;
};

CellTable cell_averages(const GridFunction& f) {
    const Grid& g = *f.grid;
    CellTable t;
    t.avg.assign(static_cast<std::size_t>(g.n_cells()), 0.0);
    if (g.dim() == 1) {
        t.cell_vol = g.hx();
        for (int c = 0; c < g.n_cells(); ++c)
            if (g.cell_active(c))
                t.avg[static_cast<std::size_t>(c)] =
                    0.5 * (std::fabs(f[static_cast<std::size_t>(c)]) +
                           std::fabs(f[static_cast<std::size_t>(c + 1)]));
    } else {
        t.cell_vol = g.hx() * g.hy();
        for (int j = 0; j < g.ny() - 1; ++j)
            for (int i = 0; i < g.nx() - 1; ++i) {
                int c = g.cell_id(i, j);
                if (!g.cell_active(c)) continue;
                double s = std::fabs(f[static_cast<std::size_t>(g.node_id(i, j))]) +
                           std::fabs(f[static_cast<std::size_t>(g.node_id(i + 1, j))]) +
                           std::fabs(f[static_cast<std::size_t>(g.node_id(i, j + 1))]) +
                           std::fabs(f[static_cast<std::size_t>(g.node_id(i + 1, j + 1))]);
                t.avg[static_cast<std::size_t>(c)] = 0.25 * s;
            }
    }
    return t;
}

// Fraction of a cell covered by the ball B_r(cx, cy).  Exact in 1D; in 2D
// cells cut by the sphere are resolved on a fixed 16x16 midpoint lattice.
double overlap_fraction_1d(double a, double b, double cx, double r) {
    double lo = std::max(a, cx - r), hi = std::min(b, cx + r);
    return hi <= lo ? 0.0 : (hi - lo) / (b - a);
}

double overlap_fraction_2d(double ax, double bx, double ay, double by, double cx, double cy,
                           double r) {
    double dx_out = std::max({ax - cx, 0.0, cx - bx});
    double dy_out = std::max({ay - cy, 0.0, cy - by});
    if (dx_out * dx_out + dy_out * dy_out >= r * r) return 0.0;
    double dx_far = std::max(std::fabs(ax - cx), std::fabs(bx - cx));
    double dy_far = std::max(std::fabs(ay - cy), std::fabs(by - cy));
    if (dx_far * dx_far + dy_far * dy_far <= r * r) return 1.0;
    const int m = 16;
    int inside = 0;
    double hx = (bx - ax) / m, hy = (by - ay) / m;
    for (int j = 0; j < m; ++j) {
        double y = ay + (j + 0.5) * hy, dy = y - cy;
        for (int i = 0; i < m; ++i) {
            double x = ax + (i + 0.5) * hx, dx = x - cx;
            if (dx * dx + dy * dy <= r * r) ++inside;
        }
    }
    return static_cast<double>(inside) / (m * m);
}

double ball_integral(const Grid& g, const CellTable& t, double cx, double cy, double r) {
    double total = 0.0;
    if (g.dim() == 1) {
        double x0 = g.node_x(0);
        int lo = std::max(0, static_cast<int>(std::floor((cx - r - x0) / g.hx())) - 1);
        int hi = std::min(g.n_cells() - 1,
                          static_cast<int>(std::ceil((cx + r - x0) / g.hx())) + 1);
        for (int c = lo; c <= hi; ++c) {
            double a = x0 + c * g.hx();
            double frac = overlap_fraction_1d(a, a + g.hx(), cx, r);
            if (frac > 0.0) total += t.avg[static_cast<std::size_t>(c)] * t.cell_vol * frac;
        }
    } else {
        double x0 = g.node_x(0), y0 = g.node_y(0);
        int ilo = std::max(0, static_cast<int>(std::floor((cx - r - x0) / g.hx())) - 1);
        int ihi = std::min(g.nx() - 2, static_cast<int>(std::ceil((cx + r - x0) / g.hx())) + 1);
        int jlo = std::max(0, static_cast<int>(std::floor((cy - r - y0) / g.hy())) - 1);
        int jhi = std::min(g.ny() - 2, static_cast<int>(std::ceil((cy + r - y0) / g.hy())) + 1);
        for (int j = jlo; j <= jhi; ++j) {
            double ay = y0 + j * g.hy();
            for (int i = ilo; i <= ihi; ++i) {
                std::size_t c = static_cast<std::size_t>(g.cell_id(i, j));
                if (t.avg[c] == 0.0) continue;
                double ax = x0 + i * g.hx();
                double frac = overlap_fraction_2d(ax, ax + g.hx(), ay, ay + g.hy(), cx, cy, r);
                if (frac > 0.0) total += t.avg[c] * t.cell_vol * frac;
            }
        }
    }
    return total;
}

double radius_factor(MorreyRegime regime, int n, double q, double diam, double r) {
    double conj_exp = n * (1.0 - 1.0 / q);  // n / q'
    if (regime == MorreyRegime::PBelowDim) return std::pow(r, -conj_exp);
    double lg = std::log(diam / r);
    return lg <= 0.0 ? 0.0 : std::pow(lg, conj_exp);
}

std::vector<double> dyadic_radii(const Grid& g) {
    double diam = g.active_diameter();
    double cellw = g.dim() == 1 ? g.hx() : std::min(g.hx(), g.hy());
    std::vector<double> radii;
    for (double r = diam; r >= cellw * (1.0 - 1e-12); r *= 0.5) radii.push_back(r);
    if (radii.empty()) radii.push_back(diam);
    return radii;
}

std::vector<int> active_node_list(const Grid& g) {
    std::vector<int> nodes;
    for (int i = 0; i < g.n_nodes(); ++i)
        if (g.node_active(i)) nodes.push_back(i);
    return nodes;
}

}  // namespace

MorreyRegime morrey_regime(double p, int n) {
    if (p < n) return MorreyRegime::PBelowDim;
    if (p == n) return MorreyRegime::PEqualsDim;
    return MorreyRegime::PAboveDim;
}

double morrey_ball_value(const GridFunction& f, double p, double q, int center_node,
                         double radius) {
    const Grid& g = *f.grid;
    check_regime_args(p, g.dim(), q);
    MorreyRegime regime = morrey_regime(p, g.dim());
    if (regime == MorreyRegime::PAboveDim)
        throw InvalidInput("morrey_ball_value: no ball sweep in the L1 regime");
    CellTable t = cell_averages(f);
    double cx = g.node_x(center_node), cy = g.node_y(center_node);
    return radius_factor(regime, g.dim(), q, g.active_diameter(), radius) *
           ball_integral(g, t, cx, cy, radius);
}

MorreyNorm morrey_norm(const GridFunction& f, double p, double q) {
    if (!f.grid) throw InvalidInput("morrey_norm: function has no grid");
    const Grid& g = *f.grid;
    check_regime_args(p, g.dim(), q);

    MorreyNorm out;
    out.regime = morrey_regime(p, g.dim());
    out.q = q;
    CellTable t = cell_averages(f);

    if (out.regime == MorreyRegime::PAboveDim) {
        double total = 0.0;
        for (std::size_t c = 0; c < t.avg.size(); ++c) total += t.avg[c] * t.cell_vol;
        out.value = total;
        return out;
    }

    std::vector<int> centers = active_node_list(g);
    std::vector<double> radii = dyadic_radii(g);
    double diam = g.active_diameter();

    // Best value and radius per center (disjoint writes keep the sweep
    // reproducible for any worker count); the argmax scan is serial.
    std::vector<double> best(centers.size(), 0.0);
    std::vector<double> best_r(centers.size(), radii.front());
    parallel_for(centers.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            double cx = g.node_x(centers[k]), cy = g.node_y(centers[k]);
            double vbest = 0.0, rbest = radii.front();
            for (double r : radii) {
                double val = radius_factor(out.regime, g.dim(), q, diam, r) *
                             ball_integral(g, t, cx, cy, r);
                if (val > vbest) {
                    vbest = val;
                    rbest = r;
                }
            }
            best[k] = vbest;
            best_r[k] = rbest;
        }
    });
    for (std::size_t k = 0; k < centers.size(); ++k) {
        if (best[k] > out.value) {
            out.value = best[k];
            out.best_radius = best_r[k];
            out.best_center = centers[k];
        }
    }
    return out;
}

AdamsReport morrey_adams_check(const GridFunction& V, const GridFunction& u, double p,
                               double q, double delta) {
    if (!V.grid || V.grid != u.grid)
        throw InvalidInput("morrey_adams_check: V and u must share a grid");
    const Grid& g = *u.grid;
    int n = g.dim();
    if (!(p * q > n)) throw InvalidInput("morrey_adams_check: requires pq > n");
    if (!(delta > 0.0)) throw InvalidInput("morrey_adams_check: requires delta > 0");
    if (u.tag != SpaceTag::W1p0)
        throw InvalidInput("morrey_adams_check: u must vanish on the boundary (W1p0)");

    AdamsReport rep;
    rep.delta = delta;
    std::vector<double> absV(V.v.size());
    for (std::size_t i = 0; i < V.v.size(); ++i) absV[i] = std::fabs(V.v[i]);
    rep.lhs = lp_mass(g, u.v, p, &absV);
    rep.rhs_gradient = delta * euclidean_grad_p(g, u.v, p);
    double q_norm = p > n ? 1.0 : q;
    rep.morrey = morrey_norm(V, p, q_norm).value;

    double excess = rep.lhs - rep.rhs_gradient;
    double up = lp_mass(g, u.v, p);
    if (excess <= 0.0 || rep.morrey <= 0.0 || up <= 0.0) {
        rep.c_emp = 0.0;
        return rep;
    }
    double s = n / (p * q - n);
    double sigma = p * q / (p * q - n);
    rep.c_emp = excess * std::pow(delta, s) / (std::pow(rep.morrey, sigma) * up);
    return rep;
}

}  // namespace qcrit
