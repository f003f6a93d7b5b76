#include "qcrit/energy.hpp"

#include <cmath>

#include "qcrit/common.hpp"

namespace qcrit {

int n_simplices(const Grid& g) { return g.dim() == 1 ? g.n_cells() : 2 * g.n_cells(); }

Simplex simplex_at(const Grid& g, int sid) {
    Simplex s;
    if (g.dim() == 1) {
        s.rect_cell = sid;
        s.n_vertices = 2;
        s.nodes[0] = sid;
        s.nodes[1] = sid + 1;
        s.grad_phi[0] = Vec(-1.0 / g.hx(), 1);
        s.grad_phi[1] = Vec(1.0 / g.hx(), 1);
        s.volume = g.hx();
        s.active = g.cell_active(sid);
        return s;
    }
    int cell = sid / 2, half = sid % 2;
    int ci = cell % (g.nx() - 1), cj = cell / (g.nx() - 1);
    double ix = 1.0 / g.hx(), iy = 1.0 / g.hy();
    s.rect_cell = cell;
    s.n_vertices = 3;
    s.volume = g.hx() * g.hy() / 2.0;
    s.active = g.cell_active(cell);
    if (half == 0) {
        // lower triangle (i,j) (i+1,j) (i+1,j+1)
        s.nodes[0] = g.node_id(ci, cj);
        s.nodes[1] = g.node_id(ci + 1, cj);
        s.nodes[2] = g.node_id(ci + 1, cj + 1);
        s.grad_phi[0] = Vec(-ix, 0.0);
        s.grad_phi[1] = Vec(ix, -iy);
        s.grad_phi[2] = Vec(0.0, iy);
    } else {
        // upper triangle (i,j) (i+1,j+1) (i,j+1)
        s.nodes[0] = g.node_id(ci, cj);
        s.nodes[1] = g.node_id(ci + 1, cj + 1);
        s.nodes[2] = g.node_id(ci, cj + 1);
        s.grad_phi[0] = Vec(0.0, -iy);
        s.grad_phi[1] = Vec(ix, 0.0);
        s.grad_phi[2] = Vec(-ix, iy);
    }
    return s;
}

void for_each_active_simplex(const Grid& g, const std::function<void(const Simplex&)>& fn) {
    int n = n_simplices(g);
    for (int sid = 0; sid < n; ++sid) {
        Simplex s = simplex_at(g, sid);
        if (s.active) fn(s);
    }
}

Vec simplex_gradient(const Simplex& s, const std::vector<double>& u) {
    Vec grad(0.0, s.grad_phi[0].n);
    for (int k = 0; k < s.n_vertices; ++k)
        grad = grad + u[static_cast<std::size_t>(s.nodes[k])] * s.grad_phi[k];
    return grad;
}

double simplex_mean(const Simplex& s, const std::vector<double>& u) {
    double m = 0.0;
    for (int k = 0; k < s.n_vertices; ++k) m += u[static_cast<std::size_t>(s.nodes[k])];
    return m / s.n_vertices;
}

std::vector<Vec> gradient(const Grid& g, const std::vector<double>& u) {
    std::vector<Vec> out(static_cast<std::size_t>(n_simplices(g)), Vec(0.0, g.dim()));
    int n = n_simplices(g);
    for (int sid = 0; sid < n; ++sid) {
        Simplex s = simplex_at(g, sid);
        if (s.active) out[static_cast<std::size_t>(sid)] = simplex_gradient(s, u);
    }
    return out;
}

EnergyBreakdown energy(const AOperator& op, const GridFunction& V, const GridFunction& u) {
    const Grid& g = *u.grid;
    if (V.grid.get() != &g) throw InvalidInput("energy: V and u live on different grids");
    EnergyBreakdown e;
    for_each_active_simplex(g, [&](const Simplex& s) {
        Vec xi = simplex_gradient(s, u.v);
        e.gradient_term += dot(op.A(s.rect_cell, xi), xi) * s.volume;
    });
    double p = op.p();
    for (int i = 0; i < g.n_nodes(); ++i) {
        double m = g.mass(i);
        if (m == 0.0) continue;
        std::size_t k = static_cast<std::size_t>(i);
        e.potential_term += V.v[k] * std::pow(std::fabs(u.v[k]), p) * m;
    }
    e.total = e.gradient_term + e.potential_term;
    return e;
}

double lp_mass(const Grid& g, const std::vector<double>& u, double p,
               const std::vector<double>* node_weights) {
    double s = 0.0;
    for (int i = 0; i < g.n_nodes(); ++i) {
        double m = g.mass(i);
        if (m == 0.0) continue;
        std::size_t k = static_cast<std::size_t>(i);
        double w = node_weights ? (*node_weights)[k] : 1.0;
        if (w == 0.0) continue;
        s += w * m * std::pow(std::fabs(u[k]), p);
    }
    return s;
}

double euclidean_grad_p(const Grid& g, const std::vector<double>& u, double p) {
    double s = 0.0;
    for_each_active_simplex(g, [&](const Simplex& sx) {
        s += std::pow(norm2(simplex_gradient(sx, u)), p) * sx.volume;
    });
    return s;
}

std::vector<double> energy_gradient(const AOperator& op, const GridFunction& V,
                                    const GridFunction& u, double eps) {
    const Grid& g = *u.grid;
    if (V.grid.get() != &g) throw InvalidInput("energy_gradient: V and u live on different grids");
    const double p = op.p();
    std::vector<double> out(u.v.size(), 0.0);
    for_each_active_simplex(g, [&](const Simplex& s) {
        Vec xi = simplex_gradient(s, u.v);
        Vec a = op.A(s.rect_cell, xi);
        double w = 1.0;
        if (eps > 0.0) {
            double na = op.norm_A(s.rect_cell, xi);
            if (na == 0.0) return;  // A vanishes there as well
            w = std::pow(na * na + eps * eps, (p - 2.0) / 2.0) * std::pow(na, 2.0 - p);
        }
        for (int k = 0; k < s.n_vertices; ++k) {
            int node = s.nodes[k];
            if (!g.node_free(node)) continue;
            out[static_cast<std::size_t>(node)] += p * w * dot(a, s.grad_phi[k]) * s.volume;
        }
    });
    for (int i : g.free_nodes()) {
        std::size_t k = static_cast<std::size_t>(i);
        double ui = u.v[k];
        double mass_part = ui == 0.0 ? 0.0 : std::copysign(std::pow(std::fabs(ui), p - 1.0), ui);
        out[k] += p * V.v[k] * mass_part * g.mass(i);
    }
    return out;
}

double smoothed_energy(const AOperator& op, const GridFunction& V, const GridFunction& u,
                       double eps) {
    const Grid& g = *u.grid;
    const double p = op.p();
    double grad_term = 0.0;
    for_each_active_simplex(g, [&](const Simplex& s) {
        Vec xi = simplex_gradient(s, u.v);
        double na = op.norm_A(s.rect_cell, xi);
        double val = eps > 0.0
                         ? std::pow(na * na + eps * eps, p / 2.0) - std::pow(eps, p)
                         : std::pow(na, p);
        grad_term += val * s.volume;
    });
    double pot = 0.0;
    for (int i = 0; i < g.n_nodes(); ++i) {
        double m = g.mass(i);
        if (m == 0.0) continue;
        std::size_t k = static_cast<std::size_t>(i);
        pot += V.v[k] * std::pow(std::fabs(u.v[k]), p) * m;
    }
    return grad_term + pot;
}

}  // namespace qcrit
