#include "qcrit/identities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qcrit/common.hpp"
#include "qcrit/corpus.hpp"
#include "qcrit/energy.hpp"
#include "qcrit/parallel.hpp"

namespace qcrit {
namespace {

bool simplex_touches_boundary(const Grid& g, const Simplex& s) {
    for (int k = 0; k < s.n_vertices; ++k)
        if (!g.node_free(s.nodes[k])) return true;
    return false;
}

}  // namespace

PiconeReport picone_check(const AOperator& op, const GridFunction& u, const GridFunction& v,
                          const GridFunction* V, double v_floor) {
    if (!u.grid || u.grid != v.grid)
        throw InvalidInput("picone_check: u and v must share a grid");
    const Grid& g = *u.grid;
    const double p = op.p();
    for (int i = 0; i < g.n_nodes(); ++i)
        if (g.node_active(i) && u.v[static_cast<std::size_t>(i)] < -1e-14)
            throw InvalidInput("picone_check: u must be nonnegative");

    const bool skip_boundary = v.tag == SpaceTag::W1p0;
    PiconeReport rep;
    rep.min_l = std::numeric_limits<double>::infinity();

    for_each_active_simplex(g, [&](const Simplex& s) {
        if (skip_boundary && simplex_touches_boundary(g, s)) return;
        double vm = simplex_mean(s, v.v);
        if (vm < v_floor)
            throw InvalidInput("picone_check: v below the positivity floor at a cell midpoint");
        double um = std::max(simplex_mean(s, u.v), 0.0);
        double t = um / vm;

        Vec gu = simplex_gradient(s, u.v);
        Vec gv = simplex_gradient(s, v.v);
        Vec Agv = op.A(s.rect_cell, gv);
        double nu_p = dot(op.A(s.rect_cell, gu), gu);  // |grad u|_A^p
        double nv_p = dot(Agv, gv);                    // |grad v|_A^p
        double cross = dot(Agv, gu);

        double tp1 = signed_pow(t, p - 1.0);
        double tp = tp1 * t;
        double L = nu_p + (p - 1.0) * tp * nv_p - p * tp1 * cross;

        // Independent route: expand grad(u^p / v^{p-1}) by the chain rule
        // into a vector first, then pair with the flux.
        Vec w = (p * tp1) * gu - ((p - 1.0) * tp) * gv;
        double R = nu_p - dot(Agv, w);

        rep.max_lr_gap = std::max(rep.max_lr_gap, std::fabs(L - R));
        rep.min_l = std::min(rep.min_l, L);
        rep.integral_l += L * s.volume;
        ++rep.cells_used;
    });
    if (rep.cells_used == 0) {
        rep.min_l = 0.0;
        return rep;
    }

    if (V) {
        if (V->grid != u.grid) throw InvalidInput("picone_check: V must share the grid");
        rep.q_u = energy(op, *V, u).total;
        rep.signed_slack = rep.q_u - rep.integral_l;
        rep.functional_gap = std::fabs(rep.signed_slack);
        rep.has_functional = true;
    }
    return rep;
}

DiazSaaReport diaz_saa_check(const AOperator& op, const GridFunction& w1,
                             const GridFunction& g1, const GridFunction& V1,
                             const GridFunction& w2, const GridFunction& g2,
                             const GridFunction& V2, double h) {
    if (!w1.grid || w1.grid != w2.grid || g1.grid != w1.grid || g2.grid != w1.grid ||
        V1.grid != w1.grid || V2.grid != w1.grid)
        throw InvalidInput("diaz_saa_check: all fields must share a grid");
    if (h < 0.0) throw InvalidInput("diaz_saa_check: requires h >= 0");
    const Grid& g = *w1.grid;
    const double p = op.p();
    for (int i = 0; i < g.n_nodes(); ++i) {
        std::size_t k = static_cast<std::size_t>(i);
        if (g.node_active(i) && (w1.v[k] < -1e-14 || w2.v[k] < -1e-14))
            throw InvalidInput("diaz_saa_check: solutions must be nonnegative");
    }

    DiazSaaReport rep;
    rep.c_declared = op.convexity_constant();

    // Lumped data pairing.
    for (int i = 0; i < g.n_nodes(); ++i) {
        if (!g.node_active(i)) continue;
        std::size_t k = static_cast<std::size_t>(i);
        double a1 = w1.v[k] + h, a2 = w2.v[k] + h;
        if (a1 <= 0.0 || a2 <= 0.0) continue;  // h = 0 at a boundary node
        double d1 = (g1.v[k] - V1.v[k] * signed_pow(w1.v[k], p - 1.0)) / std::pow(a1, p - 1.0);
        double d2 = (g2.v[k] - V2.v[k] * signed_pow(w2.v[k], p - 1.0)) / std::pow(a2, p - 1.0);
        rep.i_h += g.mass(i) * (d1 - d2) * (std::pow(a1, p) - std::pow(a2, p));
    }

    // Bracket form per cell with midpoint shifts.
    const bool skip_boundary = h == 0.0;
    for_each_active_simplex(g, [&](const Simplex& s) {
        if (skip_boundary && simplex_touches_boundary(g, s)) return;
        double a1 = simplex_mean(s, w1.v) + h;
        double a2 = simplex_mean(s, w2.v) + h;
        if (a1 <= 0.0 || a2 <= 0.0) return;
        Vec xi = (1.0 / a1) * simplex_gradient(s, w1.v);
        Vec eta = (1.0 / a2) * simplex_gradient(s, w2.v);
        double l = std::pow(a1, p) * op.bracket(s.rect_cell, xi, eta) +
                   std::pow(a2, p) * op.bracket(s.rect_cell, eta, xi);
        rep.l_h += l * s.volume;
    });

    rep.slack = rep.i_h - rep.c_declared * rep.l_h;
    return rep;
}

FirstOrderField field_from_solution(const AOperator& op, const GridFunction& V,
                                    const GridFunction& v, double v_floor) {
    if (!v.grid || V.grid != v.grid)
        throw InvalidInput("field_from_solution: V and v must share a grid");
    const Grid& g = *v.grid;
    const double p = op.p();

    FirstOrderField field;
    field.grid = v.grid;
    field.S.assign(static_cast<std::size_t>(n_simplices(g)), Vec(0.0, g.dim()));

    for (int sid = 0; sid < n_simplices(g); ++sid) {
        Simplex s = simplex_at(g, sid);
        if (!s.active) continue;
        double vm = simplex_mean(s, v.v);
        if (vm < v_floor)
            throw InvalidInput("field_from_solution: v below the positivity floor");
        field.S[static_cast<std::size_t>(sid)] = (1.0 / vm) * simplex_gradient(s, v.v);
    }

    // Weak residual of -div A(S) + (1-p) A(S).S + V = 0 over nodal hats:
    // flux and zero-order field terms by exact per-cell quadrature with the
    // hat averaged per cell, potential term lumped (matching the energy).
    std::vector<double> acc(static_cast<std::size_t>(g.n_nodes()), 0.0);
    for (int sid = 0; sid < n_simplices(g); ++sid) {
        Simplex s = simplex_at(g, sid);
        if (!s.active) continue;
        const Vec& S = field.S[static_cast<std::size_t>(sid)];
        Vec AS = op.A(s.rect_cell, S);
        double zero_order = (1.0 - p) * dot(AS, S);
        for (int k = 0; k < s.n_vertices; ++k) {
            acc[static_cast<std::size_t>(s.nodes[k])] +=
                (dot(AS, s.grad_phi[k]) + zero_order / s.n_vertices) * s.volume;
        }
    }
    double worst = 0.0;
    for (int node : g.free_nodes()) {
        std::size_t i = static_cast<std::size_t>(node);
        worst = std::max(worst, std::fabs(acc[i] + V.v[i] * g.mass(node)));
    }
    field.residual = worst;
    return field;
}

NonnegativityReport nonnegativity_from_field(const AOperator& op, const FirstOrderField& field,
                                             const GridFunction& V, std::uint64_t seed) {
    if (!field.grid || V.grid != field.grid)
        throw InvalidInput("nonnegativity_from_field: V must live on the field grid");
    const std::shared_ptr<const Grid>& gp = field.grid;
    const Grid& g = *gp;
    const double p = op.p();

    NonnegativityReport rep;
    rep.min_q = std::numeric_limits<double>::infinity();
    rep.min_young_slack = std::numeric_limits<double>::infinity();
    rep.corpus_fingerprint = corpus_hash(g, seed);

    GridFunction psi(gp, SpaceTag::W1p0);
    for_each_corpus_member(gp, seed, [&](int idx, const std::string&, const GridFunction& raw) {
        double np = lp_mass(g, raw.v, p);
        if (!(np > 0.0)) return;
        double scale = std::pow(np, -1.0 / p);
        psi.v = raw.v;
        for (double& x : psi.v) x *= scale;

        double q = energy(op, V, psi).total;
        if (q < rep.min_q) {
            rep.min_q = q;
            rep.witness_index = idx;
        }

        double slack = 0.0;
        double holder = 0.0;
        for (int sid = 0; sid < n_simplices(g); ++sid) {
            Simplex s = simplex_at(g, sid);
            if (!s.active) continue;
            const Vec& S = field.S[static_cast<std::size_t>(sid)];
            Vec gpsi = simplex_gradient(s, psi.v);
            double a = op.norm_A(s.rect_cell, gpsi);      // |grad psi|_A
            double sA = op.norm_A(s.rect_cell, S);        // |S|_A
            double pm = std::fabs(simplex_mean(s, psi.v));
            double paired = dot(op.A(s.rect_cell, S), gpsi);

            double b = pm * sA;
            slack += (std::pow(a, p) + (p - 1.0) * std::pow(b, p) -
                      p * std::pow(pm, p - 1.0) * paired) *
                     s.volume;
            double bound = std::pow(sA, p - 1.0) * a;
            holder = std::max(holder,
                              (std::fabs(paired) - bound) / (1.0 + std::fabs(paired) + bound));
        }
        rep.min_young_slack = std::min(rep.min_young_slack, slack);
        rep.max_holder_violation = std::max(rep.max_holder_violation, holder);
    });
    return rep;
}

}  // namespace qcrit
