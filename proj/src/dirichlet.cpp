#include "qcrit/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "qcrit/common.hpp"
#include "qcrit/energy.hpp"
#include "qcrit/rng.hpp"
#include "solver_core.hpp"

namespace qcrit {
namespace {

using detail::FreeMap;
using detail::SobolevPrecond;

constexpr double kArmijo = 1e-4;

void check_problem(const DirichletProblem& prob) {
    if (!prob.grid) throw InvalidInput("dirichlet: problem has no grid");
    if (prob.V.grid.get() != prob.grid.get() || prob.g.grid.get() != prob.grid.get() ||
        prob.boundary.grid.get() != prob.grid.get())
        throw InvalidInput("dirichlet: V, g, and boundary data must live on the problem grid");
    if (prob.op.dim() != prob.grid->dim())
        throw InvalidInput("dirichlet: operator dimension does not match the grid");
    for (int i = 0; i < prob.grid->n_nodes(); ++i)
        if (prob.grid->node_active(i) && !prob.grid->node_free(i) &&
            !std::isfinite(prob.boundary.v[static_cast<std::size_t>(i)]))
            throw InvalidInput("dirichlet: boundary data must be finite on boundary nodes");
}

bool boundary_is_zero(const DirichletProblem& prob) {
    const Grid& g = *prob.grid;
    for (int i = 0; i < g.n_nodes(); ++i)
        if (g.node_active(i) && !g.node_free(i) &&
            prob.boundary.v[static_cast<std::size_t>(i)] != 0.0)
            return false;
    return true;
}

double linear_term(const Grid& g, const GridFunction& rhs, const std::vector<double>& u) {
    double acc = 0.0;
    for (int i = 0; i < g.n_nodes(); ++i)
        if (g.node_active(i))
            acc += g.mass(i) * rhs[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
    return acc;
}

// First variation of J at u (free nodes): energy gradient minus p g m.
std::vector<double> j_gradient(const DirichletProblem& prob, const GridFunction& u, double eps,
                               const FreeMap& fm) {
    std::vector<double> grad = energy_gradient(prob.op, prob.V, u, eps);
    const double p = prob.op.p();
    for (int node : fm.nodes) {
        std::size_t i = static_cast<std::size_t>(node);
        grad[i] -= p * prob.grid->mass(node) * prob.g.v[i];
    }
    return grad;
}

}  // namespace

DirichletProblem DirichletProblem::zero_boundary(AOperator op, GridFunction V, GridFunction g) {
    std::shared_ptr<const Grid> grid = V.grid;
    GridFunction zero(grid, 0.0, SpaceTag::W1p);
    return DirichletProblem{std::move(op), std::move(V), std::move(g), std::move(zero), grid};
}

DirichletResult solve_dirichlet(const DirichletProblem& prob, const SolverConfig& cfg) {
    check_problem(prob);
    const Grid& g = *prob.grid;
    const double p = prob.op.p();
    DirichletResult out;

    bool zero_bd = boundary_is_zero(prob);
    if (cfg.coercivity_check && zero_bd) {
        SolverConfig pre = cfg;
        pre.restarts = 1;
        pre.coercivity_check = false;
        EigenResult eig = principal_eigen(prob.op, prob.V, prob.grid, pre);
        out.lambda1 = eig.lambda1;
        out.lambda1_known = true;
        if (!(eig.lambda1 > 0.0))
            throw SolveError("solve_dirichlet: coercivity failure, lambda1 = " +
                                 format_sci(eig.lambda1) + " is not positive",
                             eig.trace);
    }

    FreeMap fm(g);
    SobolevPrecond P(g, fm);

    GridFunction u(prob.grid, SpaceTag::W1p);
    for (int i = 0; i < g.n_nodes(); ++i)
        if (g.node_active(i) && !g.node_free(i))
            u.v[static_cast<std::size_t>(i)] = prob.boundary.v[static_cast<std::size_t>(i)];

    // Scale for the stopping test: the dual size of the load.
    std::vector<double> load(u.v.size(), 0.0);
    for (int node : fm.nodes) {
        std::size_t i = static_cast<std::size_t>(node);
        load[i] = p * g.mass(node) * prob.g.v[i];
    }
    const double gscale = 1.0 + P.dual_norm(load);

    bool data_nonneg = true;
    for (int i = 0; i < g.n_nodes() && data_nonneg; ++i)
        if (g.node_active(i) &&
            (prob.g.v[static_cast<std::size_t>(i)] < 0.0 ||
             prob.boundary.v[static_cast<std::size_t>(i)] < 0.0))
            data_nonneg = false;

    // The raw boundary lift carries O(1/h) gradients in the boundary ring;
    // opening the continuation at that scale keeps the first stage benign.
    double eps0 = g.h();
    for_each_active_simplex(g, [&](const Simplex& s) {
        Vec gu = simplex_gradient(s, u.v);
        eps0 = std::max(eps0, std::sqrt(dot(gu, gu)));
    });
    std::vector<double> stages = detail::eps_schedule(p, eps0, cfg.eps_min);

    // Lagged-diffusivity refresh of the preconditioner: for p away from 2
    // the curvature weight |grad u|^(p-2) varies by orders of magnitude
    // across cells and a single Sobolev operator cannot step all of them.
    std::unique_ptr<SobolevPrecond> Pw;
    const SobolevPrecond* Pdir = &P;
    auto refresh_precond = [&](double eps_w) {
        if (p == 2.0) return;
        Pw = std::make_unique<SobolevPrecond>(g, fm, [&](const Simplex& s) {
            Vec gu = simplex_gradient(s, u.v);
            double wt = std::pow(dot(gu, gu) + eps_w * eps_w, 0.5 * p - 1.0);
            return std::clamp(wt, 1e-12, 1e12);
        });
        Pdir = Pw.get();
    };

    double step = 1.0;
    bool flip_tried = false;
    double jval = smoothed_energy(prob.op, prob.V, u, 0.0) - p * linear_term(g, prob.g, u.v);
    out.trace.push_back(jval);

    for (std::size_t stage = 0; stage < stages.size(); ++stage) {
        const double eps = stages[stage];
        const bool final_stage = stage + 1 == stages.size();
        std::vector<double> hist;
        double jeps = smoothed_energy(prob.op, prob.V, u, eps) - p * linear_term(g, prob.g, u.v);
        if (stage > 0) refresh_precond(std::max(eps, cfg.eps_min));

        bool descent_done = false;
        while (!descent_done && out.iterations < cfg.max_iters) {
            std::vector<double> grad = j_gradient(prob, u, eps, fm);
            std::vector<double> dir = Pdir->apply(grad);
            double slope = 0.0;
            for (int node : fm.nodes) {
                std::size_t i = static_cast<std::size_t>(node);
                slope -= grad[i] * dir[i];
            }

            bool accepted = false;
            double t = std::min(1.0, 2.0 * step);
            GridFunction trial(prob.grid, SpaceTag::W1p);
            GridFunction probe(prob.grid, SpaceTag::W1p);
            auto eval_at = [&](double tt, GridFunction& dst) {
                dst.v = u.v;
                for (int node : fm.nodes) {
                    std::size_t i = static_cast<std::size_t>(node);
                    dst.v[i] -= tt * dir[i];
                }
                return smoothed_energy(prob.op, prob.V, dst, eps) -
                       p * linear_term(g, prob.g, dst.v);
            };
            for (int bt = 0; bt < 50 && !accepted; ++bt, t *= 0.5) {
                double jt = eval_at(t, trial);
                if (jt <= jeps + kArmijo * t * slope) {
                    // The first sufficient-decrease step can sit at the
                    // stability edge of the stiffest modes; halve while
                    // that strictly pays off.
                    for (int extra = 0; extra < 50; ++extra) {
                        double jt2 = eval_at(0.5 * t, probe);
                        if (!(jt2 < jt)) break;
                        t *= 0.5;
                        jt = jt2;
                        trial.v.swap(probe.v);
                    }
                    u.v.swap(trial.v);
                    jeps = jt;
                    step = t;
                    accepted = true;
                }
            }
            ++out.iterations;
            jval = smoothed_energy(prob.op, prob.V, u, 0.0) - p * linear_term(g, prob.g, u.v);
            out.trace.push_back(jval);
            hist.push_back(jeps);

            bool stalled = !accepted;
            if (!stalled && static_cast<int>(hist.size()) > cfg.stall_iters) {
                double before = hist[hist.size() - 1 - static_cast<std::size_t>(cfg.stall_iters)];
                stalled = before - jeps <= cfg.stall_rel * (1.0 + std::fabs(jeps));
            }
            if (!stalled) continue;
            if (!final_stage) break;

            if (!flip_tried && data_nonneg) {
                // With nonnegative data the minimizer is nonnegative; take
                // |u| when that does not raise J and keep polishing.
                flip_tried = true;
                GridFunction absu = u;
                for (double& x : absu.v) x = std::fabs(x);
                double jabs =
                    smoothed_energy(prob.op, prob.V, absu, eps) - p * linear_term(g, prob.g, absu.v);
                if (jabs <= jeps) {
                    u.v.swap(absu.v);
                    jeps = jabs;
                    hist.clear();
                    step = 1.0;
                    continue;
                }
            }
            descent_done = true;
        }
        if (!final_stage) continue;

        // Energy differences are below rounding here while the fixed-point
        // map still contracts; iterate at the last accepted step and steer
        // by the optimality residual instead.
        auto residual_of = [&](const GridFunction& x) {
            std::vector<double> r = j_gradient(prob, x, 0.0, fm);
            return P.dual_norm(r) / gscale;
        };
        double rnorm = residual_of(u);
        refresh_precond(0.0);
        const double t_nat = 1.0 / (p * std::max(1.0, p - 1.0));
        double t = p == 2.0 ? std::max(step, t_nat) : t_nat;
        GridFunction best(prob.grid, SpaceTag::W1p);
        best.v = u.v;
        double best_rnorm = rnorm;
        int since_gain = 0;
        int gains_in_row = 0;
        int since_refresh = 0;
        while (out.iterations < cfg.max_iters) {
            if (rnorm <= cfg.tol) break;
            if (p != 2.0 && ++since_refresh >= 10) {
                refresh_precond(0.0);
                since_refresh = 0;
                t = t_nat;
            }
            std::vector<double> grad = j_gradient(prob, u, 0.0, fm);
            std::vector<double> dir = Pdir->apply(grad);
            for (int node : fm.nodes) {
                std::size_t i = static_cast<std::size_t>(node);
                u.v[i] -= t * dir[i];
            }
            ++out.iterations;
            jval = smoothed_energy(prob.op, prob.V, u, 0.0) - p * linear_term(g, prob.g, u.v);
            out.trace.push_back(jval);
            rnorm = residual_of(u);
            if (rnorm < 0.98 * best_rnorm) {
                best.v = u.v;
                best_rnorm = rnorm;
                since_gain = 0;
                if (++gains_in_row >= 10) {
                    t = std::min(1.0, 2.0 * t);
                    gains_in_row = 0;
                }
            } else {
                gains_in_row = 0;
                ++since_gain;
                if (rnorm > 2.0 * best_rnorm) {
                    u.v = best.v;
                    rnorm = best_rnorm;
                    refresh_precond(0.0);
                    since_refresh = 0;
                    t *= 0.5;
                }
                if (since_gain > 60) break;  // residual stagnated
            }
        }
        if (rnorm <= best_rnorm) {
            best.v = u.v;
            best_rnorm = rnorm;
        }
        u.v = best.v;
        out.residual = best_rnorm;
        out.converged = best_rnorm <= cfg.tol;
        out.u = u;
        out.j_value = smoothed_energy(prob.op, prob.V, u, 0.0) - p * linear_term(g, prob.g, u.v);
        break;
    }

    if (!out.converged)
        throw SolveError("solve_dirichlet: no convergence within max_iters, residual " +
                             format_sci(out.residual) + " vs tol " + format_sci(cfg.tol),
                         out.trace);
    return out;
}

MonotoneResult monotone_iterate(const DirichletProblem& prob, const GridFunction& sub,
                                const GridFunction& super, const SolverConfig& cfg) {
    check_problem(prob);
    const Grid& g = *prob.grid;
    const double p = prob.op.p();
    if (sub.grid.get() != prob.grid.get() || super.grid.get() != prob.grid.get())
        throw InvalidInput("monotone_iterate: sub and super must live on the problem grid");
    for (int i = 0; i < g.n_nodes(); ++i) {
        if (!g.node_active(i)) continue;
        std::size_t k = static_cast<std::size_t>(i);
        if (sub.v[k] > super.v[k] + 1e-12)
            throw InvalidInput("monotone_iterate: ordering violation, sub > super at a node");
        if (sub.v[k] < -1e-12 || prob.g.v[k] < -1e-12)
            throw InvalidInput("monotone_iterate: requires sub >= 0 and g >= 0");
    }

    MonotoneResult out;

    // Weak sub/supersolution quality against the hat family, normalized per
    // hat mass.  Reported, not enforced: constants that bracket the solution
    // are routinely not pointwise supersolutions for sign-changing V.
    {
        FreeMap fm(g);
        std::vector<double> asub = energy_gradient(prob.op, prob.V, sub, 0.0);
        std::vector<double> asup = energy_gradient(prob.op, prob.V, super, 0.0);
        for (int node : fm.nodes) {
            std::size_t i = static_cast<std::size_t>(node);
            double m = g.mass(node);
            if (m <= 0.0) continue;
            out.sub_violation = std::max(out.sub_violation, asub[i] / (p * m) - prob.g.v[i]);
            out.super_violation = std::max(out.super_violation, prob.g.v[i] - asup[i] / (p * m));
        }
    }

    GridFunction vabs(prob.grid, SpaceTag::W1p);
    GridFunction vminus(prob.grid, SpaceTag::W1p);
    for (std::size_t i = 0; i < prob.V.v.size(); ++i) {
        vabs.v[i] = std::fabs(prob.V.v[i]);
        vminus.v[i] = std::max(-prob.V.v[i], 0.0);
    }

    SolverConfig inner = cfg;
    inner.restarts = 1;
    inner.coercivity_check = false;
    if (cfg.coercivity_check) {
        SolverConfig pre = inner;
        EigenResult eig = principal_eigen(prob.op, vabs, prob.grid, pre);
        if (!(eig.lambda1 > 0.0))
            throw SolveError("monotone_iterate: iteration operator not coercive", eig.trace);
    }

    auto advance = [&](const GridFunction& v) {
        GridFunction rhs(prob.grid, SpaceTag::W1p);
        for (std::size_t i = 0; i < v.v.size(); ++i)
            rhs.v[i] = prob.g.v[i] + 2.0 * vminus.v[i] * signed_pow(v.v[i], p - 1.0);
        DirichletProblem stepp{prob.op, vabs, std::move(rhs), prob.boundary, prob.grid};
        return solve_dirichlet(stepp, inner).u;
    };

    auto sandwich = [&](const GridFunction& v) {
        double worst = 0.0;
        for (int i = 0; i < g.n_nodes(); ++i)
            if (g.node_active(i)) {
                std::size_t k = static_cast<std::size_t>(i);
                worst = std::max({worst, sub.v[k] - v.v[k], v.v[k] - super.v[k]});
            }
        return worst;
    };

    const double outer_tol = 1e-10;
    bool below_done = false, above_done = false;
    GridFunction below = sub, above = super;
    for (int k = 0; k < cfg.max_outer && !below_done; ++k) {
        GridFunction next = advance(below);
        double diff = 0.0;
        for (int i = 0; i < g.n_nodes(); ++i)
            if (g.node_active(i)) {
                std::size_t idx = static_cast<std::size_t>(i);
                diff = std::max(diff, std::fabs(next.v[idx] - below.v[idx]));
                out.monotonicity_violation =
                    std::max(out.monotonicity_violation, below.v[idx] - next.v[idx]);
            }
        below = next;
        out.sandwich_violation = std::max(out.sandwich_violation, sandwich(below));
        ++out.outer_iterations;
        below_done = diff < outer_tol;
    }
    for (int k = 0; k < cfg.max_outer && !above_done; ++k) {
        GridFunction next = advance(above);
        double diff = 0.0;
        for (int i = 0; i < g.n_nodes(); ++i)
            if (g.node_active(i)) {
                std::size_t idx = static_cast<std::size_t>(i);
                diff = std::max(diff, std::fabs(next.v[idx] - above.v[idx]));
                out.monotonicity_violation =
                    std::max(out.monotonicity_violation, next.v[idx] - above.v[idx]);
            }
        above = next;
        out.sandwich_violation = std::max(out.sandwich_violation, sandwich(above));
        above_done = diff < outer_tol;
    }

    out.from_below = below;
    out.from_above = above;
    double gap = 0.0;
    for (int i = 0; i < g.n_nodes(); ++i)
        if (g.node_active(i)) {
            std::size_t k = static_cast<std::size_t>(i);
            gap = std::max(gap, std::fabs(below.v[k] - above.v[k]));
        }
    out.gap = gap;
    out.converged = below_done && above_done;
    return out;
}

ComparisonReport check_weak_comparison(const DirichletProblem& p1, const DirichletProblem& p2,
                                       const GridFunction& u1, const GridFunction& u2,
                                       const SolverConfig& cfg) {
    check_problem(p1);
    check_problem(p2);
    if (p1.grid.get() != p2.grid.get())
        throw InvalidInput("check_weak_comparison: problems must share a grid");
    const Grid& g = *p1.grid;

    ComparisonReport rep;
    SolverConfig pre = cfg;
    pre.restarts = 1;
    pre.coercivity_check = false;
    rep.lambda1_positive = principal_eigen(p2.op, p2.V, p2.grid, pre).lambda1 > 0.0;

    rep.rhs_ordered = true;
    rep.boundary_ordered = true;
    double viol = 0.0;
    for (int i = 0; i < g.n_nodes(); ++i) {
        if (!g.node_active(i)) continue;
        std::size_t k = static_cast<std::size_t>(i);
        if (p1.g.v[k] > p2.g.v[k] + 1e-14) rep.rhs_ordered = false;
        if (!g.node_free(i) && p1.boundary.v[k] > p2.boundary.v[k] + 1e-14)
            rep.boundary_ordered = false;
        viol = std::max(viol, u1.v[k] - u2.v[k]);
    }
    rep.violation = std::max(viol, 0.0);
    return rep;
}

MaxPrincipleReport check_maximum_principle(const AOperator& op, const GridFunction& V,
                                           const std::shared_ptr<const Grid>& grid,
                                           const SolverConfig& cfg) {
    MaxPrincipleReport rep;
    EigenResult eig = principal_eigen(op, V, grid, cfg);
    rep.lambda1 = eig.lambda1;
    const Grid& g = *grid;

    if (eig.lambda1 > 0.0) {
        // Nonnegative loads: constants, a centered profile, hats, seeded fields.
        std::vector<GridFunction> loads;
        loads.emplace_back(grid, 1.0, SpaceTag::W1p);
        loads.push_back(GridFunction::from_fn(grid, [&](double x, double y) {
            (void)y;
            return 1.0 + std::sin(3.0 * x) * std::sin(3.0 * x);
        }));
        const std::vector<int>& free = g.free_nodes();
        for (std::size_t frac : {1, 2, 3}) {
            GridFunction hat(grid, SpaceTag::W1p);
            hat.v[static_cast<std::size_t>(free[frac * free.size() / 4])] = 1.0;
            loads.push_back(hat);
        }
        Rng rng(cfg.seed);
        for (int k = 0; k < 5; ++k) {
            Rng s = rng.split(static_cast<std::uint64_t>(k) + 100);
            GridFunction f(grid, SpaceTag::W1p);
            for (double& x : f.v) x = s.uniform();
            loads.push_back(f);
        }

        rep.n_instances = static_cast<int>(loads.size());
        rep.min_solution_value = std::numeric_limits<double>::infinity();
        rep.principle_holds = true;
        SolverConfig inner = cfg;
        inner.coercivity_check = false;
        inner.restarts = 1;
        for (const GridFunction& load : loads) {
            DirichletProblem prob = DirichletProblem::zero_boundary(op, V, load);
            DirichletResult sol = solve_dirichlet(prob, inner);
            double mn = std::numeric_limits<double>::infinity();
            for (int node : g.free_nodes())
                mn = std::min(mn, sol.u.v[static_cast<std::size_t>(node)]);
            rep.min_solution_value = std::min(rep.min_solution_value, mn);
            if (!(mn > 0.0)) rep.principle_holds = false;
        }
        return rep;
    }

    // lambda1 <= 0: w = -v solves the problem with load -lambda1 |v|^{p-2} v
    // >= 0 yet is negative inside, which is the failure witness.
    rep.principle_holds = false;
    rep.witness_found = true;
    rep.witness = eig.eigenfunction;
    for (double& x : rep.witness.v) x = -x;
    double mn = 0.0;
    for (int node : g.free_nodes())
        mn = std::min(mn, rep.witness.v[static_cast<std::size_t>(node)]);
    rep.witness_min = mn;
    rep.witness_residual = eigen_residual(op, V, eig.lambda1, eig.eigenfunction);
    return rep;
}

}  // namespace qcrit
