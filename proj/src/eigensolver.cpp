#include "qcrit/eigensolver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <thread>

#include "qcrit/common.hpp"
#include "qcrit/corpus.hpp"
#include "qcrit/energy.hpp"
#include "qcrit/morrey.hpp"
#include "qcrit/parallel.hpp"
#include "qcrit/rng.hpp"
#include "solver_core.hpp"

namespace qcrit {
namespace {

using detail::FreeMap;
using detail::SobolevPrecond;

constexpr double kArmijo = 1e-4;
constexpr std::uint64_t kCorpusSeed = 7;

struct RunOutcome {
    double quotient = std::numeric_limits<double>::infinity();
    std::vector<double> u;
    std::vector<double> trace;
    int iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
};

double weighted_lp(const Grid& g, const std::vector<double>& u, double p,
                   const std::vector<double>* w) {
    return lp_mass(g, u, p, w);
}

// Scale u to ||u||_p = 1 in the (possibly weighted) lumped norm.
bool normalize(const Grid& g, std::vector<double>& u, double p, const std::vector<double>* w) {
    double np = weighted_lp(g, u, p, w);
    if (!(np > 0.0) || !std::isfinite(np)) return false;
    double s = std::pow(np, -1.0 / p);
    for (double& x : u) x *= s;
    return true;
}

std::vector<double> sphere_gradient(const Grid& g, const FreeMap& fm,
                                    const std::vector<double>& grad,
                                    const std::vector<double>& u, double p, double quotient,
                                    const std::vector<double>* w) {
    std::vector<double> sg(grad);
    for (int node : fm.nodes) {
        std::size_t i = static_cast<std::size_t>(node);
        double wi = w ? (*w)[i] : 1.0;
        sg[i] -= quotient * p * g.mass(node) * wi * signed_pow(u[i], p - 1.0);
    }
    return sg;
}

// One seeded minimization over all smoothing stages.
RunOutcome single_run(const AOperator& op, const GridFunction& D,
                      const std::shared_ptr<const Grid>& grid, const FreeMap& fm,
                      const SobolevPrecond& P, const std::vector<double>* w,
                      const std::vector<double>& bdist, const SolverConfig& cfg,
                      std::uint64_t stream) {
    const Grid& g = *grid;
    const double p = op.p();
    RunOutcome out;

    // For p away from 2 the energy Hessian carries a |grad u|^(p-2) weight
    // that the plain Sobolev operator cannot see; one flat cell then caps
    // the stable step for the whole grid. Refreshing the preconditioner
    // with lagged weights keeps the preconditioned curvature order one.
    std::unique_ptr<SobolevPrecond> Pw;
    const SobolevPrecond* Pdir = &P;

    GridFunction u(grid, SpaceTag::W1p0);
    Rng rng = Rng(cfg.seed).split(stream);
    for (int node : fm.nodes)
        u.v[static_cast<std::size_t>(node)] =
            (0.5 + rng.uniform()) * (bdist[static_cast<std::size_t>(node)] + g.h());
    {
        // Raw node noise carries O(1/h) gradients that make the degenerate
        // energies (p near 1) kinked at every cell; one Sobolev smoothing of
        // the seed keeps the restart diversity while taming the start.
        std::vector<double> mw(u.v.size(), 0.0);
        for (int node : fm.nodes) {
            std::size_t i = static_cast<std::size_t>(node);
            mw[i] = g.mass(node) * u.v[i];
        }
        std::vector<double> smooth = P.apply(mw);
        if (normalize(g, smooth, p, w)) u.v = smooth;
    }
    if (!normalize(g, u.v, p, w)) return out;

    auto refresh_precond = [&](double eps_w) {
        if (p == 2.0) return;  // weights are identically one
        Pw = std::make_unique<SobolevPrecond>(g, fm, [&](const Simplex& s) {
            Vec gu = simplex_gradient(s, u.v);
            double wt = std::pow(dot(gu, gu) + eps_w * eps_w, 0.5 * p - 1.0);
            return std::clamp(wt, 1e-12, 1e12);
        });
        Pdir = Pw.get();
    };

    double eps0 = g.h();
    for_each_active_simplex(g, [&](const Simplex& s) {
        Vec gu = simplex_gradient(s, u.v);
        eps0 = std::max(eps0, std::sqrt(dot(gu, gu)));
    });
    std::vector<double> stages = detail::eps_schedule(p, eps0, cfg.eps_min);
    bool flipped = false;
    double step = 1.0;

    double quotient = energy(op, D, u).total / weighted_lp(g, u.v, p, w);
    out.trace.push_back(quotient);

    for (std::size_t stage = 0; stage < stages.size(); ++stage) {
        const double eps = stages[stage];
        const bool final_stage = stage + 1 == stages.size();
        std::vector<double> hist;
        double smoothed = smoothed_energy(op, D, u, eps) / weighted_lp(g, u.v, p, w);
        // The opening stage starts from noise, where lagged weights would
        // only encode that noise; from the second stage on the previous
        // minimizer is a sound curvature source.
        if (stage > 0) refresh_precond(std::max(eps, cfg.eps_min));

        bool descent_done = false;
        while (!descent_done && out.iterations < cfg.max_iters) {
            std::vector<double> grad = energy_gradient(op, D, u, eps);
            std::vector<double> sg = sphere_gradient(g, fm, grad, u.v, p, smoothed, w);
            std::vector<double> dir = Pdir->apply(sg);
            double slope = 0.0;
            for (int node : fm.nodes) {
                std::size_t i = static_cast<std::size_t>(node);
                slope -= sg[i] * dir[i];
            }

            bool accepted = false;
            double t = std::min(1.0, 2.0 * step);
            GridFunction trial(grid, SpaceTag::W1p0);
            GridFunction probe(grid, SpaceTag::W1p0);
            auto eval_at = [&](double tt, GridFunction& dst) {
                dst.v = u.v;
                for (int node : fm.nodes) {
                    std::size_t i = static_cast<std::size_t>(node);
                    dst.v[i] -= tt * dir[i];
                }
                if (!normalize(g, dst.v, p, w))
                    return std::numeric_limits<double>::infinity();
                return smoothed_energy(op, D, dst, eps) / weighted_lp(g, dst.v, p, w);
            };
            for (int bt = 0; bt < 50 && !accepted; ++bt, t *= 0.5) {
                double st = eval_at(t, trial);
                if (st <= smoothed + kArmijo * t * slope) {
                    // The first step passing the sufficient-decrease test can
                    // still sit at the stability edge of the stiffest modes,
                    // which then barely contract. Halve while that pays off.
                    for (int extra = 0; extra < 50; ++extra) {
                        double st2 = eval_at(0.5 * t, probe);
                        if (!(st2 < st)) break;
                        t *= 0.5;
                        st = st2;
                        trial.v.swap(probe.v);
                    }
                    u.v.swap(trial.v);
                    smoothed = st;
                    step = t;
                    accepted = true;
                }
            }
            ++out.iterations;

            quotient = energy(op, D, u).total / weighted_lp(g, u.v, p, w);
            out.trace.push_back(quotient);
            hist.push_back(smoothed);

            bool stalled = !accepted;
            if (!stalled && static_cast<int>(hist.size()) > cfg.stall_iters) {
                double before = hist[hist.size() - 1 - static_cast<std::size_t>(cfg.stall_iters)];
                stalled = before - smoothed <= cfg.stall_rel * (1.0 + std::fabs(smoothed));
            }
            if (!stalled) continue;

            if (!final_stage) break;

            if (!flipped) {
                // Sign cannot lower the quotient of the limit: restart the
                // polish from |u| so the reported minimizer is nonnegative.
                for (double& x : u.v) x = std::fabs(x);
                normalize(g, u.v, p, w);
                smoothed = smoothed_energy(op, D, u, eps) / weighted_lp(g, u.v, p, w);
                flipped = true;
                hist.clear();
                step = 1.0;
                continue;
            }
            descent_done = true;
        }
        if (!final_stage) continue;

        // Near the minimizer the quotient differences drop below rounding
        // and the line search goes blind, yet the fixed-point map keeps
        // contracting. Iterate at the last accepted step and steer by the
        // optimality residual, which stays measurable all the way down.
        auto residual_of = [&](const GridFunction& x, double lam, double np) {
            std::vector<double> r =
                sphere_gradient(g, fm, energy_gradient(op, D, x, 0.0), x.v, p, lam, w);
            return P.dual_norm(r) / std::pow(np, (p - 1.0) / p);
        };
        double np = weighted_lp(g, u.v, p, w);
        double lam = energy(op, D, u).total / np;
        double rnorm = residual_of(u, lam, np);
        refresh_precond(0.0);
        const double t_nat = 1.0 / (p * std::max(1.0, p - 1.0));
        double t = p == 2.0 ? std::max(step, 1.0 / 1024.0) : t_nat;
        GridFunction best(grid, SpaceTag::W1p0);
        best.v = u.v;
        double best_rnorm = rnorm;
        double best_lam = lam;
        int since_gain = 0;
        int gains_in_row = 0;
        int since_refresh = 0;
        while (out.iterations < cfg.max_iters) {
            if (rnorm <= cfg.tol * (1.0 + std::fabs(lam))) break;
            if (p != 2.0 && ++since_refresh >= 10) {
                refresh_precond(0.0);
                since_refresh = 0;
                t = t_nat;
            }
            std::vector<double> sg =
                sphere_gradient(g, fm, energy_gradient(op, D, u, 0.0), u.v, p, lam, w);
            std::vector<double> dir = Pdir->apply(sg);
            for (int node : fm.nodes) {
                std::size_t i = static_cast<std::size_t>(node);
                u.v[i] -= t * dir[i];
            }
            ++out.iterations;
            if (!normalize(g, u.v, p, w)) {
                u.v = best.v;
                t *= 0.5;
                continue;
            }
            np = weighted_lp(g, u.v, p, w);
            lam = energy(op, D, u).total / np;
            out.trace.push_back(lam);
            rnorm = residual_of(u, lam, np);
            if (rnorm < 0.98 * best_rnorm) {
                best.v = u.v;
                best_rnorm = rnorm;
                best_lam = lam;
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
                    lam = best_lam;
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
            best_lam = lam;
        }
        out.u = best.v;
        out.quotient = best_lam;
        out.residual = best_rnorm;
        out.converged = best_rnorm <= cfg.tol * (1.0 + std::fabs(best_lam));
        return out;
    }
    double np = weighted_lp(g, u.v, p, w);
    out.quotient = energy(op, D, u).total / np;
    out.u = u.v;
    return out;
}

void run_restarts(int n, const std::function<void(int)>& fn) {
    int workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (int r = 0; r < n; ++r) fn(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&]() {
            for (int r = next.fetch_add(1); r < n; r = next.fetch_add(1)) fn(r);
        });
    for (auto& th : pool) th.join();
}

EigenResult solve_impl(const AOperator& op, const GridFunction& V,
                       const std::shared_ptr<const Grid>& grid, const SolverConfig& cfg,
                       const std::vector<double>* w) {
    if (!grid || V.grid.get() != grid.get())
        throw InvalidInput("principal_eigen: V must live on the solve grid");
    if (op.dim() != grid->dim())
        throw InvalidInput("principal_eigen: operator dimension does not match the grid");
    if (op.coefficient_cells() > 0 && op.coefficient_cells() != grid->n_cells())
        throw InvalidInput("principal_eigen: coefficient table does not match the grid");
    FreeMap fm(*grid);
    SobolevPrecond P(*grid, fm);
    if (w) {
        bool seen = false;
        for (int node : fm.nodes) {
            double wi = (*w)[static_cast<std::size_t>(node)];
            if (wi < 0.0) throw InvalidInput("principal_eigen: denominator weights must be >= 0");
            seen = seen || (wi > 0.0 && grid->mass(node) > 0.0);
        }
        if (!seen) throw InvalidInput("principal_eigen: denominator weights vanish on free nodes");
    }

    // Centering the potential at a reference node makes the iteration
    // arithmetic independent of constant shifts of V; the shift re-enters
    // only through the single addition at the end.
    double mu = 0.0;
    GridFunction D = V;
    if (!w) {
        mu = V.v[static_cast<std::size_t>(fm.nodes.front())];
        for (double& x : D.v) x -= mu;
    }

    std::vector<double> bdist = grid->boundary_distance();
    int restarts = std::max(1, cfg.restarts);
    std::vector<RunOutcome> runs(static_cast<std::size_t>(restarts));
    run_restarts(restarts, [&](int r) {
        runs[static_cast<std::size_t>(r)] =
            single_run(op, D, grid, fm, P, w, bdist, cfg, static_cast<std::uint64_t>(r));
    });

    int best = -1;
    for (int r = 0; r < restarts; ++r) {
        if (!runs[static_cast<std::size_t>(r)].converged) continue;
        if (best < 0 || runs[static_cast<std::size_t>(r)].quotient <
                            runs[static_cast<std::size_t>(best)].quotient)
            best = r;
    }
    if (best < 0) {
        int longest = 0;
        for (int r = 1; r < restarts; ++r)
            if (runs[static_cast<std::size_t>(r)].trace.size() >
                runs[static_cast<std::size_t>(longest)].trace.size())
                longest = r;
        throw SolveError("principal_eigen: no restart converged within max_iters",
                         runs[static_cast<std::size_t>(longest)].trace);
    }

    const RunOutcome& win = runs[static_cast<std::size_t>(best)];
    EigenResult res;
    res.lambda1 = win.quotient + mu;
    res.eigenfunction = GridFunction(grid, SpaceTag::W1p0);
    res.eigenfunction.v = win.u;
    res.residual = win.residual;
    res.iterations = win.iterations;
    res.trace = win.trace;
    for (double& t : res.trace) t += mu;
    res.converged = true;

    double margin = std::numeric_limits<double>::infinity();
    for (int node : fm.nodes)
        margin = std::min(margin, win.u[static_cast<std::size_t>(node)]);
    res.positivity_margin = margin;

    double gap = 0.0;
    for (int a = 0; a < restarts; ++a)
        for (int b = a + 1; b < restarts; ++b) {
            const RunOutcome& ra = runs[static_cast<std::size_t>(a)];
            const RunOutcome& rb = runs[static_cast<std::size_t>(b)];
            if (!ra.converged || !rb.converged) continue;
            double d = 0.0;
            for (std::size_t i = 0; i < ra.u.size(); ++i)
                d = std::max(d, std::fabs(ra.u[i] - rb.u[i]));
            gap = std::max(gap, d);
        }
    res.simplicity_gap = gap;
    return res;
}

}  // namespace

EigenResult principal_eigen(const AOperator& op, const GridFunction& V,
                            const std::shared_ptr<const Grid>& grid, const SolverConfig& cfg) {
    return solve_impl(op, V, grid, cfg, nullptr);
}

EigenResult principal_eigen_weighted(const AOperator& op, const GridFunction& V,
                                     const std::shared_ptr<const Grid>& grid,
                                     const SolverConfig& cfg,
                                     const std::vector<double>* denom_weights) {
    return solve_impl(op, V, grid, cfg, denom_weights);
}

double eigen_residual(const AOperator& op, const GridFunction& V, double lambda,
                      const GridFunction& u) {
    if (!u.grid || V.grid.get() != u.grid.get())
        throw InvalidInput("eigen_residual: V and u must share a grid");
    const Grid& g = *u.grid;
    double np = lp_mass(g, u.v, op.p());
    if (!(np > 0.0)) throw InvalidInput("eigen_residual: requires ||u||_p > 0");
    GridFunction Vs = V;
    for (double& x : Vs.v) x -= lambda;
    std::vector<double> grad = energy_gradient(op, Vs, u, 0.0);
    FreeMap fm(g);
    SobolevPrecond P(g, fm);
    return P.dual_norm(grad) / std::pow(np, (op.p() - 1.0) / op.p());
}

LowerBoundReport lambda1_lower_bound(const AOperator& op, const GridFunction& V, double p,
                                     double q) {
    if (!V.grid) throw InvalidInput("lambda1_lower_bound: V has no grid");
    const Grid& g = *V.grid;
    int n = g.dim();
    if (!(p * q > n)) throw InvalidInput("lambda1_lower_bound: requires pq > n");
    if (std::fabs(p - op.p()) > 1e-12)
        throw InvalidInput("lambda1_lower_bound: p must match the operator");

    LowerBoundReport rep;
    rep.delta = op.alpha();
    rep.morrey = morrey_norm(V, p, p > n ? 1.0 : q).value;
    if (rep.morrey <= 0.0) return rep;

    std::vector<double> absV(V.v.size());
    for (std::size_t i = 0; i < V.v.size(); ++i) absV[i] = std::fabs(V.v[i]);
    double s = n / (p * q - n);
    double sigma = p * q / (p * q - n);
    double scale = std::pow(rep.delta, s) / std::pow(rep.morrey, sigma);
    double c_best = 0.0;
    for_each_corpus_member(V.grid, kCorpusSeed,
                           [&](int, const std::string&, const GridFunction& u) {
                               double up = lp_mass(g, u.v, p);
                               if (!(up > 0.0)) return;
                               double lhs = lp_mass(g, u.v, p, &absV);
                               double rhs = rep.delta * euclidean_grad_p(g, u.v, p);
                               if (lhs > rhs) c_best = std::max(c_best, (lhs - rhs) * scale / up);
                           });
    rep.c_emp = c_best;
    rep.bound = -c_best * std::pow(rep.delta, -s) * std::pow(rep.morrey, sigma);
    return rep;
}

SimplicityReport check_simplicity(const AOperator& op, const GridFunction& V,
                                  const std::shared_ptr<const Grid>& grid,
                                  const SolverConfig& cfg) {
    SolverConfig c = cfg;
    c.restarts = std::max(3, cfg.restarts);
    SimplicityReport rep;
    rep.base = principal_eigen(op, V, grid, c);
    rep.gap = rep.base.simplicity_gap;

    double d = 1e-3 * (1.0 + std::fabs(rep.base.lambda1));
    GridFunction shifted = V;
    for (double& x : shifted.v) x -= rep.base.lambda1 + d;
    EigenResult r2 = principal_eigen(op, shifted, grid, c);
    rep.shift_consistency = std::fabs(r2.lambda1 + d);
    return rep;
}

}  // namespace qcrit
