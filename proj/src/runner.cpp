#include "qcrit/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <vector>

#include "qcrit/common.hpp"
#include "qcrit/config.hpp"
#include "qcrit/corpus.hpp"
#include "qcrit/criticality.hpp"
#include "qcrit/dirichlet.hpp"
#include "qcrit/eigensolver.hpp"
#include "qcrit/energy.hpp"
#include "qcrit/expr.hpp"
#include "qcrit/grid.hpp"
#include "qcrit/identities.hpp"
#include "qcrit/morrey.hpp"
#include "qcrit/operator_family.hpp"
#include "qcrit/parallel.hpp"
#include "qcrit/report.hpp"

namespace qcrit {
namespace {

struct ActiveBox {
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
};

ActiveBox active_box(const Grid& g) {
    ActiveBox b;
    b.x0 = b.y0 = std::numeric_limits<double>::infinity();
    b.x1 = b.y1 = -b.x0;
    for (int c = 0; c < g.n_cells(); ++c) {
        if (!g.cell_active(c)) continue;
        double cx, cy;
        g.cell_center(c, cx, cy);
        b.x0 = std::min(b.x0, cx);
        b.x1 = std::max(b.x1, cx);
        b.y0 = std::min(b.y0, cy);
        b.y1 = std::max(b.y1, cy);
    }
    if (!(b.x0 <= b.x1)) throw InvalidInput("domain: no active cells");
    b.x0 -= 0.5 * g.hx();
    b.x1 += 0.5 * g.hx();
    if (g.dim() == 2) {
        b.y0 -= 0.5 * g.hy();
        b.y1 += 0.5 * g.hy();
    } else {
        b.y0 = b.y1 = 0.0;
    }
    return b;
}

int checked_resolution(long long n, const std::string& field) {
    if (n < 3 || n > 4096)
        throw InvalidInput("domain: " + field + " = " + std::to_string(n) +
                           " outside the supported range [3, 4096]");
    return static_cast<int>(n);
}

std::shared_ptr<const Grid> build_grid(const Config& cfg, const RunOptions& opts) {
    long long dim = cfg.integer("domain", "dim", 1);
    if (dim != 1 && dim != 2) throw InvalidInput("domain: dim must be 1 or 2");

    long long n =
        opts.resolution ? *opts.resolution : cfg.integer("domain", "n", dim == 1 ? 1001 : 65);
    int nx = checked_resolution(n, "n");
    double x0 = cfg.number("domain", "x0", 0.0), x1 = cfg.number("domain", "x1", 1.0);
    if (!(x1 > x0)) throw InvalidInput("domain: requires x1 > x0");

    std::shared_ptr<Grid> g;
    if (dim == 1) {
        g = Grid::interval(x0, x1, nx);
    } else {
        int ny = checked_resolution(cfg.integer("domain", "ny", n), "ny");
        double y0 = cfg.number("domain", "y0", 0.0), y1 = cfg.number("domain", "y1", 1.0);
        if (!(y1 > y0)) throw InvalidInput("domain: requires y1 > y0");
        g = Grid::rectangle(x0, x1, y0, y1, nx, ny);
    }

    std::string shape = cfg.get("domain", "shape", "box");
    if (shape == "disc") {
        double cx = 0.5 * (x0 + x1);
        double cy = dim == 2 ? 0.5 * (cfg.number("domain", "y0", 0.0) +
                                      cfg.number("domain", "y1", 1.0))
                             : 0.0;
        double rdef = 0.5 * (x1 - x0);
        if (dim == 2)
            rdef = std::min(rdef, 0.5 * (cfg.number("domain", "y1", 1.0) -
                                         cfg.number("domain", "y0", 0.0)));
        double r = cfg.number("domain", "radius", rdef);
        if (!(r > 0.0)) throw InvalidInput("domain: radius must be positive");
        g->set_active([cx, cy, r](double px, double py) {
            double dx = px - cx, dy = py - cy;
            return dx * dx + dy * dy < r * r;
        });
    } else if (shape != "box") {
        throw InvalidInput("domain: unknown shape '" + shape + "' (expected box or disc)");
    }
    return g;
}

std::vector<std::vector<double>> load_cells_csv(const std::string& path, int cols, int n_cells,
                                                const std::string& field) {
    std::ifstream in(path);
    if (!in) throw InvalidInput(field + ": cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (row.empty()) continue;
        if (static_cast<int>(row.size()) != cols)
            throw InvalidInput(field + ": '" + path + "' line " + std::to_string(lineno) +
                               ": expected " + std::to_string(cols) + " values");
        rows.push_back(std::move(row));
    }
    if (static_cast<int>(rows.size()) != n_cells)
        throw InvalidInput(field + ": '" + path + "' has " + std::to_string(rows.size()) +
                           " rows, grid has " + std::to_string(n_cells) + " cells");
    return rows;
}

AOperator build_operator(const Config& cfg, const RunOptions& opts, const Grid& g) {
    double p = opts.p ? *opts.p : cfg.number("operator", "p", 2.0);
    if (!(p > 1.0)) throw InvalidInput("operator: p must exceed 1");
    std::string kind = cfg.get("operator", "kind", "p");
    int dim = g.dim();

    if (kind == "p") return AOperator::p_laplacian(p, dim);

    if (kind == "matrix") {
        if (cfg.has("operator", "matrix_csv")) {
            int cols = dim == 1 ? 1 : 3;
            auto rows = load_cells_csv(cfg.get("operator", "matrix_csv", ""), cols, g.n_cells(),
                                       "operator matrix_csv");
            std::vector<SymMat> mats(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                mats[i].a11 = rows[i][0];
                if (cols == 3) {
                    mats[i].a12 = rows[i][1];
                    mats[i].a22 = rows[i][2];
                }
            }
            return AOperator::pa_laplacian(p, dim, std::move(mats));
        }
        SymMat m;
        m.a11 = cfg.number("operator", "a11", 1.0);
        m.a12 = cfg.number("operator", "a12", 0.0);
        m.a22 = cfg.number("operator", "a22", 1.0);
        return AOperator::pa_laplacian(p, dim, m);
    }

    if (kind == "pseudo") {
        if (cfg.has("operator", "weights_csv")) {
            auto rows = load_cells_csv(cfg.get("operator", "weights_csv", ""), dim, g.n_cells(),
                                       "operator weights_csv");
            std::vector<Vec> w(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                w[i] = Vec(rows[i][0], dim);
                if (dim == 2) w[i][1] = rows[i][1];
            }
            return AOperator::pseudo_p_laplacian(p, dim, std::move(w));
        }
        Vec w(cfg.number("operator", "w1", 1.0), dim);
        if (dim == 2) w[1] = cfg.number("operator", "w2", 1.0);
        return AOperator::pseudo_p_laplacian(p, dim, w);
    }

    if (kind == "mix") {
        double t = cfg.number("operator", "t", 0.5);
        Vec w(cfg.number("operator", "w1", 1.0), dim);
        if (dim == 2) w[1] = cfg.number("operator", "w2", 1.0);
        SymMat m;
        m.a11 = cfg.number("operator", "a11", 1.0);
        m.a12 = cfg.number("operator", "a12", 0.0);
        m.a22 = cfg.number("operator", "a22", 1.0);
        return AOperator::convex_combination(p, dim, t, w, m);
    }

    throw InvalidInput("operator: unknown kind '" + kind +
                       "' (expected p, matrix, pseudo, or mix)");
}

/// Resolves a field spec: CLI override, then [section] key, then fallback.
/// A leading '@' loads a GridFunction CSV; anything else parses as an
/// expression over (x, y) and must evaluate finite on active nodes.
GridFunction build_field(const std::optional<std::string>& cli, const Config& cfg,
                         const std::string& section, const std::string& key,
                         const std::string& fallback,
                         const std::shared_ptr<const Grid>& grid, SpaceTag tag) {
    std::string spec = cli ? *cli : cfg.get(section, key, fallback);
    const std::string field = section + " " + key;
    if (!spec.empty() && spec.front() == '@') {
        try {
            return load_csv(grid, spec.substr(1), tag);
        } catch (const InvalidInput& e) {
            throw InvalidInput(field + ": " + e.what());
        }
    }
    Expr ex;
    try {
        ex = Expr::parse(spec);
    } catch (const InvalidInput& e) {
        throw InvalidInput(field + ": " + e.what());
    }
    GridFunction f = GridFunction::from_fn(
        grid, [&](double x, double y) { return ex.eval(x, y); }, tag);
    for (int i = 0; i < grid->n_nodes(); ++i)
        if (grid->node_active(i) && !std::isfinite(f.v[static_cast<std::size_t>(i)]))
            throw InvalidInput(field + ": expression '" + spec +
                               "' is not finite at x = " + format_sci(grid->node_x(i)) +
                               (grid->dim() == 2 ? ", y = " + format_sci(grid->node_y(i)) : ""));
    return f;
}

SolverConfig build_solver(const Config& cfg, const RunOptions& opts) {
    SolverConfig s;
    s.tol = opts.tol ? *opts.tol : cfg.number("solver", "tol", s.tol);
    s.max_iters = opts.max_iters ? *opts.max_iters
                                 : static_cast<int>(cfg.integer("solver", "max_iters", s.max_iters));
    s.restarts =
        opts.restarts ? *opts.restarts : static_cast<int>(cfg.integer("solver", "restarts", s.restarts));
    s.eps_min = opts.eps_min ? *opts.eps_min : cfg.number("solver", "eps_min", s.eps_min);
    s.seed = opts.seed ? *opts.seed
                       : static_cast<std::uint64_t>(cfg.integer("solver", "seed", 1));
    s.coercivity_check = cfg.integer("solver", "coercivity_check", 1) != 0;
    if (!(s.tol > 0.0)) throw InvalidInput("solver: tol must be positive");
    if (s.max_iters < 1) throw InvalidInput("solver: max_iters must be positive");
    if (s.restarts < 1) throw InvalidInput("solver: restarts must be positive");
    return s;
}

struct Context {
    Config cfg;
    std::shared_ptr<const Grid> grid;
    SolverConfig solver;
    std::string report_path, trace_path, field_path;
};

void envelope(JsonWriter& w, const std::string& command, const Context& ctx,
              const AOperator& op) {
    const Grid& g = *ctx.grid;
    w.obj_open();
    w.key("schema").str(kReportSchema);
    w.key("command").str(command);
    w.key("config").obj_open();
    w.key("path").str(ctx.cfg.origin());
    w.key("hash").str(hex64(ctx.cfg.content_hash()));
    w.obj_close();
    w.key("seed").u64(ctx.solver.seed);
    w.key("grid").obj_open();
    w.key("dim").integer(g.dim());
    w.key("nx").integer(g.nx());
    w.key("ny").integer(g.ny());
    w.key("h").num(g.h());
    w.key("volume").num(g.total_volume());
    w.key("diameter").num(g.active_diameter());
    w.obj_close();
    w.key("operator").obj_open();
    w.key("kind").str(kind_name(op.kind()));
    w.key("p").num(op.p());
    w.obj_close();
    w.key("solver").obj_open();
    w.key("tol").num(ctx.solver.tol);
    w.key("eps_min").num(ctx.solver.eps_min);
    w.key("max_iters").integer(ctx.solver.max_iters);
    w.key("restarts").integer(ctx.solver.restarts);
    w.obj_close();
    w.key("result");
}

void finish(JsonWriter& w, const Context& ctx) {
    w.obj_close();
    write_text_file(ctx.report_path, w.take());
}

std::vector<std::vector<double>> indexed_rows(const std::vector<double>& values) {
    std::vector<std::vector<double>> rows;
    rows.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        rows.push_back({static_cast<double>(i), values[i]});
    return rows;
}

int run_eig(const Context& ctx, const AOperator& op, const RunOptions& opts) {
    GridFunction V =
        build_field(opts.potential, ctx.cfg, "potential", "expr", "0", ctx.grid, SpaceTag::W1p);
    EigenResult res = principal_eigen(op, V, ctx.grid, ctx.solver);

    JsonWriter w;
    envelope(w, "eig", ctx, op);
    w.obj_open();
    w.key("lambda1").num(res.lambda1);
    w.key("residual").num(res.residual);
    w.key("iterations").integer(res.iterations);
    w.key("converged").boolean(res.converged);
    w.key("positivity_margin").num(res.positivity_margin);
    w.key("simplicity_gap").num(res.simplicity_gap);
    w.obj_close();
    finish(w, ctx);

    if (!ctx.trace_path.empty())
        write_csv(ctx.trace_path, {"iteration", "quotient"}, indexed_rows(res.trace));
    if (!ctx.field_path.empty()) save_csv(res.eigenfunction, ctx.field_path);
    std::cout << "lambda1 = " << format_sci(res.lambda1) << " (" << res.iterations
              << " iterations)\n";
    return 0;
}

int run_dirichlet(const Context& ctx, const AOperator& op, const RunOptions& opts) {
    GridFunction V =
        build_field(opts.potential, ctx.cfg, "potential", "expr", "0", ctx.grid, SpaceTag::W1p);
    GridFunction g = build_field(opts.rhs, ctx.cfg, "run", "rhs", "1", ctx.grid, SpaceTag::W1p);
    GridFunction bdry =
        build_field(opts.boundary, ctx.cfg, "run", "boundary", "0", ctx.grid, SpaceTag::W1p);

    DirichletProblem prob{op, V, g, bdry, ctx.grid};
    DirichletResult res = solve_dirichlet(prob, ctx.solver);

    JsonWriter w;
    envelope(w, "dirichlet", ctx, op);
    w.obj_open();
    w.key("j_value").num(res.j_value);
    w.key("residual").num(res.residual);
    w.key("iterations").integer(res.iterations);
    w.key("converged").boolean(res.converged);
    w.key("lambda1_known").boolean(res.lambda1_known);
    w.key("lambda1").num(res.lambda1);
    w.obj_close();
    finish(w, ctx);

    if (!ctx.trace_path.empty())
        write_csv(ctx.trace_path, {"iteration", "j"}, indexed_rows(res.trace));
    if (!ctx.field_path.empty()) save_csv(res.u, ctx.field_path);
    std::cout << "J = " << format_sci(res.j_value) << " (" << res.iterations << " iterations)\n";
    return 0;
}

int run_picone(const Context& ctx, const AOperator& op, const RunOptions& opts) {
    const Grid& g = *ctx.grid;
    GridFunction V =
        build_field(opts.potential, ctx.cfg, "potential", "expr", "0", ctx.grid, SpaceTag::W1p);
    EigenResult eig = principal_eigen(op, V, ctx.grid, ctx.solver);

    // The eigenfunction solves the lambda1-shifted problem, so that shifted
    // potential is the one whose energy matches the integral of L.
    GridFunction Vs = V;
    for (double& x : Vs.v) x -= eig.lambda1;

    double max_gap = 0.0, min_l = std::numeric_limits<double>::infinity();
    double max_fgap = 0.0;
    int used = 0;
    for_each_corpus_member(ctx.grid, ctx.solver.seed,
                           [&](int, const std::string&, const GridFunction& raw) {
                               GridFunction u = raw;
                               for (double& x : u.v) x = std::fabs(x);
                               PiconeReport rep = picone_check(op, u, eig.eigenfunction, &Vs);
                               if (rep.cells_used == 0) return;
                               max_gap = std::max(max_gap, rep.max_lr_gap);
                               min_l = std::min(min_l, rep.min_l);
                               max_fgap = std::max(max_fgap, rep.functional_gap);
                               ++used;
                           });
    if (used == 0) min_l = 0.0;

    JsonWriter w;
    envelope(w, "picone", ctx, op);
    w.obj_open();
    w.key("lambda1").num(eig.lambda1);
    w.key("corpus_members").integer(used);
    w.key("max_pointwise_gap").num(max_gap);
    w.key("min_integrand").num(min_l);
    w.key("max_functional_gap").num(max_fgap);
    w.key("corpus_fingerprint").str(hex64(corpus_hash(g, ctx.solver.seed)));
    w.obj_close();
    finish(w, ctx);
    std::cout << "picone: max |L - R| = " << format_sci(max_gap)
              << ", min L = " << format_sci(min_l) << "\n";
    return 0;
}

int run_aap(const Context& ctx, const AOperator& op, const RunOptions& opts) {
    const Grid& g = *ctx.grid;
    const double p = op.p();
    GridFunction V =
        build_field(opts.potential, ctx.cfg, "potential", "expr", "0", ctx.grid, SpaceTag::W1p);
    EigenResult eig = principal_eigen(op, V, ctx.grid, ctx.solver);

    bool field_built = false;
    double field_residual = 0.0, min_q = std::numeric_limits<double>::infinity();
    double min_young = 0.0, max_holder = 0.0;
    int witness = -1;

    if (eig.lambda1 > 0.0) {
        // A positive solution that does not vanish on the boundary: minimize
        // the plain energy over fields pinned to one on the boundary.
        GridFunction one(ctx.grid, 1.0);
        GridFunction zero(ctx.grid, 0.0);
        DirichletProblem prob{op, V, zero, one, ctx.grid};
        DirichletResult pos = solve_dirichlet(prob, ctx.solver);
        FirstOrderField field = field_from_solution(op, V, pos.u);
        NonnegativityReport nn = nonnegativity_from_field(op, field, V, ctx.solver.seed);
        field_built = true;
        field_residual = field.residual;
        min_q = nn.min_q;
        min_young = nn.min_young_slack;
        max_holder = nn.max_holder_violation;
        witness = nn.witness_index;
    } else {
        for_each_corpus_member(ctx.grid, ctx.solver.seed,
                               [&](int idx, const std::string&, const GridFunction& raw) {
                                   double np = lp_mass(g, raw.v, p);
                                   if (!(np > 0.0)) return;
                                   GridFunction phi = raw;
                                   double sc = std::pow(np, -1.0 / p);
                                   for (double& x : phi.v) x *= sc;
                                   double qv = energy(op, V, phi).total;
                                   if (qv < min_q) {
                                       min_q = qv;
                                       witness = idx;
                                   }
                               });
    }

    JsonWriter w;
    envelope(w, "aap-check", ctx, op);
    w.obj_open();
    w.key("lambda1").num(eig.lambda1);
    w.key("nonnegative").boolean(eig.lambda1 >= 0.0);
    w.key("min_corpus_q").num(min_q);
    w.key("witness_index").integer(witness);
    w.key("field_built").boolean(field_built);
    if (field_built) {
        w.key("field_residual").num(field_residual);
        w.key("min_young_slack").num(min_young);
        w.key("max_holder_violation").num(max_holder);
    }
    w.key("corpus_fingerprint").str(hex64(corpus_hash(g, ctx.solver.seed)));
    w.obj_close();
    finish(w, ctx);
    std::cout << "aap-check: lambda1 = " << format_sci(eig.lambda1)
              << ", min corpus Q = " << format_sci(min_q) << "\n";
    return 0;
}

int run_classify(const Context& ctx, const AOperator& op, const RunOptions& opts) {
    GridFunction V =
        build_field(opts.potential, ctx.cfg, "potential", "expr", "0", ctx.grid, SpaceTag::W1p);
    int levels = opts.levels ? *opts.levels
                             : static_cast<int>(ctx.cfg.integer("run", "levels", 4));
    double tol_crit = ctx.cfg.number("run", "tol_crit", -1.0);
    CriticalityReport rep = classify(op, V, ctx.grid, levels, ctx.solver, tol_crit);

    JsonWriter w;
    envelope(w, "classify", ctx, op);
    w.obj_open();
    w.key("classification").str(classification_name(rep.classification));
    w.key("tol_crit").num(rep.tol_crit);
    w.key("lambda1_full").num(rep.lambda1_full);
    w.key("lambda1_trace").arr_open();
    for (double v : rep.lambda1_trace) w.num(v);
    w.arr_close();
    if (rep.hardy) {
        w.key("hardy").obj_open();
        w.key("multiplier").num(rep.hardy->multiplier);
        w.key("min_slack").num(rep.hardy->min_slack);
        w.key("patch_constants").arr_open();
        for (double v : rep.hardy->patch_constants) w.num(v);
        w.arr_close();
        w.obj_close();
    }
    if (rep.witness) w.key("witness_energy").num(rep.witness_energy);
    if (rep.null_sequence) {
        w.key("null_sequence").obj_open();
        w.key("ts").arr_open();
        for (double v : rep.null_sequence->ts) w.num(v);
        w.arr_close();
        w.key("energies").arr_open();
        for (double v : rep.null_sequence->energies) w.num(v);
        w.arr_close();
        w.key("anchor_norms").arr_open();
        for (double v : rep.null_sequence->anchor_norms) w.num(v);
        w.arr_close();
        w.obj_close();
    }
    w.key("capacity_values").arr_open();
    for (auto& rv : rep.capacity_values) {
        w.arr_open();
        w.num(rv.first);
        w.num(rv.second);
        w.arr_close();
    }
    w.arr_close();
    if (!rep.diagnostics.empty()) w.key("diagnostics").str(rep.diagnostics);
    w.obj_close();
    finish(w, ctx);

    if (!ctx.trace_path.empty())
        write_csv(ctx.trace_path, {"level", "lambda1"}, indexed_rows(rep.lambda1_trace));
    if (!ctx.field_path.empty()) {
        if (rep.ground_state) save_csv(*rep.ground_state, ctx.field_path);
        else if (rep.hardy) save_csv(rep.hardy->weight, ctx.field_path);
        else if (rep.witness) save_csv(*rep.witness, ctx.field_path);
    }
    std::cout << "classification = " << classification_name(rep.classification)
              << " (lambda1 = " << format_sci(rep.lambda1_full) << ")\n";
    return rep.classification == Classification::Inconclusive ? 2 : 0;
}

int run_capacity(const Context& ctx, const AOperator& op, const RunOptions& opts) {
    const Grid& g = *ctx.grid;
    GridFunction V =
        build_field(opts.potential, ctx.cfg, "potential", "expr", "0", ctx.grid, SpaceTag::W1p);
    ActiveBox b = active_box(g);
    double rdef = 0.1 * (b.x1 - b.x0);
    if (g.dim() == 2) rdef = std::min(rdef, 0.1 * (b.y1 - b.y0));
    double r = opts.radius ? *opts.radius : ctx.cfg.number("run", "radius", rdef);
    if (!(r > 0.0)) throw InvalidInput("run radius: must be positive");

    double cx = 0.5 * (b.x0 + b.x1), cy = 0.5 * (b.y0 + b.y1);
    std::vector<int> K;
    for (int node : g.free_nodes()) {
        double dx = g.node_x(node) - cx;
        double dy = g.dim() == 2 ? g.node_y(node) - cy : 0.0;
        if (dx * dx + dy * dy <= r * r) K.push_back(node);
    }
    CapacityReport rep = capacity(op, V, K, ctx.grid, ctx.solver);

    JsonWriter w;
    envelope(w, "capacity", ctx, op);
    w.obj_open();
    w.key("radius").num(r);
    w.key("k_nodes").integer(static_cast<long long>(K.size()));
    w.key("value").num(rep.value);
    w.key("raw").num(rep.raw);
    w.key("residual").num(rep.residual);
    w.key("iterations").integer(rep.iterations);
    w.key("converged").boolean(rep.converged);
    w.obj_close();
    finish(w, ctx);
    std::cout << "capacity = " << format_sci(rep.value) << " (" << K.size() << " nodes)\n";
    return rep.converged ? 0 : 2;
}

int run_hardy(const Context& ctx, const AOperator& op, const RunOptions& opts) {
    GridFunction V =
        build_field(opts.potential, ctx.cfg, "potential", "expr", "0", ctx.grid, SpaceTag::W1p);
    HardyReport rep = hardy_weight(op, V, ctx.grid, ctx.solver);

    JsonWriter w;
    envelope(w, "hardy", ctx, op);
    w.obj_open();
    w.key("multiplier").num(rep.multiplier);
    w.key("min_slack").num(rep.min_slack);
    w.key("witness_index").integer(rep.witness_index);
    w.key("patch_constants").arr_open();
    for (double v : rep.patch_constants) w.num(v);
    w.arr_close();
    w.obj_close();
    finish(w, ctx);

    if (!ctx.field_path.empty()) save_csv(rep.weight, ctx.field_path);
    std::cout << "hardy weight validated, min slack = " << format_sci(rep.min_slack) << "\n";
    return 0;
}

int run_tau(const Context& ctx, const AOperator& op, const RunOptions& opts) {
    GridFunction V =
        build_field(opts.potential, ctx.cfg, "potential", "expr", "0", ctx.grid, SpaceTag::W1p);
    GridFunction pert = build_field(opts.perturbation, ctx.cfg, "run", "perturbation", "-1",
                                    ctx.grid, SpaceTag::W1p);
    ThresholdReport rep = perturbation_threshold(op, V, pert, ctx.grid, ctx.solver);

    JsonWriter w;
    envelope(w, "tau", ctx, op);
    w.obj_open();
    w.key("tau_plus").num(rep.tau_plus);
    w.key("lambda_at_tau").num(rep.lambda_at_tau);
    w.key("probes").integer(static_cast<long long>(rep.samples.size()));
    w.obj_close();
    finish(w, ctx);

    if (!ctx.trace_path.empty()) {
        std::vector<std::vector<double>> rows;
        for (auto& s : rep.samples) rows.push_back({s.first, s.second});
        write_csv(ctx.trace_path, {"t", "lambda1"}, rows);
    }
    std::cout << "tau_plus = " << format_sci(rep.tau_plus)
              << " (lambda1 there = " << format_sci(rep.lambda_at_tau) << ")\n";
    return 0;
}

const char* regime_name(MorreyRegime r) {
    switch (r) {
        case MorreyRegime::PBelowDim: return "p-below-dim";
        case MorreyRegime::PEqualsDim: return "p-equals-dim";
        default: return "p-above-dim";
    }
}

int run_morrey(const Context& ctx, const AOperator& op, const RunOptions& opts) {
    const Grid& g = *ctx.grid;
    GridFunction V =
        build_field(opts.potential, ctx.cfg, "potential", "expr", "0", ctx.grid, SpaceTag::W1p);
    double p = op.p();
    MorreyRegime regime = morrey_regime(p, g.dim());
    double q;
    if (regime == MorreyRegime::PAboveDim) {
        q = 1.0;
    } else {
        q = opts.q ? *opts.q : ctx.cfg.number("run", "q", 0.0);
        if (!(q > 0.0))
            throw InvalidInput("run q: required when p <= dim (q > n/p, or q > n at p = n)");
    }
    MorreyNorm mn = morrey_norm(V, p, q);

    JsonWriter w;
    envelope(w, "morrey", ctx, op);
    w.obj_open();
    w.key("value").num(mn.value);
    w.key("regime").str(regime_name(mn.regime));
    w.key("q").num(mn.q);
    w.key("best_radius").num(mn.best_radius);
    w.key("best_center_x").num(mn.best_center >= 0 ? g.node_x(mn.best_center) : 0.0);
    w.key("best_center_y").num(mn.best_center >= 0 ? g.node_y(mn.best_center) : 0.0);

    double delta = opts.delta ? *opts.delta : ctx.cfg.number("run", "delta", 0.0);
    if (delta > 0.0) {
        // Absorption check against the principal mode of the potential-free
        // operator, the canonical test profile at this resolution.
        GridFunction zero(ctx.grid, 0.0);
        EigenResult eig = principal_eigen(op, zero, ctx.grid, ctx.solver);
        AdamsReport ar = morrey_adams_check(V, eig.eigenfunction, p, q, delta);
        w.key("absorption").obj_open();
        w.key("delta").num(ar.delta);
        w.key("lhs").num(ar.lhs);
        w.key("rhs_gradient").num(ar.rhs_gradient);
        w.key("norm").num(ar.morrey);
        w.key("c_emp").num(ar.c_emp);
        w.obj_close();
    }
    w.obj_close();
    finish(w, ctx);
    std::cout << "morrey norm = " << format_sci(mn.value) << " (" << regime_name(mn.regime)
              << ")\n";
    return 0;
}

int run_verify_operator(const Context& ctx, const AOperator& op) {
    long long samples = ctx.cfg.integer("run", "samples", 100000);
    StructureReport rep = check_structure(op, samples, ctx.solver.seed);

    JsonWriter w;
    envelope(w, "verify-operator", ctx, op);
    w.obj_open();
    w.key("family").str(rep.family);
    w.key("samples").integer(rep.samples);
    w.key("euler_violation").num(rep.euler_violation);
    w.key("homogeneity_violation").num(rep.homogeneity_violation);
    w.key("ellipticity_violation").num(rep.ellipticity_violation);
    w.key("monotonicity_violation").num(rep.monotonicity_violation);
    w.key("holder_violation").num(rep.holder_violation);
    w.key("convexity_violation").num(rep.convexity_violation);
    w.key("convexity_c_empirical").num(rep.convexity_c_empirical);
    w.key("convexity_c_declared").num(rep.convexity_c_declared);
    w.key("convexity_pairs_used").integer(rep.convexity_pairs_used);
    w.key("max_violation").num(rep.max_violation());
    w.obj_close();
    finish(w, ctx);
    std::cout << "structure max violation = " << format_sci(rep.max_violation()) << "\n";
    return 0;
}

}  // namespace

int run(const RunOptions& opts) {
    try {
        if (opts.threads) set_worker_count(*opts.threads);

        Context ctx;
        if (!opts.config_path.empty()) ctx.cfg = Config::from_file(opts.config_path);
        ctx.grid = build_grid(ctx.cfg, opts);
        AOperator op = build_operator(ctx.cfg, opts, *ctx.grid);
        ctx.solver = build_solver(ctx.cfg, opts);
        ctx.report_path =
            opts.output ? *opts.output : ctx.cfg.get("output", "report", "report.json");
        ctx.trace_path = ctx.cfg.get("output", "trace", "");
        ctx.field_path = ctx.cfg.get("output", "field", "");

        const std::string& cmd = opts.subcommand;
        if (cmd == "eig") return run_eig(ctx, op, opts);
        if (cmd == "dirichlet") return run_dirichlet(ctx, op, opts);
        if (cmd == "picone") return run_picone(ctx, op, opts);
        if (cmd == "aap-check") return run_aap(ctx, op, opts);
        if (cmd == "classify") return run_classify(ctx, op, opts);
        if (cmd == "capacity") return run_capacity(ctx, op, opts);
        if (cmd == "hardy") return run_hardy(ctx, op, opts);
        if (cmd == "tau") return run_tau(ctx, op, opts);
        if (cmd == "morrey") return run_morrey(ctx, op, opts);
        if (cmd == "verify-operator") return run_verify_operator(ctx, op);
        throw InvalidInput("unknown subcommand '" + cmd + "'");
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const SolveError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace qcrit
