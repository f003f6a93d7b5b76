#include <CLI11.hpp>

#include "qcrit/runner.hpp"

namespace {

void add_shared(CLI::App* cmd, qcrit::RunOptions& opts) {
    cmd->add_option("--config", opts.config_path, "config file (sectioned key = value)");
    cmd->add_option("--p", opts.p, "exponent p > 1");
    cmd->add_option("--resolution", opts.resolution, "nodes per axis, 3..4096");
    cmd->add_option("--seed", opts.seed, "solver seed");
    cmd->add_option("--tol", opts.tol, "solver residual tolerance");
    cmd->add_option("--max-iters", opts.max_iters, "iteration cap per smoothing stage");
    cmd->add_option("--restarts", opts.restarts, "seeded eigensolver restarts");
    cmd->add_option("--eps-min", opts.eps_min, "smoothing continuation floor");
    cmd->add_option("--threads", opts.threads, "worker cap (never reported)");
    cmd->add_option("--potential", opts.potential, "potential: expression or @file.csv");
    cmd->add_option("--output", opts.output, "report path (default report.json)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qcrit: numerical laboratory for quasilinear energies"};
    app.require_subcommand(1);

    qcrit::RunOptions opts;

    CLI::App* eig = app.add_subcommand("eig", "principal eigenvalue and eigenfunction");
    add_shared(eig, opts);

    CLI::App* dir = app.add_subcommand("dirichlet", "energy minimization with boundary data");
    add_shared(dir, opts);
    dir->add_option("--rhs", opts.rhs, "right-hand side: expression or @file.csv");
    dir->add_option("--boundary", opts.boundary, "boundary values: expression or @file.csv");

    CLI::App* pic = app.add_subcommand("picone", "two-route pointwise identity sweep");
    add_shared(pic, opts);

    CLI::App* aap = app.add_subcommand("aap-check",
                                       "nonnegativity vs positive-solution round trip");
    add_shared(aap, opts);

    CLI::App* cls = app.add_subcommand("classify", "criticality classification");
    add_shared(cls, opts);
    cls->add_option("--levels", opts.levels, "exhaustion levels (>= 2)");

    CLI::App* cap = app.add_subcommand("capacity", "minimal energy above one on a core set");
    add_shared(cap, opts);
    cap->add_option("--radius", opts.radius, "core ball radius around the domain center");

    CLI::App* har = app.add_subcommand("hardy", "validated lower-bound weight");
    add_shared(har, opts);

    CLI::App* tau = app.add_subcommand("tau", "perturbation strength to the zero eigenvalue");
    add_shared(tau, opts);
    tau->add_option("--perturbation", opts.perturbation,
                    "perturbation field: expression or @file.csv");

    CLI::App* mor = app.add_subcommand("morrey", "potential norm and absorption check");
    add_shared(mor, opts);
    mor->add_option("--q", opts.q, "integrability exponent");
    mor->add_option("--delta", opts.delta, "absorption delta (enables the check)");

    CLI::App* ver = app.add_subcommand("verify-operator", "sampled structure identities");
    add_shared(ver, opts);

    CLI11_PARSE(app, argc, argv);

    for (CLI::App* sub : app.get_subcommands()) opts.subcommand = sub->get_name();
    return qcrit::run(opts);
}
