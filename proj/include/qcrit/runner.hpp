#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace qcrit {

/// One resolved invocation: subcommand plus the flag overrides.  Every field
/// left empty falls back to the config file and then to the built-in default.
struct RunOptions {
    std::string subcommand;
    std::string config_path;

    std::optional<double> p;
    std::optional<int> resolution;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    std::optional<int> max_iters;
    std::optional<int> restarts;
    std::optional<double> eps_min;
    std::optional<int> threads;

    std::optional<std::string> rhs;
    std::optional<std::string> boundary;
    std::optional<std::string> potential;
    std::optional<std::string> perturbation;
    std::optional<double> radius;
    std::optional<int> levels;
    std::optional<double> q;
    std::optional<double> delta;
    std::optional<std::string> output;
};

/// Builds the instance (grid, operator, fields, solver settings) from the
/// config plus overrides, runs the subcommand, writes the JSON report and
/// any CSV artifacts, and returns the exit code: 0 success, 2 inconclusive
/// classification, 1 any error (reported on stderr).
int run(const RunOptions& opts);

}  // namespace qcrit
