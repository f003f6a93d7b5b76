#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcrit {

/// Thrown when a caller violates an operation precondition.
class InvalidInput : public std::runtime_error {
public:
    explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when an iterative solve exhausts its budget without converging.
class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& what, std::vector<double> trace = {})
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<double>& trace() const { return trace_; }

private:
    std::vector<double> trace_;
};

/// Odd power sign(t) |t|^s; with s = p - 1 this is the derivative factor of
/// |t|^p / p.  Defined as 0 at t = 0 for every s.
inline double signed_pow(double t, double s) {
    if (t == 0.0) return 0.0;
    return std::copysign(std::pow(std::fabs(t), s), t);
}

/// Serialize a double in scientific notation with 17 significant digits.
/// Round-trips exactly; used for every numeric that reaches a report.
std::string format_sci(double x);

/// FNV-1a 64-bit hash, used to fingerprint configuration bytes.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string hex64(std::uint64_t v);

}  // namespace qcrit
