#include "oracles.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace oracle {
namespace {

double phi_p(double s, double p) {
    return s == 0.0 ? 0.0 : std::pow(std::fabs(s), p - 1.0) * (s > 0.0 ? 1.0 : -1.0);
}

double phi_p_inv(double s, double p) {
    return s == 0.0 ? 0.0 : std::pow(std::fabs(s), 1.0 / (p - 1.0)) * (s > 0.0 ? 1.0 : -1.0);
}

// Value of u at x = 1 for the shot with u(0) = 0, w(0) = 1.
double shoot(double p, double lam, int steps) {
    double u = 0.0, w = 1.0;
    double h = 1.0 / steps;
    for (int i = 0; i < steps; ++i) {
        double k1u = phi_p_inv(w, p);
        double k1w = -lam * phi_p(u, p);
        double k2u = phi_p_inv(w + 0.5 * h * k1w, p);
        double k2w = -lam * phi_p(u + 0.5 * h * k1u, p);
        double k3u = phi_p_inv(w + 0.5 * h * k2w, p);
        double k3w = -lam * phi_p(u + 0.5 * h * k2u, p);
        double k4u = phi_p_inv(w + h * k3w, p);
        double k4w = -lam * phi_p(u + h * k3u, p);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    }
    return u;
}

}  // namespace

double shooting_lambda1(double p, int steps) {
    // On [lo, hi] the endpoint value changes sign: below lambda1 the shot
    // stays positive, above it crosses zero before x = 1.
    double lo = 0.5, hi = 1.0;
    while (shoot(p, hi, steps) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw std::runtime_error("shooting: no sign change");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (shoot(p, mid, steps) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double closed_form_lambda1(double p) {
    const double pi = 3.14159265358979323846;
    double pi_p = 2.0 * pi / (p * std::sin(pi / p));
    return (p - 1.0) * std::pow(pi_p, p);
}

double torsion_u(double p, double x) {
    double pc = p / (p - 1.0);
    return (p - 1.0) / p * (std::pow(0.5, pc) - std::pow(std::fabs(x - 0.5), pc));
}

double torsion_j(double p) {
    // u' = -phi_p^{-1}(x - 1/2), so |u'|^p = |x - 1/2|^{p'} and both
    // integrals reduce to int_0^{1/2} s^{p'} ds = (1/2)^{p'+1} / (p'+1).
    double pc = p / (p - 1.0);
    double base = 2.0 * std::pow(0.5, pc + 1.0) / (pc + 1.0);
    double int_u = (p - 1.0) / p * (std::pow(0.5, pc) - base);
    return base - p * int_u;
}

double fd_lambda1(const std::vector<double>& V, double a, double b, int n_nodes,
                  const std::vector<double>* denom_weights, std::vector<double>* evec) {
    if (n_nodes < 3) throw std::runtime_error("fd_lambda1: need at least 3 nodes");
    if (V.size() != static_cast<std::size_t>(n_nodes))
        throw std::runtime_error("fd_lambda1: V size mismatch");
    const int m = n_nodes - 2;  // interior unknowns
    const double h = (b - a) / (n_nodes - 1);
    const double ih2 = 1.0 / (h * h);

    std::vector<double> diag(m), bw(m, 1.0);
    for (int i = 0; i < m; ++i) {
        diag[i] = 2.0 * ih2 + V[static_cast<std::size_t>(i + 1)];
        if (denom_weights) bw[i] = (*denom_weights)[static_cast<std::size_t>(i + 1)];
    }

    // Gershgorin lower bound keeps the shifted matrix positive definite.
    double shift = diag[0] - 2.0 * ih2;
    for (int i = 0; i < m; ++i) shift = std::min(shift, diag[i] - 2.0 * ih2);
    shift -= 1.0;

    std::vector<double> x(m), y(m), c(m), d(m);
    for (int i = 0; i < m; ++i) x[i] = 1.0 / (1.0 + i % 7);

    double lam = 0.0;
    for (int it = 0; it < 20000; ++it) {
        // Thomas solve of (T - shift B) y = B x.
        double beta = diag[0] - shift * bw[0];
        c[0] = -ih2 / beta;
        d[0] = bw[0] * x[0] / beta;
        for (int i = 1; i < m; ++i) {
            beta = diag[i] - shift * bw[i] + ih2 * c[i - 1];
            c[i] = -ih2 / beta;
            d[i] = (bw[i] * x[i] + ih2 * d[i - 1]) / beta;
        }
        y[m - 1] = d[m - 1];
        for (int i = m - 2; i >= 0; --i) y[i] = d[i] - c[i] * y[i + 1];

        double num = 0.0, den = 0.0, nrm = 0.0;
        for (int i = 0; i < m; ++i) {
            num += y[i] * (diag[i] * y[i] - ih2 * ((i > 0 ? y[i - 1] : 0.0) +
                                                   (i + 1 < m ? y[i + 1] : 0.0)));
            den += bw[i] * y[i] * y[i];
            nrm = std::max(nrm, std::fabs(y[i]));
        }
        double lam_new = num / den;
        for (int i = 0; i < m; ++i) x[i] = y[i] / nrm;
        if (it > 0 && std::fabs(lam_new - lam) <= 1e-14 * (1.0 + std::fabs(lam_new))) {
            lam = lam_new;
            break;
        }
        lam = lam_new;
        shift = lam - 1e-3 * (1.0 + std::fabs(lam));  // stay below the target
    }
    if (evec) {
        evec->assign(static_cast<std::size_t>(n_nodes), 0.0);
        for (int i = 0; i < m; ++i) (*evec)[static_cast<std::size_t>(i + 1)] = x[i];
    }
    return lam;
}

double hardy_best_constant(int n_nodes) {
    std::vector<double> V(static_cast<std::size_t>(n_nodes), 0.0);
    std::vector<double> w(static_cast<std::size_t>(n_nodes), 0.0);
    double h = 1.0 / (n_nodes - 1);
    for (int i = 1; i + 1 < n_nodes; ++i) {
        double x = i * h;
        w[static_cast<std::size_t>(i)] = 1.0 / (x * x);
    }
    return fd_lambda1(V, 0.0, 1.0, n_nodes, &w);
}

}  // namespace oracle
