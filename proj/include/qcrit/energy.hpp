#pragma once

#include <functional>
#include <vector>

#include "qcrit/grid.hpp"
#include "qcrit/operator_family.hpp"

namespace qcrit {

/// P1 element view: interval in 1D, triangle in 2D.  `rect_cell` indexes the
/// coefficient tables of an AOperator.
struct Simplex {
    int rect_cell = -1;
    int n_vertices = 2;
    int nodes[3] = {-1, -1, -1};
    Vec grad_phi[3];
    double volume = 0.0;
    bool active = false;
};

/// Number of simplex slots (2 per rectangular cell in 2D).
int n_simplices(const Grid& g);
Simplex simplex_at(const Grid& g, int sid);
void for_each_active_simplex(const Grid& g, const std::function<void(const Simplex&)>& fn);

/// Piecewise-constant gradient of a nodal field (slot per simplex id;
/// inactive slots zero).
std::vector<Vec> gradient(const Grid& g, const std::vector<double>& u);
Vec simplex_gradient(const Simplex& s, const std::vector<double>& u);
double simplex_mean(const Simplex& s, const std::vector<double>& u);

struct EnergyBreakdown {
    double gradient_term = 0.0;   // integral of A(x, grad u) . grad u
    double potential_term = 0.0;  // lumped integral of V |u|^p
    double total = 0.0;
};

/// Energy Q[u] = int A(x, grad u) . grad u + int V |u|^p with exact per-cell
/// gradient quadrature and lumped-mass potential quadrature.
EnergyBreakdown energy(const AOperator& op, const GridFunction& V, const GridFunction& u);

/// Lumped p-mass  sum_i m_i w_i |u_i|^p  (w = optional nonnegative node
/// weights, defaults to 1 on active nodes).
double lp_mass(const Grid& g, const std::vector<double>& u, double p,
               const std::vector<double>* node_weights = nullptr);

/// Euclidean gradient p-norm  sum_s |grad u|^p vol_s  (plain norm, no A).
double euclidean_grad_p(const Grid& g, const std::vector<double>& u, double p);

/// First variation of Q at u (nodal, zero on non-free nodes).  For eps > 0
/// the gradient term is smoothed through (|xi|_A^2 + eps^2)^{p/2}, which
/// removes the degeneracy at flat spots; eps = 0 is the exact variation.
std::vector<double> energy_gradient(const AOperator& op, const GridFunction& V,
                                    const GridFunction& u, double eps);

/// Energy consistent with the eps-smoothed gradient (used for line search):
/// gradient term integrand (|xi|_A^2 + eps^2)^{p/2} - eps^p.
double smoothed_energy(const AOperator& op, const GridFunction& V, const GridFunction& u,
                       double eps);

}  // namespace qcrit
