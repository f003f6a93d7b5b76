#pragma once

// Reference values computed by routes that share nothing with the library:
// ODE shooting for continuum eigenvalues, closed forms for the interval
// torsion problem, and tridiagonal inverse iteration for discrete pencils.

#include <vector>

namespace oracle {

// Continuum principal eigenvalue of -(|u'|^{p-2}u')' = lam |u|^{p-2}u on
// (0,1) with zero boundary values, by RK4 shooting on the first-order
// system u' = phi_p^{-1}(w), w' = -lam phi_p(u) and bisection on u(1).
double shooting_lambda1(double p, int steps = 40000);

// The same eigenvalue in closed form, (p-1) pi_p^p with
// pi_p = 2 pi / (p sin(pi/p)); an algebraic cross-check on the shooting.
double closed_form_lambda1(double p);

// Frozen closed-form values; freezing keeps regressions loud.
inline constexpr double kLambda1P15 = 5.3187180763791716;  // p = 1.5
inline constexpr double kLambda1P2 = 9.8696044010893586;   // p = 2, pi^2
inline constexpr double kLambda1P3 = 28.288761976002555;   // p = 3

// Closed form for -(|u'|^{p-2}u')' = 1 on (0,1), zero boundary:
// u(x) = ((p-1)/p) [ (1/2)^{p'} - |x - 1/2|^{p'} ],  p' = p/(p-1).
double torsion_u(double p, double x);

// J[u] = int |u'|^p - p int u at the minimizer above.
double torsion_j(double p);

// Smallest eigenvalue of the Dirichlet pencil
//   (-u_{i-1} + 2 u_i - u_{i+1}) / h^2 + V_i u_i = lam b_i u_i
// on n_nodes uniformly spaced nodes over [a, b] (boundary rows removed),
// by shifted inverse iteration with Thomas solves.  V holds nodal values
// at all n_nodes; null weights mean b == 1.  The minimizing interior
// vector is written to *evec when given (sup-normalized).
double fd_lambda1(const std::vector<double>& V, double a, double b, int n_nodes,
                  const std::vector<double>* denom_weights = nullptr,
                  std::vector<double>* evec = nullptr);

// Discrete best constant in int u'^2 >= C int u^2 / x^2 on (0,1) at a
// given node count: the smallest eigenvalue of the pencil with weights
// b_i = 1 / x_i^2.  Converges to 1/4 only logarithmically in h.
double hardy_best_constant(int n_nodes);

}  // namespace oracle
