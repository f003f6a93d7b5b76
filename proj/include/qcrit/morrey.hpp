#pragma once

#include "qcrit/grid.hpp"

namespace qcrit {

/// The norm used for potentials depends on how p compares with the spatial
/// dimension n: below n it is a scaled ball-average supremum, at n the scale
/// factor becomes logarithmic, above n it collapses to the plain L^1 norm.
enum class MorreyRegime { PBelowDim, PEqualsDim, PAboveDim };

MorreyRegime morrey_regime(double p, int n);

struct MorreyNorm {
    double value = 0.0;
    MorreyRegime regime = MorreyRegime::PAboveDim;
    double q = 1.0;          // exponent actually used by the norm
    double best_radius = 0.0;  // radius attaining the supremum (0 for L^1)
    int best_center = -1;      // node id attaining the supremum (-1 for L^1)
};

/// Discrete Morrey norm of f over the active region.  Ball centers run over
/// active grid nodes and radii over a dyadic ladder from one cell width up
/// to the diameter of the active region; the ball integral sums cell
/// averages of |f|, weighting cells that straddle the sphere by the overlap
/// fraction (exact interval overlap in 1D, a fixed 16x16 midpoint lattice
/// per cell in 2D).  The sweep is a lower estimate of the continuum
/// supremum by construction, which is the certified direction for the
/// lower-bound uses of the norm.
MorreyNorm morrey_norm(const GridFunction& f, double p, double q);

/// One evaluation of the scaled ball average at a given center node and
/// radius (no sweep).  The norm dominates this at every active center for
/// radii on the sweep's dyadic ladder; off-ladder radii may exceed it since
/// the sweep is a finite lower estimate of the radius supremum.
double morrey_ball_value(const GridFunction& f, double p, double q, int center_node,
                         double radius);

struct AdamsReport {
    double lhs = 0.0;           // integral of |V| |u|^p (lumped)
    double rhs_gradient = 0.0;  // delta * integral of |grad u|^p (Euclidean)
    double morrey = 0.0;        // ||V|| in the regime norm
    double delta = 0.0;
    double c_emp = 0.0;  // (lhs - rhs)_+ delta^{n/(pq-n)} / (||V||^{pq/(pq-n)} ||u||_p^p)
};

/// Empirical constant in the potential-absorption inequality
///   int |V| |u|^p  <=  delta ||grad u||_p^p  +  C ||V||^{pq/(pq-n)} / delta^{n/(pq-n)} ||u||_p^p.
/// u must vanish on the discrete boundary and pq > n.  The exponents use the
/// caller's q; the norm itself always follows the (p, n) regime.
AdamsReport morrey_adams_check(const GridFunction& V, const GridFunction& u, double p,
                               double q, double delta);

}  // namespace qcrit
