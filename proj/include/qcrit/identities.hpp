#pragma once

#include <cstdint>
#include <vector>

#include "qcrit/grid.hpp"
#include "qcrit/operator_family.hpp"

namespace qcrit {

struct PiconeReport {
    double max_lr_gap = 0.0;     // max over cells of |L - R|
    double min_l = 0.0;          // min over cells of L
    double integral_l = 0.0;     // sum of L times cell volume
    double q_u = 0.0;            // Q[u] when a potential was supplied
    double signed_slack = 0.0;   // Q[u] - integral_l
    double functional_gap = 0.0; // |Q[u] - integral_l|
    bool has_functional = false;
    int cells_used = 0;
};

/// Cellwise check of the two-sided identity
///   L(u,v) = |grad u|_A^p + (p-1)(u/v)^p |grad v|_A^p - p (u/v)^{p-1} A(grad v) . grad u
///   R(u,v) = |grad u|_A^p - A(grad v) . grad(u^p / v^{p-1})
/// with u, v read at cell midpoints and the chain rule applied exactly at
/// cell level, so the two routes share no intermediate terms.  Cells whose
/// nodes touch the discrete boundary are excluded when v vanishes there
/// (W1p0 tag).  When V is supplied the report also compares Q[u] with the
/// integral of L (equal when v solves the homogeneous problem; one-sided
/// slack when v is a super- or subsolution).
PiconeReport picone_check(const AOperator& op, const GridFunction& u, const GridFunction& v,
                          const GridFunction* V = nullptr, double v_floor = 1e-10);

struct DiazSaaReport {
    double i_h = 0.0;       // data-difference pairing integral
    double l_h = 0.0;       // bracket form integral
    double c_declared = 0.0;
    double slack = 0.0;     // i_h - c_declared * l_h, contract >= -1e-8
};

/// Evaluates the convexity-driven inequality I_h >= C L_h for two
/// nonnegative solutions w1, w2 of problems with data (g1, V1), (g2, V2):
///   I_h = int ((g1 - V1 w1^{p-1}) / (w1+h)^{p-1} - (g2 - V2 w2^{p-1}) / (w2+h)^{p-1})
///             ((w1+h)^p - (w2+h)^p)
///   L_h = int (w1+h)^p [grad w1/(w1+h), grad w2/(w2+h)]_A + (w2+h)^p [swap]_A.
/// h = 0 is admitted with boundary-touching cells excluded (the shifted
/// fields are then only interior-positive).
DiazSaaReport diaz_saa_check(const AOperator& op, const GridFunction& w1,
                             const GridFunction& g1, const GridFunction& V1,
                             const GridFunction& w2, const GridFunction& g2,
                             const GridFunction& V2, double h);

struct FirstOrderField {
    std::vector<Vec> S;      // per-simplex field grad v / v
    double residual = 0.0;   // max weak residual of the first-order equation
    std::shared_ptr<const Grid> grid;
};

/// S = grad v / v per simplex (v at the midpoint); the residual is the worst
/// nodal-hat pairing |int A(S).grad psi + (1-p) int (A(S).S) psi + int V psi|.
FirstOrderField field_from_solution(const AOperator& op, const GridFunction& V,
                                    const GridFunction& v, double v_floor = 1e-10);

struct NonnegativityReport {
    double min_q = 0.0;           // min over the normalized corpus of Q[psi]
    double min_young_slack = 0.0; // min over corpus of the pointwise-chain slack
    double max_holder_violation = 0.0;  // normalized; should be rounding-level
    int witness_index = -1;       // corpus index attaining min_q
    std::uint64_t corpus_fingerprint = 0;
};

/// Tests nonnegativity of Q through the first-order field: both min Q over
/// the corpus and the cellwise Young-chain slack
///   int |grad psi|_A^p + (p-1) int |psi|^p |S|_A^p - p int |psi|^{p-1} sgn-paired A(S).grad psi
/// must be nonnegative (up to tolerance) when the field residual is small.
NonnegativityReport nonnegativity_from_field(const AOperator& op, const FirstOrderField& field,
                                             const GridFunction& V, std::uint64_t seed);

}  // namespace qcrit
