#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qcrit/eigensolver.hpp"
#include "qcrit/grid.hpp"
#include "qcrit/operator_family.hpp"

namespace qcrit {

enum class Classification { Subcritical, Critical, Supercritical, Inconclusive };
const char* classification_name(Classification c);

struct HardyReport {
    GridFunction weight;                  // W >= 0, strictly positive on active nodes
    std::vector<double> patch_constants;  // constrained eigenvalue per cover patch
    double multiplier = 1.0;              // < 1 only if the validation bisection fired
    double min_slack = 0.0;               // min over the corpus of Q[phi] - int W |phi|^p
    int witness_index = -1;               // corpus member attaining the minimum
};

/// Builds a weight W with Q[phi] >= int W |phi|^p by the two-level patch
/// construction: per patch U_k (the active region, then its halves in 1D or
/// quadrants in 2D) a constrained eigensolve gives c_k = inf Q / int_{U_k}
/// |phi|^p, and W = sum_k 2^{-k} min(0.999 c_k, 1) chi_k.  The geometric
/// weights sum below one, so the bound follows patchwise; it is re-validated
/// on the corpus and shrunk by a scalar bisection if rounding ever bites.
HardyReport hardy_weight(const AOperator& op, const GridFunction& V,
                         const std::shared_ptr<const Grid>& grid, const SolverConfig& cfg);

struct NullSequence {
    std::vector<GridFunction> members;  // nonnegative, zero-extended to the full grid
    std::vector<double> energies;       // Q[u_k] on the full grid, nonincreasing to ~0
    std::vector<double> anchor_norms;   // ||u_k||_{L^p(U)}, == 1 by construction
    std::vector<double> ts;             // bisected perturbation sizes, decreasing to ~0
    std::shared_ptr<const Grid> anchor_set;
};

/// Null-sequence for a functional with lambda1 ~ 0: on each exhaustion level
/// omega_i the potential is depressed by t_i times a fixed smooth bump
/// supported in the innermost level until lambda1 hits zero, and the
/// principal eigenfunction is normalized on the bump support (anchor set).
NullSequence build_null_sequence(const AOperator& op, const GridFunction& V,
                                 const std::shared_ptr<const Grid>& grid, int levels,
                                 const SolverConfig& cfg, double tol_crit = -1.0);

struct CriticalityReport {
    Classification classification = Classification::Inconclusive;
    std::vector<double> lambda1_trace;  // per exhaustion level, innermost first
    double lambda1_full = 0.0;
    double tol_crit = 0.0;
    std::optional<HardyReport> hardy;        // subcritical evidence
    std::optional<GridFunction> witness;     // supercritical evidence, Q[w] < -tol
    double witness_energy = 0.0;
    std::optional<GridFunction> ground_state;  // critical evidence, sup-normalized
    std::optional<NullSequence> null_sequence;
    std::optional<double> tau_plus;  // not set by classify; see perturbation_threshold
    std::vector<std::pair<double, double>> capacity_values;  // (radius, capacity)
    std::string diagnostics;
};

/// Classifies the functional on the active region at resolution h: nested
/// boxes omega_1 < ... < omega_m (the full region) are solved for lambda1;
/// lambda1(full) < -tol gives supercritical with an eigenfunction witness,
/// > tol gives subcritical with a validated Hardy weight, and |lambda1| <=
/// tol with a positive decreasing trace gives critical with a null sequence
/// and ground state.  tol_crit < 0 selects the resolution-aware default 10 h.
/// Classification is a statement at this resolution, not a continuum claim.
CriticalityReport classify(const AOperator& op, const GridFunction& V,
                           const std::shared_ptr<const Grid>& grid, int exhaustion_levels,
                           const SolverConfig& cfg, double tol_crit = -1.0);

struct ThresholdReport {
    double tau_plus = 0.0;
    double lambda_at_tau = 0.0;
    std::vector<std::pair<double, double>> samples;  // (t, lambda1) probes in order
};

/// Largest admissible strength of a perturbation with a negative part:
/// bisects t to the zero of t -> lambda1(V + t W) starting from a
/// subcritical V, doubling the bracket until the sign changes.
ThresholdReport perturbation_threshold(const AOperator& op, const GridFunction& V,
                                       const GridFunction& W,
                                       const std::shared_ptr<const Grid>& grid,
                                       const SolverConfig& cfg);

struct CapacityReport {
    double value = 0.0;     // min energy, clamped at zero
    double raw = 0.0;       // unclamped minimum
    double residual = 0.0;  // projected first-order optimality in the dual norm
    int iterations = 0;
    bool converged = false;
};

/// inf { Q[phi] : phi in W1p0, phi >= 1 on K } by projected preconditioned
/// descent (clamp to 1 on K after each step).  K is a list of node ids that
/// must all be free; an empty K gives zero.  Requires lambda1 >= -10 h.
CapacityReport capacity(const AOperator& op, const GridFunction& V,
                        const std::vector<int>& k_nodes,
                        const std::shared_ptr<const Grid>& grid, const SolverConfig& cfg);

struct PoincareReport {
    double c_value = 0.0;    // smallest constant covering the whole corpus
    double min_slack = 0.0;  // min over the corpus of Q + C|int phi psi|^p - C^{-1} int W phi^p
    double pairing = 0.0;    // int ground_state psi (must be nonzero)
};

/// For a critical functional with ground state phi_g and a test weight psi
/// with int phi_g psi != 0: finds the smallest C such that
///   Q[phi] + C |int phi psi|^p >= (1/C) int W |phi|^p
/// holds over the corpus, where W is the strictly positive weight obtained
/// from the unit-shifted potential (the critical functional itself has none).
PoincareReport poincare_type_check(const AOperator& op, const GridFunction& V,
                                   const GridFunction& psi,
                                   const std::shared_ptr<const Grid>& grid,
                                   const SolverConfig& cfg);

}  // namespace qcrit
