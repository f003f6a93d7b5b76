#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace qcrit {

/// Small dense vector sized by the spatial dimension (1 or 2).
struct Vec {
    double a[2] = {0.0, 0.0};
    int n = 2;

    Vec() = default;
    Vec(double x, int dim) : n(dim) { a[0] = x; }
    Vec(double x, double y) : n(2) { a[0] = x; a[1] = y; }
    double& operator[](int i) { return a[i]; }
    double operator[](int i) const { return a[i]; }
};

double dot(const Vec& u, const Vec& v);
double norm2(const Vec& v);
Vec operator+(const Vec& u, const Vec& v);
Vec operator-(const Vec& u, const Vec& v);
Vec operator*(double s, const Vec& v);

/// Symmetric coefficient matrix; in 1D only a11 is read.
struct SymMat {
    double a11 = 1.0, a12 = 0.0, a22 = 1.0;
};

enum class OperatorKind {
    PLaplacian,        // F = |xi|^p / p
    PALaplacian,       // F = (A xi . xi)^{p/2} / p, A(x) symmetric positive definite
    PseudoPLaplacian,  // F = sum_i a_i(x) |xi_i|^p / p
    ConvexCombination  // t * pseudo + (1 - t) * matrix form, p >= 2
};

const char* kind_name(OperatorKind k);

/// Nonlinear flux family A(x, xi) = grad_xi F(x, xi) for a p-homogeneous
/// convex Lagrangian.  Coefficients are piecewise constant per grid cell;
/// an operator built without a coefficient table is spatially uniform.
class AOperator {
public:
    static AOperator p_laplacian(double p, int dim);
    static AOperator pa_laplacian(double p, int dim, SymMat uniform);
    static AOperator pa_laplacian(double p, int dim, std::vector<SymMat> per_cell);
    static AOperator pseudo_p_laplacian(double p, int dim, Vec uniform_weights);
    static AOperator pseudo_p_laplacian(double p, int dim, std::vector<Vec> per_cell);
    static AOperator convex_combination(double p, int dim, double t, Vec weights, SymMat mat);

    OperatorKind kind() const { return kind_; }
    double p() const { return p_; }
    int dim() const { return dim_; }
    double t_mix() const { return t_; }

    /// Lagrangian F(x, xi); cell = rectangular cell index, -1 for uniform.
    double F(int cell, const Vec& xi) const;
    /// Flux A(x, xi) = grad_xi F.
    Vec A(int cell, const Vec& xi) const;
    /// |xi|_A = (A(x, xi) . xi)^{1/p}; vanishes only at xi = 0.
    double norm_A(int cell, const Vec& xi) const;
    /// Distance bracket used by the strengthened convexity inequality:
    /// p >= 2: |xi - eta|_A^p;  p < 2: (|eta|_A + |xi - eta|_A)^{p-2} |xi - eta|_A^2.
    double bracket(int cell, const Vec& xi, const Vec& eta) const;

    /// Ellipticity bounds: alpha |xi|^p <= A . xi and |A| <= beta |xi|^{p-1}.
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    /// Constant C in  |xi|_A^p - |eta|_A^p - p A(x,eta).(xi-eta) >= C [xi,eta]_A.
    /// For p >= 2 this is the provable 2^{1-p}; for p < 2 it is estimated by
    /// seeded sampling at construction.
    double convexity_constant() const { return convexity_C_; }
    bool convexity_from_sampling() const { return convexity_sampled_; }

    int coefficient_cells() const;

private:
    AOperator() = default;
    void finalize();
    void weights_at(int cell, Vec& w) const;
    void matrix_at(int cell, SymMat& m) const;

    OperatorKind kind_ = OperatorKind::PLaplacian;
    double p_ = 2.0;
    int dim_ = 1;
    double t_ = 0.0;
    std::vector<SymMat> mats_;
    std::vector<Vec> wts_;
    SymMat uniform_mat_;
    Vec uniform_wts_;
    double alpha_ = 1.0, beta_ = 1.0;
    double convexity_C_ = 1.0;
    bool convexity_sampled_ = false;
};

/// One row per verified inequality: worst normalized violation over the
/// sample set (violations are scaled by the magnitude of the terms so that
/// heavy-tailed samples do not drown the comparison in rounding noise).
struct StructureReport {
    std::string family;
    double p = 0.0;
    std::uint64_t seed = 0;
    long samples = 0;
    double euler_violation = 0.0;         // |A.xi - p F|
    double homogeneity_violation = 0.0;   // |A(s xi) - s|s|^{p-2} A(xi)|
    double ellipticity_violation = 0.0;   // alpha/beta envelope misses
    double monotonicity_violation = 0.0;  // negative part of (A(xi)-A(eta)).(xi-eta)
    double holder_violation = 0.0;        // |A(xi).eta| - |xi|_A^{p-1} |eta|_A
    double convexity_violation = 0.0;     // gap - C * bracket below zero
    double convexity_c_empirical = 0.0;   // min gap / bracket over guarded pairs
    double convexity_c_declared = 0.0;
    long convexity_pairs_used = 0;
    double max_violation() const;
};

/// Sample-based verification of the family axioms.  Draw distribution:
/// direction uniform on the sphere, radius 1 with probability 1/2 and
/// lognormal otherwise (exercises both unit-scale and extreme magnitudes).
StructureReport check_structure(const AOperator& op, long n_samples, std::uint64_t seed);

}  // namespace qcrit
