#include "qcrit/operator_family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qcrit/common.hpp"
#include "qcrit/parallel.hpp"
#include "qcrit/rng.hpp"

namespace qcrit {

double dot(const Vec& u, const Vec& v) {
    double s = u.a[0] * v.a[0];
    if (u.n > 1) s += u.a[1] * v.a[1];
    return s;
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

Vec operator+(const Vec& u, const Vec& v) {
    Vec r = u;
    r.a[0] += v.a[0];
    if (r.n > 1) r.a[1] += v.a[1];
    return r;
}

Vec operator-(const Vec& u, const Vec& v) {
    Vec r = u;
    r.a[0] -= v.a[0];
    if (r.n > 1) r.a[1] -= v.a[1];
    return r;
}

Vec operator*(double s, const Vec& v) {
    Vec r = v;
    r.a[0] *= s;
    if (r.n > 1) r.a[1] *= s;
    return r;
}

const char* kind_name(OperatorKind k) {
    switch (k) {
        case OperatorKind::PLaplacian: return "p_laplacian";
        case OperatorKind::PALaplacian: return "pa_laplacian";
        case OperatorKind::PseudoPLaplacian: return "pseudo_p_laplacian";
        case OperatorKind::ConvexCombination: return "convex_combination";
    }
    return "?";
}

namespace {

// |t|^{s-2} t with the continuous extension phi_s(0) = 0 (s > 1).
double phi(double t, double s) {
    if (t == 0.0) return 0.0;
    return std::copysign(std::pow(std::fabs(t), s - 1.0), t);
}

double powp(double t, double e) { return t <= 0.0 ? 0.0 : std::pow(t, e); }

void eig2(const SymMat& m, double& lo, double& hi) {
    double tr = m.a11 + m.a22, det = m.a11 * m.a22 - m.a12 * m.a12;
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    lo = tr / 2.0 - disc;
    hi = tr / 2.0 + disc;
}

}  // namespace

// ----- construction ---------------------------------------------------------

AOperator AOperator::p_laplacian(double p, int dim) {
    if (p <= 1.0) throw InvalidInput("operator: p must exceed 1");
    if (dim != 1 && dim != 2) throw InvalidInput("operator: dimension must be 1 or 2");
    AOperator op;
    op.kind_ = OperatorKind::PLaplacian;
    op.p_ = p;
    op.dim_ = dim;
    op.finalize();
    return op;
}

AOperator AOperator::pa_laplacian(double p, int dim, SymMat uniform) {
    if (p <= 1.0) throw InvalidInput("operator: p must exceed 1");
    if (dim != 1 && dim != 2) throw InvalidInput("operator: dimension must be 1 or 2");
    AOperator op;
    op.kind_ = OperatorKind::PALaplacian;
    op.p_ = p;
    op.dim_ = dim;
    op.uniform_mat_ = uniform;
    op.finalize();
    return op;
}

AOperator AOperator::pa_laplacian(double p, int dim, std::vector<SymMat> per_cell) {
    if (p <= 1.0) throw InvalidInput("operator: p must exceed 1");
    if (dim != 1 && dim != 2) throw InvalidInput("operator: dimension must be 1 or 2");
    if (per_cell.empty()) throw InvalidInput("operator: empty coefficient table");
    AOperator op;
    op.kind_ = OperatorKind::PALaplacian;
    op.p_ = p;
    op.dim_ = dim;
    op.mats_ = std::move(per_cell);
    op.finalize();
    return op;
}

AOperator AOperator::pseudo_p_laplacian(double p, int dim, Vec uniform_weights) {
    if (p <= 1.0) throw InvalidInput("operator: p must exceed 1");
    if (dim != 1 && dim != 2) throw InvalidInput("operator: dimension must be 1 or 2");
    AOperator op;
    op.kind_ = OperatorKind::PseudoPLaplacian;
    op.p_ = p;
    op.dim_ = dim;
    op.uniform_wts_ = uniform_weights;
    op.uniform_wts_.n = dim;
    op.finalize();
    return op;
}

AOperator AOperator::pseudo_p_laplacian(double p, int dim, std::vector<Vec> per_cell) {
    if (p <= 1.0) throw InvalidInput("operator: p must exceed 1");
    if (dim != 1 && dim != 2) throw InvalidInput("operator: dimension must be 1 or 2");
    if (per_cell.empty()) throw InvalidInput("operator: empty coefficient table");
    AOperator op;
    op.kind_ = OperatorKind::PseudoPLaplacian;
    op.p_ = p;
    op.dim_ = dim;
    op.wts_ = std::move(per_cell);
    op.finalize();
    return op;
}

AOperator AOperator::convex_combination(double p, int dim, double t, Vec weights, SymMat mat) {
    if (p < 2.0) throw InvalidInput("operator: convex combination requires p >= 2");
    if (dim != 1 && dim != 2) throw InvalidInput("operator: dimension must be 1 or 2");
    if (t < 0.0 || t > 1.0) throw InvalidInput("operator: mixing weight outside [0,1]");
    AOperator op;
    op.kind_ = OperatorKind::ConvexCombination;
    op.p_ = p;
    op.dim_ = dim;
    op.t_ = t;
    op.uniform_wts_ = weights;
    op.uniform_wts_.n = dim;
    op.uniform_mat_ = mat;
    op.finalize();
    return op;
}

int AOperator::coefficient_cells() const {
    return static_cast<int>(std::max(mats_.size(), wts_.size()));
}

void AOperator::weights_at(int cell, Vec& w) const {
    if (!wts_.empty() && cell >= 0 && cell < static_cast<int>(wts_.size()))
        w = wts_[static_cast<std::size_t>(cell)];
    else
        w = uniform_wts_;
    w.n = dim_;
}

void AOperator::matrix_at(int cell, SymMat& m) const {
    if (!mats_.empty() && cell >= 0 && cell < static_cast<int>(mats_.size()))
        m = mats_[static_cast<std::size_t>(cell)];
    else
        m = uniform_mat_;
}

// ----- evaluation -----------------------------------------------------------

namespace {

double pseudo_F(double p, const Vec& w, const Vec& xi) {
    double s = w.a[0] * std::pow(std::fabs(xi.a[0]), p);
    if (xi.n > 1) s += w.a[1] * std::pow(std::fabs(xi.a[1]), p);
    return s / p;
}

Vec pseudo_A(double p, const Vec& w, const Vec& xi) {
    Vec r;
    r.n = xi.n;
    r.a[0] = w.a[0] * phi(xi.a[0], p);
    if (xi.n > 1) r.a[1] = w.a[1] * phi(xi.a[1], p);
    return r;
}

double quad_form(const SymMat& m, const Vec& xi) {
    if (xi.n == 1) return m.a11 * xi.a[0] * xi.a[0];
    return m.a11 * xi.a[0] * xi.a[0] + 2.0 * m.a12 * xi.a[0] * xi.a[1] + m.a22 * xi.a[1] * xi.a[1];
}

Vec mat_apply(const SymMat& m, const Vec& xi) {
    Vec r;
    r.n = xi.n;
    if (xi.n == 1) {
        r.a[0] = m.a11 * xi.a[0];
    } else {
        r.a[0] = m.a11 * xi.a[0] + m.a12 * xi.a[1];
        r.a[1] = m.a12 * xi.a[0] + m.a22 * xi.a[1];
    }
    return r;
}

double matrix_F(double p, const SymMat& m, const Vec& xi) {
    return powp(quad_form(m, xi), p / 2.0) / p;
}

Vec matrix_A(double p, const SymMat& m, const Vec& xi) {
    double q = quad_form(m, xi);
    if (q <= 0.0) return Vec(0.0, xi.n);
    return std::pow(q, (p - 2.0) / 2.0) * mat_apply(m, xi);
}

}  // namespace

double AOperator::F(int cell, const Vec& xi) const {
    switch (kind_) {
        case OperatorKind::PLaplacian:
            return powp(norm2(xi), p_) / p_;
        case OperatorKind::PALaplacian: {
            SymMat m;
            matrix_at(cell, m);
            return matrix_F(p_, m, xi);
        }
        case OperatorKind::PseudoPLaplacian: {
            Vec w;
            weights_at(cell, w);
            return pseudo_F(p_, w, xi);
        }
        case OperatorKind::ConvexCombination: {
            Vec w;
            SymMat m;
            weights_at(cell, w);
            matrix_at(cell, m);
            return t_ * pseudo_F(p_, w, xi) + (1.0 - t_) * matrix_F(p_, m, xi);
        }
    }
    return 0.0;
}

Vec AOperator::A(int cell, const Vec& xi) const {
    switch (kind_) {
        case OperatorKind::PLaplacian: {
            double r = norm2(xi);
            if (r == 0.0) return Vec(0.0, xi.n);
            return std::pow(r, p_ - 2.0) * xi;
        }
        case OperatorKind::PALaplacian: {
            SymMat m;
            matrix_at(cell, m);
            return matrix_A(p_, m, xi);
        }
        case OperatorKind::PseudoPLaplacian: {
            Vec w;
            weights_at(cell, w);
            return pseudo_A(p_, w, xi);
        }
        case OperatorKind::ConvexCombination: {
            Vec w;
            SymMat m;
            weights_at(cell, w);
            matrix_at(cell, m);
            return t_ * pseudo_A(p_, w, xi) + (1.0 - t_) * matrix_A(p_, m, xi);
        }
    }
    return Vec(0.0, xi.n);
}

double AOperator::norm_A(int cell, const Vec& xi) const {
    double v = dot(A(cell, xi), xi);
    return powp(v, 1.0 / p_);
}

double AOperator::bracket(int cell, const Vec& xi, const Vec& eta) const {
    Vec d = xi - eta;
    double nd = norm_A(cell, d);
    if (p_ >= 2.0) return std::pow(nd, p_);
    if (nd == 0.0) return 0.0;
    double ne = norm_A(cell, eta);
    return std::pow(ne + nd, p_ - 2.0) * nd * nd;
}

// ----- ellipticity envelope and convexity constant --------------------------

void AOperator::finalize() {
    double n = static_cast<double>(dim_);
    auto mat_bounds = [&](double& a, double& b) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        auto fold = [&](const SymMat& m) {
            double l, h;
            eig2(dim_ == 1 ? SymMat{m.a11, 0.0, m.a11} : m, l, h);
            lo = std::min(lo, l);
            hi = std::max(hi, h);
        };
        if (mats_.empty())
            fold(uniform_mat_);
        else
            for (const auto& m : mats_) fold(m);
        if (lo <= 0.0) throw InvalidInput("operator: coefficient matrix not positive definite");
        a = std::pow(lo, p_ / 2.0);
        b = p_ >= 2.0 ? std::pow(hi, p_ / 2.0) : hi * std::pow(lo, (p_ - 2.0) / 2.0);
    };
    auto wts_bounds = [&](double& a, double& b) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        auto fold = [&](const Vec& w) {
            for (int i = 0; i < dim_; ++i) {
                lo = std::min(lo, w.a[i]);
                hi = std::max(hi, w.a[i]);
            }
        };
        if (wts_.empty())
            fold(uniform_wts_);
        else
            for (const auto& w : wts_) fold(w);
        if (lo <= 0.0) throw InvalidInput("operator: component weights must be positive");
        // sum_i |xi_i|^p vs |xi|^p: the lp/l2 embedding constants in dimension n
        a = p_ >= 2.0 ? lo * std::pow(n, 1.0 - p_ / 2.0) : lo;
        b = p_ >= 2.0 ? hi : hi * std::pow(n, (2.0 - p_) / 2.0);
    };

    switch (kind_) {
        case OperatorKind::PLaplacian:
            alpha_ = beta_ = 1.0;
            break;
        case OperatorKind::PALaplacian:
            mat_bounds(alpha_, beta_);
            break;
        case OperatorKind::PseudoPLaplacian:
            wts_bounds(alpha_, beta_);
            break;
        case OperatorKind::ConvexCombination: {
            double aw, bw, am, bm;
            wts_bounds(aw, bw);
            mat_bounds(am, bm);
            alpha_ = t_ * aw + (1.0 - t_) * am;
            beta_ = t_ * bw + (1.0 - t_) * bm;
            break;
        }
    }

    if (p_ >= 2.0) {
        convexity_C_ = std::pow(2.0, 1.0 - p_);
        convexity_sampled_ = false;
    } else {
        // No closed-form constant below p = 2: estimate the worst ratio
        // gap / bracket over a seeded sample and keep a safety margin.
        Rng rng(0xc0ffee1234abcdull);
        double cmin = std::numeric_limits<double>::infinity();
        int cells = coefficient_cells();
        for (int s = 0; s < 40000; ++s) {
            int cell = cells > 0 ? static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cells)) : -1;
            Vec xi(0.0, dim_), eta(0.0, dim_);
            for (int i = 0; i < dim_; ++i) {
                xi.a[i] = rng.normal();
                eta.a[i] = rng.normal();
            }
            double sc = std::exp(2.0 * rng.normal());
            xi = sc * xi;
            double nxe = norm2(xi - eta);
            if (nxe < 1e-4 * (norm2(xi) + norm2(eta)) || nxe == 0.0) continue;
            double gap = std::pow(norm_A(cell, xi), p_) - std::pow(norm_A(cell, eta), p_) -
                         p_ * dot(A(cell, eta), xi - eta);
            double br = bracket(cell, xi, eta);
            if (br > 0.0) cmin = std::min(cmin, gap / br);
        }
        convexity_C_ = std::max(0.0, 0.95 * cmin);
        convexity_sampled_ = true;
    }
}

// ----- sampled structure verification ---------------------------------------

double StructureReport::max_violation() const {
    return std::max({euler_violation, homogeneity_violation, ellipticity_violation,
                     monotonicity_violation, holder_violation, convexity_violation});
}

StructureReport check_structure(const AOperator& op, long n_samples, std::uint64_t seed) {
    if (n_samples <= 0) throw InvalidInput("check_structure: sample count must be positive");
    StructureReport rep;
    rep.family = kind_name(op.kind());
    rep.p = op.p();
    rep.seed = seed;
    rep.samples = n_samples;
    rep.convexity_c_declared = op.convexity_constant();

    const double p = op.p();
    const int dim = op.dim();
    const int cells = op.coefficient_cells();
    const std::size_t n = static_cast<std::size_t>(n_samples);

    struct Acc {
        double euler = 0, homo = 0, ellip = 0, mono = 0, holder = 0, convex = 0;
        double cmin = std::numeric_limits<double>::infinity();
        long pairs = 0;
    };
    constexpr std::size_t kBatch = 1024;
    std::size_t n_batches = (n + kBatch - 1) / kBatch;
    std::vector<Acc> acc(n_batches);

    auto draw = [&](Rng& rng) {
        Vec v(0.0, dim);
        for (int i = 0; i < dim; ++i) v.a[i] = rng.normal();
        double r = norm2(v);
        if (r == 0.0) { v.a[0] = 1.0; r = 1.0; }
        v = (1.0 / r) * v;
        if (rng.uniform() < 0.5) return v;                 // unit sphere
        return std::exp(3.0 * rng.normal()) * v;           // heavy-tailed radius
    };

    parallel_for(n_batches, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            Rng rng = Rng(seed).split(b);
            Acc& a = acc[b];
            std::size_t lo = b * kBatch, hi = std::min(n, lo + kBatch);
            for (std::size_t s = lo; s < hi; ++s) {
                int cell = cells > 0 ? static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cells)) : -1;
                Vec xi = draw(rng), eta = draw(rng);
                Vec Axi = op.A(cell, xi), Aeta = op.A(cell, eta);
                double Fxi = op.F(cell, xi);
                double axx = dot(Axi, xi);

                // Euler identity A.xi = p F
                double den = 1.0 + std::fabs(axx) + p * std::fabs(Fxi);
                a.euler = std::max(a.euler, std::fabs(axx - p * Fxi) / den);

                // homogeneity A(s xi) = s|s|^{p-2} A(xi)
                double sc = rng.uniform(-3.0, 3.0);
                if (sc == 0.0) sc = 0.5;
                Vec lhs = op.A(cell, sc * xi);
                Vec rhs = (std::copysign(std::pow(std::fabs(sc), p - 1.0), sc)) * Axi;
                den = 1.0 + norm2(lhs) + norm2(rhs);
                a.homo = std::max(a.homo, norm2(lhs - rhs) / den);

                // ellipticity envelope
                double nx = norm2(xi);
                double lo_bound = op.alpha() * std::pow(nx, p);
                den = 1.0 + lo_bound + std::fabs(axx);
                a.ellip = std::max(a.ellip, (lo_bound - axx) / den);
                double hi_bound = op.beta() * std::pow(nx, p - 1.0);
                den = 1.0 + hi_bound + norm2(Axi);
                a.ellip = std::max(a.ellip, (norm2(Axi) - hi_bound) / den);

                // monotonicity (A(xi) - A(eta)) . (xi - eta) >= 0
                double m = dot(Axi - Aeta, xi - eta);
                den = 1.0 + std::fabs(dot(Axi, xi - eta)) + std::fabs(dot(Aeta, xi - eta));
                a.mono = std::max(a.mono, -m / den);

                // generalized Hoelder |A(xi).eta| <= |xi|_A^{p-1} |eta|_A
                double na_xi = op.norm_A(cell, xi), na_eta = op.norm_A(cell, eta);
                double bound = std::pow(na_xi, p - 1.0) * na_eta;
                den = 1.0 + bound + std::fabs(dot(Axi, eta));
                a.holder = std::max(a.holder, (std::fabs(dot(Axi, eta)) - bound) / den);

                // strengthened convexity with the declared constant
                double gap = std::pow(na_xi, p) - std::pow(na_eta, p) - p * dot(Aeta, xi - eta);
                double br = op.bracket(cell, xi, eta);
                den = 1.0 + std::fabs(gap) + br;
                a.convex = std::max(a.convex, (rep.convexity_c_declared * br - gap) / den);
                if (norm2(xi - eta) >= 1e-4 * (nx + norm2(eta)) && br > 0.0) {
                    a.cmin = std::min(a.cmin, gap / br);
                    a.pairs++;
                }
            }
        }
    });

    Acc total;
    for (const auto& a : acc) {
        total.euler = std::max(total.euler, a.euler);
        total.homo = std::max(total.homo, a.homo);
        total.ellip = std::max(total.ellip, a.ellip);
        total.mono = std::max(total.mono, a.mono);
        total.holder = std::max(total.holder, a.holder);
        total.convex = std::max(total.convex, a.convex);
        total.cmin = std::min(total.cmin, a.cmin);
        total.pairs += a.pairs;
    }
    rep.euler_violation = total.euler;
    rep.homogeneity_violation = total.homo;
    rep.ellipticity_violation = total.ellip;
    rep.monotonicity_violation = total.mono;
    rep.holder_violation = total.holder;
    rep.convexity_violation = total.convex;
    rep.convexity_c_empirical = total.cmin;
    rep.convexity_pairs_used = total.pairs;
    return rep;
}

}  // namespace qcrit
