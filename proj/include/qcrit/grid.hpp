#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qcrit/operator_family.hpp"

namespace qcrit {

/// Uniform tensor grid on an interval (dim 1) or rectangle (dim 2) with an
/// optional cell activity mask carving out a subdomain.  In 2D every active
/// rectangular cell is split into two triangles along the same diagonal
/// (lower-left to upper-right), so the P1 stiffness of the Laplacian reduces
/// to the classical five-point stencil.
class Grid {
public:
    static std::shared_ptr<Grid> interval(double a, double b, int nx);
    static std::shared_ptr<Grid> rectangle(double x0, double x1, double y0, double y1,
                                           int nx, int ny);

    int dim() const { return dim_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    double h() const { return dim_ == 1 ? hx_ : std::max(hx_, hy_); }
    double x0() const { return x0_; }
    double x1() const { return x1_; }
    double y0() const { return y0_; }
    double y1() const { return y1_; }

    int n_nodes() const { return dim_ == 1 ? nx_ : nx_ * ny_; }
    int n_cells() const { return dim_ == 1 ? nx_ - 1 : (nx_ - 1) * (ny_ - 1); }

    int node_id(int i, int j = 0) const { return dim_ == 1 ? i : i + nx_ * j; }
    int cell_id(int i, int j = 0) const { return dim_ == 1 ? i : i + (nx_ - 1) * j; }
    double node_x(int id) const { return x0_ + hx_ * (dim_ == 1 ? id : id % nx_); }
    double node_y(int id) const { return dim_ == 1 ? 0.0 : y0_ + hy_ * (id / nx_); }
    void cell_center(int cell, double& cx, double& cy) const;

    /// Restrict the active region to cells whose center satisfies the
    /// predicate; re-derives node activity, freedom, and lumped masses.
    void set_active(const std::function<bool(double, double)>& center_pred);
    /// Nested copy of this grid with a different active set (exhaustions).
    std::shared_ptr<Grid> with_active(const std::function<bool(double, double)>& pred) const;

    bool cell_active(int cell) const { return cell_active_[static_cast<std::size_t>(cell)] != 0; }
    bool node_active(int node) const { return node_active_[static_cast<std::size_t>(node)] != 0; }
    /// Free nodes carry degrees of freedom; all incident cells exist and are
    /// active.  Active non-free nodes make up the discrete boundary.
    bool node_free(int node) const { return node_free_[static_cast<std::size_t>(node)] != 0; }

    const std::vector<int>& free_nodes() const { return free_list_; }
    /// Lumped mass: share of incident active cell volume (1/2 or 1/3 each).
    double mass(int node) const { return mass_[static_cast<std::size_t>(node)]; }
    double total_volume() const { return volume_; }
    /// Diameter of the bounding box of the active cells.
    double active_diameter() const { return diam_; }

    /// Distance from a node to the nearest non-free node (graph metric scaled
    /// by h); used to shape positive initial eigenfunction guesses.
    std::vector<double> boundary_distance() const;

private:
    Grid() = default;
    void finalize();

    int dim_ = 1, nx_ = 2, ny_ = 1;
    double x0_ = 0.0, x1_ = 1.0, y0_ = 0.0, y1_ = 0.0;
    double hx_ = 1.0, hy_ = 0.0;
    double volume_ = 0.0, diam_ = 0.0;
    std::vector<std::uint8_t> cell_active_, node_active_, node_free_;
    std::vector<double> mass_;
    std::vector<int> free_list_;
};

enum class SpaceTag { W1p, W1p0 };

/// Nodal field over a grid.  W1p0-tagged functions vanish on every
/// non-free node; the constructor and loaders enforce this.
struct GridFunction {
    std::shared_ptr<const Grid> grid;
    std::vector<double> v;
    SpaceTag tag = SpaceTag::W1p;

    GridFunction() = default;
    GridFunction(std::shared_ptr<const Grid> g, SpaceTag t);
    GridFunction(std::shared_ptr<const Grid> g, double constant, SpaceTag t = SpaceTag::W1p);

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    void enforce_tag();

    static GridFunction from_fn(std::shared_ptr<const Grid> g,
                                const std::function<double(double, double)>& f,
                                SpaceTag tag = SpaceTag::W1p);
};

/// CSV round-trip: header "qcrit-gridfunction v1, dim, nx[, ny]" followed by
/// row-major nodal values.
void save_csv(const GridFunction& f, const std::string& path);
GridFunction load_csv(std::shared_ptr<const Grid> g, const std::string& path, SpaceTag tag);

}  // namespace qcrit
