#include "qcrit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "qcrit/common.hpp"

namespace qcrit {

std::shared_ptr<Grid> Grid::interval(double a, double b, int nx) {
    if (nx < 3 || !(b > a)) throw InvalidInput("grid: interval needs nx >= 3 and b > a");
    auto g = std::shared_ptr<Grid>(new Grid());
    g->dim_ = 1;
    g->nx_ = nx;
    g->ny_ = 1;
    g->x0_ = a;
    g->x1_ = b;
    g->hx_ = (b - a) / (nx - 1);
    g->cell_active_.assign(static_cast<std::size_t>(nx - 1), 1);
    g->finalize();
    return g;
}

std::shared_ptr<Grid> Grid::rectangle(double x0, double x1, double y0, double y1, int nx, int ny) {
    if (nx < 3 || ny < 3 || !(x1 > x0) || !(y1 > y0))
        throw InvalidInput("grid: rectangle needs nx, ny >= 3 and positive extents");
    auto g = std::shared_ptr<Grid>(new Grid());
    g->dim_ = 2;
    g->nx_ = nx;
    g->ny_ = ny;
    g->x0_ = x0;
    g->x1_ = x1;
    g->y0_ = y0;
    g->y1_ = y1;
    g->hx_ = (x1 - x0) / (nx - 1);
    g->hy_ = (y1 - y0) / (ny - 1);
    g->cell_active_.assign(static_cast<std::size_t>((nx - 1) * (ny - 1)), 1);
    g->finalize();
    return g;
}

void Grid::cell_center(int cell, double& cx, double& cy) const {
    if (dim_ == 1) {
        cx = x0_ + hx_ * (cell + 0.5);
        cy = 0.0;
    } else {
        int ci = cell % (nx_ - 1), cj = cell / (nx_ - 1);
        cx = x0_ + hx_ * (ci + 0.5);
        cy = y0_ + hy_ * (cj + 0.5);
    }
}

void Grid::set_active(const std::function<bool(double, double)>& center_pred) {
    for (int c = 0; c < n_cells(); ++c) {
        double cx, cy;
        cell_center(c, cx, cy);
        cell_active_[static_cast<std::size_t>(c)] = center_pred(cx, cy) ? 1 : 0;
    }
    finalize();
}

std::shared_ptr<Grid> Grid::with_active(const std::function<bool(double, double)>& pred) const {
    auto g = std::shared_ptr<Grid>(new Grid(*this));
    g->set_active(pred);
    return g;
}

void Grid::finalize() {
    int nn = n_nodes();
    node_active_.assign(static_cast<std::size_t>(nn), 0);
    node_free_.assign(static_cast<std::size_t>(nn), 0);
    mass_.assign(static_cast<std::size_t>(nn), 0.0);
    free_list_.clear();
    volume_ = 0.0;

    double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
    double lo_y = lo_x, hi_y = -lo_x;
    bool any = false;

    if (dim_ == 1) {
        for (int c = 0; c < nx_ - 1; ++c) {
            if (!cell_active(c)) continue;
            any = true;
            node_active_[static_cast<std::size_t>(c)] = 1;
            node_active_[static_cast<std::size_t>(c + 1)] = 1;
            mass_[static_cast<std::size_t>(c)] += hx_ / 2.0;
            mass_[static_cast<std::size_t>(c + 1)] += hx_ / 2.0;
            volume_ += hx_;
            lo_x = std::min(lo_x, x0_ + hx_ * c);
            hi_x = std::max(hi_x, x0_ + hx_ * (c + 1));
        }
        for (int i = 0; i < nx_; ++i) {
            bool left = i > 0 && cell_active(i - 1);
            bool right = i < nx_ - 1 && cell_active(i);
            if (left && right) {
                node_free_[static_cast<std::size_t>(i)] = 1;
                free_list_.push_back(i);
            }
        }
        diam_ = any ? hi_x - lo_x : 0.0;
    } else {
        double tri = hx_ * hy_ / 2.0;
        for (int cj = 0; cj < ny_ - 1; ++cj) {
            for (int ci = 0; ci < nx_ - 1; ++ci) {
                int c = cell_id(ci, cj);
                if (!cell_active(c)) continue;
                any = true;
                int n00 = node_id(ci, cj), n10 = node_id(ci + 1, cj);
                int n01 = node_id(ci, cj + 1), n11 = node_id(ci + 1, cj + 1);
                for (int n : {n00, n10, n01, n11}) node_active_[static_cast<std::size_t>(n)] = 1;
                // lower triangle (n00, n10, n11), upper triangle (n00, n11, n01)
                for (int n : {n00, n10, n11}) mass_[static_cast<std::size_t>(n)] += tri / 3.0;
                for (int n : {n00, n11, n01}) mass_[static_cast<std::size_t>(n)] += tri / 3.0;
                volume_ += 2.0 * tri;
                lo_x = std::min(lo_x, x0_ + hx_ * ci);
                hi_x = std::max(hi_x, x0_ + hx_ * (ci + 1));
                lo_y = std::min(lo_y, y0_ + hy_ * cj);
                hi_y = std::max(hi_y, y0_ + hy_ * (cj + 1));
            }
        }
        for (int j = 0; j < ny_; ++j) {
            for (int i = 0; i < nx_; ++i) {
                bool ok = i > 0 && j > 0 && i < nx_ - 1 && j < ny_ - 1;
                if (ok)
                    for (int dj = -1; dj <= 0 && ok; ++dj)
                        for (int di = -1; di <= 0 && ok; ++di)
                            ok = cell_active(cell_id(i + di, j + dj));
                if (ok) {
                    node_free_[static_cast<std::size_t>(node_id(i, j))] = 1;
                    free_list_.push_back(node_id(i, j));
                }
            }
        }
        diam_ = any ? std::hypot(hi_x - lo_x, hi_y - lo_y) : 0.0;
    }
    if (!any) throw InvalidInput("grid: active region is empty");
    if (free_list_.empty()) throw InvalidInput("grid: active region has no interior nodes");
}

std::vector<double> Grid::boundary_distance() const {
    int nn = n_nodes();
    std::vector<double> d(static_cast<std::size_t>(nn), 0.0);
    std::vector<int> frontier;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nn; ++i) {
        if (node_free(i))
            d[static_cast<std::size_t>(i)] = kInf;
        else
            frontier.push_back(i);
    }
    double step = h();
    // BFS over the axis-neighbor graph; good enough as a positive profile.
    while (!frontier.empty()) {
        std::vector<int> next;
        for (int n : frontier) {
            int i = dim_ == 1 ? n : n % nx_;
            int j = dim_ == 1 ? 0 : n / nx_;
            const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
            int n_nb = dim_ == 1 ? 2 : 4;
            for (int k = 0; k < n_nb; ++k) {
                int ii = i + di[k], jj = j + dj[k];
                if (ii < 0 || ii >= nx_ || (dim_ == 2 && (jj < 0 || jj >= ny_))) continue;
                int m = node_id(ii, jj);
                if (d[static_cast<std::size_t>(m)] == kInf) {
                    d[static_cast<std::size_t>(m)] = d[static_cast<std::size_t>(n)] + step;
                    next.push_back(m);
                }
            }
        }
        frontier.swap(next);
    }
    for (auto& x : d)
        if (x == kInf) x = step;
    return d;
}

GridFunction::GridFunction(std::shared_ptr<const Grid> g, SpaceTag t) : grid(std::move(g)), tag(t) {
    v.assign(static_cast<std::size_t>(grid->n_nodes()), 0.0);
}

GridFunction::GridFunction(std::shared_ptr<const Grid> g, double constant, SpaceTag t)
    : grid(std::move(g)), tag(t) {
    v.assign(static_cast<std::size_t>(grid->n_nodes()), constant);
    enforce_tag();
}

void GridFunction::enforce_tag() {
    if (tag != SpaceTag::W1p0) return;
    for (int i = 0; i < grid->n_nodes(); ++i)
        if (!grid->node_free(i)) v[static_cast<std::size_t>(i)] = 0.0;
}

GridFunction GridFunction::from_fn(std::shared_ptr<const Grid> g,
                                   const std::function<double(double, double)>& f, SpaceTag tag) {
    GridFunction out(g, tag);
    for (int i = 0; i < g->n_nodes(); ++i)
        out.v[static_cast<std::size_t>(i)] = f(g->node_x(i), g->node_y(i));
    out.enforce_tag();
    return out;
}

void save_csv(const GridFunction& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("save_csv: cannot open " + path);
    const Grid& g = *f.grid;
    if (g.dim() == 1)
        out << "qcrit-gridfunction v1, 1, " << g.nx() << "\n";
    else
        out << "qcrit-gridfunction v1, 2, " << g.nx() << ", " << g.ny() << "\n";
    int per_row = g.nx();
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        out << format_sci(f.v[i]);
        out << (((i + 1) % static_cast<std::size_t>(per_row)) == 0 ? "\n" : ",");
    }
}

GridFunction load_csv(std::shared_ptr<const Grid> g, const std::string& path, SpaceTag tag) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("load_csv: cannot open " + path);
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic;
    std::getline(hs, magic, ',');
    if (magic != "qcrit-gridfunction v1")
        throw InvalidInput("load_csv: bad header in " + path);
    int dim = 0, nx = 0, ny = 0;
    char comma;
    hs >> dim >> comma >> nx;
    if (dim == 2) hs >> comma >> ny;
    if (dim != g->dim() || nx != g->nx() || (dim == 2 && ny != g->ny()))
        throw InvalidInput("load_csv: grid shape mismatch in " + path);
    GridFunction f(g, tag);
    std::size_t k = 0;
    std::string tok;
    while (k < f.v.size() && in) {
        if (!std::getline(in, tok, ',')) break;
        // last token on a line may carry the newline-split remainder
        std::istringstream ts(tok);
        double val;
        while (ts >> val && k < f.v.size()) f.v[k++] = val;
    }
    if (k != f.v.size()) throw InvalidInput("load_csv: value count mismatch in " + path);
    f.enforce_tag();
    return f;
}

}  // namespace qcrit
