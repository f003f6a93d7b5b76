#include "qcrit/corpus.hpp"

#include <cmath>

#include "qcrit/common.hpp"
#include "qcrit/rng.hpp"

namespace qcrit {
namespace {

constexpr int kBumps = 50;
constexpr int kSineOrder = 4;
constexpr double kPi = 3.14159265358979323846;

int sine_count(const Grid& g) {
    return g.dim() == 1 ? kSineOrder : kSineOrder * kSineOrder;
}

}  // namespace

int corpus_size(const Grid& g) {
    return static_cast<int>(g.free_nodes().size()) + kBumps + sine_count(g);
}

void for_each_corpus_member(
    const std::shared_ptr<const Grid>& g, std::uint64_t seed,
    const std::function<void(int, const std::string&, const GridFunction&)>& fn) {
    const Grid& grid = *g;
    const std::vector<int>& free = grid.free_nodes();
    GridFunction buf(g, SpaceTag::W1p0);
    int idx = 0;

    for (int node : free) {
        std::fill(buf.v.begin(), buf.v.end(), 0.0);
        buf.v[static_cast<std::size_t>(node)] = 1.0;
        fn(idx++, "hat:" + std::to_string(node), buf);
    }

    double diam = grid.active_diameter();
    Rng base(seed);
    for (int b = 0; b < kBumps; ++b) {
        Rng rng = base.split(static_cast<std::uint64_t>(b));
        int center = free[static_cast<std::size_t>(rng.uniform() * free.size()) % free.size()];
        double cx = grid.node_x(center), cy = grid.node_y(center);
        double radius = rng.uniform(0.1, 0.4) * diam;
        for (int i = 0; i < grid.n_nodes(); ++i) {
            double dx = grid.node_x(i) - cx, dy = grid.node_y(i) - cy;
            double d = std::sqrt(dx * dx + dy * dy);
            double c = d >= radius ? 0.0 : std::cos(0.5 * kPi * d / radius);
            buf.v[static_cast<std::size_t>(i)] = c * c;
        }
        buf.enforce_tag();
        fn(idx++, "bump:" + std::to_string(b), buf);
    }

    double x0 = grid.node_x(grid.node_id(0, 0));
    double x1 = grid.node_x(grid.node_id(grid.nx() - 1, 0));
    if (grid.dim() == 1) {
        for (int k = 1; k <= kSineOrder; ++k) {
            for (int i = 0; i < grid.n_nodes(); ++i)
                buf.v[static_cast<std::size_t>(i)] =
                    std::sin(k * kPi * (grid.node_x(i) - x0) / (x1 - x0));
            buf.enforce_tag();
            fn(idx++, "sine:" + std::to_string(k), buf);
        }
    } else {
        double y0 = grid.node_y(grid.node_id(0, 0));
        double y1 = grid.node_y(grid.node_id(0, grid.ny() - 1));
        for (int k = 1; k <= kSineOrder; ++k)
            for (int l = 1; l <= kSineOrder; ++l) {
                for (int i = 0; i < grid.n_nodes(); ++i)
                    buf.v[static_cast<std::size_t>(i)] =
                        std::sin(k * kPi * (grid.node_x(i) - x0) / (x1 - x0)) *
                        std::sin(l * kPi * (grid.node_y(i) - y0) / (y1 - y0));
                buf.enforce_tag();
                fn(idx++, "sine:" + std::to_string(k) + "," + std::to_string(l), buf);
            }
    }
}

std::uint64_t corpus_hash(const Grid& g, std::uint64_t seed) {
    std::string tag = std::string(kCorpusVersion) + "|" + std::to_string(g.dim()) + "|" +
                      std::to_string(g.nx()) + "|" + std::to_string(g.ny()) + "|" +
                      std::to_string(seed) + "|" + std::to_string(corpus_size(g));
    return fnv1a64(tag.data(), tag.size());
}

}  // namespace qcrit
