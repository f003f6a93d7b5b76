#include "qcrit/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <thread>

namespace qcrit {

namespace {

int g_workers = 1;
constexpr std::size_t kChunkTarget = 256;  // fixed: partition must not depend on workers
constexpr std::size_t kSerialCutoff = 16384;

struct Partition {
    std::size_t n_chunks, chunk;
};

Partition partition(std::size_t n) {
    std::size_t n_chunks = std::min(n, kChunkTarget);
    if (n_chunks == 0) return {0, 0};
    std::size_t chunk = (n + n_chunks - 1) / n_chunks;
    n_chunks = (n + chunk - 1) / chunk;
    return {n_chunks, chunk};
}

template <typename PerChunk>
void run_chunks(std::size_t n_chunks, int workers, const PerChunk& per_chunk) {
    if (workers <= 1 || n_chunks <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) per_chunk(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            per_chunk(c);
        }
    };
    std::vector<std::thread> pool;
    int nw = std::min<int>(workers, static_cast<int>(n_chunks));
    pool.reserve(static_cast<std::size_t>(nw - 1));
    for (int t = 1; t < nw; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace

void set_worker_count(int n) { g_workers = n < 1 ? 1 : n; }
int worker_count() { return g_workers; }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    auto [n_chunks, chunk] = partition(n);
    int workers = (n < kSerialCutoff) ? 1 : g_workers;
    run_chunks(n_chunks, workers, [&](std::size_t c) {
        std::size_t b = c * chunk, e = std::min(n, b + chunk);
        body(b, e);
    });
}

double parallel_sum(std::size_t n, const std::function<double(std::size_t, std::size_t)>& chunk_sum) {
    if (n == 0) return 0.0;
    auto [n_chunks, chunk] = partition(n);
    std::vector<double> partial(n_chunks, 0.0);
    int workers = (n < kSerialCutoff) ? 1 : g_workers;
    run_chunks(n_chunks, workers, [&](std::size_t c) {
        std::size_t b = c * chunk, e = std::min(n, b + chunk);
        partial[c] = chunk_sum(b, e);
    });
    double s = 0.0;
    for (double v : partial) s += v;  // fixed order
    return s;
}

double parallel_max(std::size_t n, const std::function<double(std::size_t, std::size_t)>& chunk_max) {
    if (n == 0) return -std::numeric_limits<double>::infinity();
    auto [n_chunks, chunk] = partition(n);
    std::vector<double> partial(n_chunks, -std::numeric_limits<double>::infinity());
    int workers = (n < kSerialCutoff) ? 1 : g_workers;
    run_chunks(n_chunks, workers, [&](std::size_t c) {
        std::size_t b = c * chunk, e = std::min(n, b + chunk);
        partial[c] = chunk_max(b, e);
    });
    double m = partial[0];
    for (double v : partial) m = std::max(m, v);
    return m;
}

}  // namespace qcrit
