#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace qcrit {

/// Worker cap for data-parallel loops (CLI --threads).  Default 1.
void set_worker_count(int n);
int worker_count();

/// Run body(begin, end) over a fixed chunk partition of [0, n).  The chunk
/// layout depends only on n, never on the worker count, so any write pattern
/// that is disjoint per index is reproducible regardless of --threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// Sum of chunk_sum(begin, end) over the same fixed chunk partition,
/// reduced in chunk order.  Bitwise identical for any worker count.
double parallel_sum(std::size_t n, const std::function<double(std::size_t, std::size_t)>& chunk_sum);

/// Max of chunk_max(begin, end) over the fixed partition (order-free).
double parallel_max(std::size_t n, const std::function<double(std::size_t, std::size_t)>& chunk_max);

}  // namespace qcrit
