#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "qcrit/grid.hpp"

namespace qcrit {

/// Version tag for the fixed test-function family, so that reported minima
/// and slacks are comparable across runs and releases.
inline constexpr const char* kCorpusVersion = "qcrit-corpus v1";

/// Size of the family on a grid: one hat per free node, 50 seeded positive
/// bumps, and tensor sine modes up to order 4 (4 in 1D, 16 in 2D).
int corpus_size(const Grid& g);

/// Visit every member in a fixed order (hats by free-node order, then bumps
/// by stream id, then sine modes).  Members are materialized one at a time
/// into a shared buffer; callers must not retain the reference.
void for_each_corpus_member(
    const std::shared_ptr<const Grid>& g, std::uint64_t seed,
    const std::function<void(int idx, const std::string& name, const GridFunction& f)>& fn);

/// Fingerprint of (version, grid shape, seed, member count).
std::uint64_t corpus_hash(const Grid& g, std::uint64_t seed);

}  // namespace qcrit
