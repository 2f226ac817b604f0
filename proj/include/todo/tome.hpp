#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "todo/attention.hpp"
#include "todo/grid.hpp"

namespace todo {

struct TomeMatch {
    std::size_t src = 0;
    std::size_t dst = 0;
    float similarity = 0.0f;

    friend bool operator==(const TomeMatch&, const TomeMatch&) = default;
};

/// Bipartite merge plan over the n tokens of an h x w grid.
///
/// dst holds one randomly chosen token per non-overlapping 2x2 cell; every
/// other token (including rows/columns left over on odd extents) is src.
/// `matches` lists the merged src tokens in selection order: descending
/// similarity, ties to the lower src index.
struct TomePlan {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::size_t> dst_indices;
    std::vector<std::size_t> src_indices;
    std::vector<TomeMatch> matches;

    std::size_t r() const noexcept { return matches.size(); }
    std::size_t tokens() const noexcept { return height * width; }
};

/// k-th output of a SplitMix64 stream seeded with `seed` (k = 0 is the first).
std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t k) noexcept;

/// Offset in [0, 4) of the dst token inside 2x2 cell `cell` (row-major:
/// 0 = top-left, 1 = top-right, 2 = bottom-left, 3 = bottom-right).
unsigned dst_offset_for_cell(std::uint64_t seed, std::uint64_t cell) noexcept;

/// Partitions the grid, matches every src token to its most cosine-similar
/// dst (ties to the lower dst index) and keeps the r best matches.
/// Evaluates |src| * |dst| similarity pairs.
TomePlan bipartite_soft_matching(const TokenGrid& tokens, std::size_t r, std::uint64_t seed,
                                 Isa isa = Isa::automatic);

/// dst tokens (ascending index), each replaced by the unweighted mean of
/// itself and the src tokens merged into it, followed by the surviving src
/// tokens (ascending index). Length n - r.
TokenRows tome_merge(const TokenGrid& tokens, const TomePlan& plan);

/// Scatters merged rows back to the original grid; merged-away src positions
/// receive a copy of their dst's merged token.
TokenGrid tome_unmerge(const TokenRows& merged, const TomePlan& plan);

/// Merge, dense self-attention over the n - r merged tokens, unmerge.
AttentionOutput tome_attention(const TokenGrid& tokens, std::size_t r, std::uint64_t seed,
                               const AttentionConfig& cfg, const RunOptions& opts = {});

/// Merge count for `ratio` on an h x w grid: round(ratio * n), capped at the
/// number of src tokens the 2x2 partition leaves.
std::size_t tome_merge_count(MergeRatio ratio, std::size_t height, std::size_t width);

} // namespace todo
