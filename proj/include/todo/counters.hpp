#pragma once

#include <atomic>
#include <cstdint>

namespace todo {

/// Process-wide operation counters used to check cost models.
///
/// Each library call adds its total once, so the overhead is one atomic
/// add per call regardless of problem size.
struct OpCounters {
    /// Cosine similarity pairs evaluated by ToMe matching.
    std::atomic<std::uint64_t> similarity_pairs{0};
    /// Tokens read by nearest-neighbor downsampling.
    std::atomic<std::uint64_t> tokens_touched{0};
    /// cosine_similarity calls where one operand was the zero vector.
    std::atomic<std::uint64_t> zero_vector_cosines{0};
};

OpCounters& counters() noexcept;
void reset_counters() noexcept;

} // namespace todo
