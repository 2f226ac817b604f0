#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "todo/grid.hpp"
#include "todo/kernels.hpp"

namespace todo {

/// Multi-head layout: head h owns channels [h * head_dim, (h + 1) * head_dim)
/// of every token, so model dim = num_heads * head_dim.
struct AttentionConfig {
    std::size_t num_heads = 1;
    std::size_t head_dim = 1;
    float scale = 1.0f;

    /// Config with the default 1/sqrt(head_dim) logit scale.
    static AttentionConfig make(std::size_t num_heads, std::size_t head_dim);
    /// Splits `model_dim` evenly over `num_heads`; throws ShapeError if it does not divide.
    static AttentionConfig for_model_dim(std::size_t model_dim, std::size_t num_heads);

    std::size_t model_dim() const noexcept { return num_heads * head_dim; }
};

/// Execution knobs. None of them change results: every thread count and
/// every ISA produces bit-identical output.
struct RunOptions {
    unsigned threads = 1;
    Isa isa = Isa::automatic;
    /// Record the per-(head, query) maximum scaled logit.
    bool probe_row_max = false;
};

struct AttentionOutput {
    TokenGrid out;
    /// Indexed [head * n_queries + query] when requested.
    std::optional<std::vector<float>> row_max_logits;
};

/// softmax(scale * Q K^T) V per head, max-subtracted, streamed one query row
/// at a time so memory stays O(n_kv). Each output element accumulates over
/// keys in ascending index order.
AttentionOutput dense_attention(const TokenGrid& q, const TokenGrid& k, const TokenGrid& v,
                                const AttentionConfig& cfg, const RunOptions& opts = {});

/// Dense attention against nearest-downsampled keys and values. All queries
/// are kept, so the output has Q's shape and no unmerge step exists.
AttentionOutput todo_attention(const TokenGrid& q, const TokenGrid& k, const TokenGrid& v,
                               const DownsampleSpec& spec, const AttentionConfig& cfg,
                               const RunOptions& opts = {});

/// Normalized attention weights of one (head, query) row, computed with the
/// same kernels as dense_attention.
std::vector<float> attention_probabilities(const TokenGrid& q, const TokenGrid& k,
                                           const AttentionConfig& cfg, std::size_t head,
                                           std::size_t query, Isa isa = Isa::automatic);

/// 4 * n_q * n_kv * dim: multiply-adds of Q K^T plus P V.
/// Throws OverflowError if the result does not fit in 64 bits.
std::uint64_t attention_workload_flops(std::uint64_t n_q, std::uint64_t n_kv, std::uint64_t dim);

} // namespace todo
