#include "todo/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parallel.hpp"
#include "todo/error.hpp"

namespace todo {

namespace {

// Queries processed together so each key chunk is reused from cache.
constexpr std::size_t kQueryBlock = 16;
// Keys per chunk; a multiple of kKeyPanel.
constexpr std::size_t kKeyChunk = 128;
static_assert(kKeyChunk % kKeyPanel == 0);

void validate_config(const AttentionConfig& cfg)
{
    if (cfg.num_heads == 0 || cfg.head_dim == 0)
        throw ShapeError("attention needs at least one head of positive width");
    if (!(cfg.scale > 0.0f) || !std::isfinite(cfg.scale))
        throw RangeError("attention scale must be positive and finite");
}

void validate_inputs(const TokenGrid& q, const TokenGrid& k, const TokenGrid& v,
                     const AttentionConfig& cfg)
{
    validate_config(cfg);
    const std::size_t dim = cfg.model_dim();
    if (q.dim() != dim || k.dim() != dim || v.dim() != dim)
        throw ShapeError("dimension mismatch: heads x head_dim = " + std::to_string(dim) +
                         " but q/k/v dims are " + std::to_string(q.dim()) + "/" +
                         std::to_string(k.dim()) + "/" + std::to_string(v.dim()));
    if (k.height() != v.height() || k.width() != v.width())
        throw ShapeError("keys and values must share a grid shape");
    if (!q.all_finite() || !k.all_finite() || !v.all_finite())
        throw NonFiniteError("attention inputs contain NaN or Inf");
}

// Head h of every key, in the panel layout consumed by KernelTable::scores.
void pack_key_panels(const TokenGrid& k, std::size_t head, std::size_t head_dim,
                     std::vector<float>& panels)
{
    const std::size_t n = k.tokens();
    panels.assign(panel_floats(n, head_dim), 0.0f);
    for (std::size_t j = 0; j < n; ++j) {
        const float* src = k.token(j).data() + head * head_dim;
        float* dst = panels.data() + (j / kKeyPanel) * kKeyPanel * head_dim + j % kKeyPanel;
        for (std::size_t c = 0; c < head_dim; ++c)
            dst[c * kKeyPanel] = src[c];
    }
}

void pack_head_rows(const TokenGrid& v, std::size_t head, std::size_t head_dim,
                    std::vector<float>& rows)
{
    const std::size_t n = v.tokens();
    rows.resize(n * head_dim);
    for (std::size_t j = 0; j < n; ++j) {
        const float* src = v.token(j).data() + head * head_dim;
        std::copy_n(src, head_dim, rows.data() + j * head_dim);
    }
}

// logits[0 .. n_kv) for one query row of one head.
void score_row(const KernelTable& kt, const float* q_head, const std::vector<float>& panels,
               std::size_t head_dim, std::size_t n_kv, float scale, float* logits)
{
    for (std::size_t kc = 0; kc < n_kv; kc += kKeyChunk)
        kt.scores(q_head, panels.data() + kc * head_dim, head_dim,
                  std::min(kKeyChunk, n_kv - kc), scale, logits + kc);
}

// Turns a logit row into unnormalized weights in place; returns 1 / sum.
float softmax_numerators(const KernelTable& kt, float* row, std::size_t n, float& row_max)
{
    row_max = kt.max(row, n);
    if (!std::isfinite(row_max))
        throw NonFiniteError("attention logits overflowed");
    const double sum = kt.exp_shift_sum(row, row_max, row, n);
    return static_cast<float>(1.0 / sum);
}

} // namespace

AttentionConfig AttentionConfig::make(std::size_t num_heads, std::size_t head_dim)
{
    AttentionConfig cfg;
    cfg.num_heads = num_heads;
    cfg.head_dim = head_dim;
    cfg.scale = head_dim == 0 ? 0.0f : static_cast<float>(1.0 / std::sqrt(static_cast<double>(head_dim)));
    validate_config(cfg);
    return cfg;
}

AttentionConfig AttentionConfig::for_model_dim(std::size_t model_dim, std::size_t num_heads)
{
    if (num_heads == 0 || model_dim % num_heads != 0)
        throw ShapeError("model dim " + std::to_string(model_dim) + " is not divisible by " +
                         std::to_string(num_heads) + " heads");
    return make(num_heads, model_dim / num_heads);
}

AttentionOutput dense_attention(const TokenGrid& q, const TokenGrid& k, const TokenGrid& v,
                                const AttentionConfig& cfg, const RunOptions& opts)
{
    validate_inputs(q, k, v, cfg);
    const KernelTable& kt = kernels_for(opts.isa);

    const std::size_t n_q = q.tokens();
    const std::size_t n_kv = k.tokens();
    const std::size_t dim = cfg.model_dim();
    const std::size_t hd = cfg.head_dim;

    AttentionOutput result{TokenGrid(q.height(), q.width(), dim), std::nullopt};
    if (opts.probe_row_max)
        result.row_max_logits.emplace(cfg.num_heads * n_q);
    float* out = result.out.data().data();
    float* probe = opts.probe_row_max ? result.row_max_logits->data() : nullptr;

    std::vector<float> panels;
    std::vector<float> values;
    for (std::size_t h = 0; h < cfg.num_heads; ++h) {
        pack_key_panels(k, h, hd, panels);
        pack_head_rows(v, h, hd, values);

        detail::parallel_for(0, n_q, opts.threads, [&](std::size_t lo, std::size_t hi) {
            std::vector<float> logits(kQueryBlock * n_kv);
            std::vector<float> acc(kQueryBlock * hd);
            float inv_sum[kQueryBlock];
            auto q_head = [&](std::size_t i) { return q.token(i).data() + h * hd; };

            for (std::size_t qb = lo; qb < hi; qb += kQueryBlock) {
                const std::size_t nb = std::min(kQueryBlock, hi - qb);

                for (std::size_t kc = 0; kc < n_kv; kc += kKeyChunk) {
                    const std::size_t cnt = std::min(kKeyChunk, n_kv - kc);
                    const float* chunk = panels.data() + kc * hd;
                    std::size_t b = 0;
                    for (; b + 2 <= nb; b += 2)
                        kt.scores_x2(q_head(qb + b), q_head(qb + b + 1), chunk, hd, cnt, cfg.scale,
                                     logits.data() + b * n_kv + kc, logits.data() + (b + 1) * n_kv + kc);
                    if (b < nb)
                        kt.scores(q_head(qb + b), chunk, hd, cnt, cfg.scale, logits.data() + b * n_kv + kc);
                }

                for (std::size_t b = 0; b < nb; ++b) {
                    float row_max = 0.0f;
                    inv_sum[b] = softmax_numerators(kt, logits.data() + b * n_kv, n_kv, row_max);
                    if (probe)
                        probe[h * n_q + qb + b] = row_max;
                }

                std::fill(acc.begin(), acc.end(), 0.0f);
                for (std::size_t kc = 0; kc < n_kv; kc += kKeyChunk) {
                    const std::size_t cnt = std::min(kKeyChunk, n_kv - kc);
                    const float* rows = values.data() + kc * hd;
                    std::size_t b = 0;
                    for (; b + 2 <= nb; b += 2)
                        kt.accumulate_rows_x2(logits.data() + b * n_kv + kc,
                                              logits.data() + (b + 1) * n_kv + kc, rows, cnt, hd,
                                              acc.data() + b * hd, acc.data() + (b + 1) * hd);
                    if (b < nb)
                        kt.accumulate_rows(logits.data() + b * n_kv + kc, rows, cnt, hd, acc.data() + b * hd);
                }

                for (std::size_t b = 0; b < nb; ++b) {
                    float* row = acc.data() + b * hd;
                    kt.scale(inv_sum[b], row, hd);
                    std::copy_n(row, hd, out + (qb + b) * dim + h * hd);
                }
            }
        });
    }
    return result;
}

AttentionOutput todo_attention(const TokenGrid& q, const TokenGrid& k, const TokenGrid& v,
                               const DownsampleSpec& spec, const AttentionConfig& cfg,
                               const RunOptions& opts)
{
    if (k.height() != v.height() || k.width() != v.width())
        throw ShapeError("keys and values must share a grid shape");
    if (spec.is_identity_for(k.height(), k.width()))
        return dense_attention(q, k, v, cfg, opts);
    return dense_attention(q, nearest_downsample(k, spec), nearest_downsample(v, spec), cfg, opts);
}

std::vector<float> attention_probabilities(const TokenGrid& q, const TokenGrid& k,
                                           const AttentionConfig& cfg, std::size_t head,
                                           std::size_t query, Isa isa)
{
    validate_inputs(q, k, k, cfg);
    if (head >= cfg.num_heads || query >= q.tokens())
        throw RangeError("attention row (" + std::to_string(head) + ", " + std::to_string(query) +
                         ") out of range");
    const KernelTable& kt = kernels_for(isa);
    const std::size_t n_kv = k.tokens();
    std::vector<float> panels;
    pack_key_panels(k, head, cfg.head_dim, panels);

    std::vector<float> row(n_kv);
    score_row(kt, q.token(query).data() + head * cfg.head_dim, panels, cfg.head_dim, n_kv, cfg.scale,
              row.data());
    float row_max = 0.0f;
    const float inv = softmax_numerators(kt, row.data(), n_kv, row_max);
    kt.scale(inv, row.data(), n_kv);
    return row;
}

std::uint64_t attention_workload_flops(std::uint64_t n_q, std::uint64_t n_kv, std::uint64_t dim)
{
    if (n_q == 0 || n_kv == 0 || dim == 0)
        throw RangeError("workload extents must be positive");
    std::uint64_t r = 4;
    for (std::uint64_t f : {n_q, n_kv, dim})
        if (__builtin_mul_overflow(r, f, &r))
            throw OverflowError("attention workload flop count exceeds 64 bits");
    return r;
}

} // namespace todo
