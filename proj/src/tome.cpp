#include "todo/tome.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "todo/counters.hpp"
#include "todo/error.hpp"

namespace todo {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
// dst tokens scored per pass over the src set; keeps the tile cache resident.
constexpr std::size_t kDstTile = 128;

void check_plan_shape(const TomePlan& plan, std::size_t height, std::size_t width)
{
    if (plan.height != height || plan.width != width)
        throw ShapeError("merge plan for " + std::to_string(plan.height) + "x" +
                         std::to_string(plan.width) + " applied to a " + std::to_string(height) +
                         "x" + std::to_string(width) + " grid");
    if (plan.dst_indices.size() + plan.src_indices.size() != plan.tokens() ||
        plan.r() > plan.src_indices.size())
        throw ShapeError("merge plan is inconsistent with its grid shape");
}

// Position of each dst token inside plan.dst_indices, kNone for src tokens.
std::vector<std::size_t> dst_slots(const TomePlan& plan)
{
    std::vector<std::size_t> slot(plan.tokens(), kNone);
    for (std::size_t i = 0; i < plan.dst_indices.size(); ++i)
        slot[plan.dst_indices[i]] = i;
    return slot;
}

} // namespace

std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t k) noexcept
{
    std::uint64_t z = seed + (k + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

unsigned dst_offset_for_cell(std::uint64_t seed, std::uint64_t cell) noexcept
{
    return static_cast<unsigned>(splitmix64_at(seed, cell) % 4);
}

TomePlan bipartite_soft_matching(const TokenGrid& tokens, std::size_t r, std::uint64_t seed, Isa isa)
{
    const std::size_t h = tokens.height();
    const std::size_t w = tokens.width();
    if (h < 2 || w < 2)
        throw ShapeError("grid too small for 2x2 bipartite matching: " + std::to_string(h) + "x" +
                         std::to_string(w));

    TomePlan plan;
    plan.height = h;
    plan.width = w;

    const std::size_t n = h * w;
    const std::size_t cells_x = w / 2;
    std::vector<bool> is_dst(n, false);
    for (std::size_t cy = 0; cy < h / 2; ++cy)
        for (std::size_t cx = 0; cx < cells_x; ++cx) {
            const unsigned off = dst_offset_for_cell(seed, cy * cells_x + cx);
            is_dst[(2 * cy + off / 2) * w + 2 * cx + off % 2] = true;
        }
    for (std::size_t i = 0; i < n; ++i)
        (is_dst[i] ? plan.dst_indices : plan.src_indices).push_back(i);

    const std::size_t n_src = plan.src_indices.size();
    const std::size_t n_dst = plan.dst_indices.size();
    if (r > n_src)
        throw RangeError("merge count r = " + std::to_string(r) + " exceeds the " +
                         std::to_string(n_src) + " src tokens");

    const KernelTable& kt = kernels_for(isa);
    const std::size_t dim = tokens.dim();
    // Norms and the final division in double, rounded once: an exact tie
    // (parallel tokens, equal cosines) stays a tie instead of picking up
    // float rounding that depends on operand order.
    std::vector<double> norm(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float* t = tokens.token(i).data();
        norm[i] = std::sqrt(static_cast<double>(kt.dot(t, t, dim)));
    }

    std::vector<float> best_sim(n_src, -std::numeric_limits<float>::infinity());
    std::vector<std::size_t> best_dst(n_src, plan.dst_indices.front());
    for (std::size_t d0 = 0; d0 < n_dst; d0 += kDstTile) {
        const std::size_t d1 = std::min(n_dst, d0 + kDstTile);
        for (std::size_t s = 0; s < n_src; ++s) {
            const std::size_t si = plan.src_indices[s];
            const float* a = tokens.token(si).data();
            for (std::size_t d = d0; d < d1; ++d) {
                const std::size_t di = plan.dst_indices[d];
                const double denom = norm[si] * norm[di];
                const float raw =
                    denom > 0.0 ? static_cast<float>(kt.dot(a, tokens.token(di).data(), dim) / denom) : 0.0f;
                const float sim = std::clamp(raw, -1.0f, 1.0f);
                if (sim > best_sim[s]) {
                    best_sim[s] = sim;
                    best_dst[s] = di;
                }
            }
        }
    }
    counters().similarity_pairs += static_cast<std::uint64_t>(n_src) * n_dst;

    std::vector<std::size_t> order(n_src);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return best_sim[a] > best_sim[b]; });
    plan.matches.reserve(r);
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t s = order[i];
        plan.matches.push_back({plan.src_indices[s], best_dst[s], best_sim[s]});
    }
    return plan;
}

TokenRows tome_merge(const TokenGrid& tokens, const TomePlan& plan)
{
    check_plan_shape(plan, tokens.height(), tokens.width());
    const std::size_t dim = tokens.dim();
    const auto slot = dst_slots(plan);

    std::vector<std::vector<std::size_t>> sources(plan.dst_indices.size());
    std::vector<bool> merged_away(plan.tokens(), false);
    for (const auto& m : plan.matches) {
        if (m.src >= plan.tokens() || m.dst >= plan.tokens() || slot[m.dst] == kNone ||
            slot[m.src] != kNone)
            throw ShapeError("merge plan match is not a src -> dst pair");
        sources[slot[m.dst]].push_back(m.src);
        merged_away[m.src] = true;
    }

    TokenRows out{dim, {}};
    out.data.reserve((plan.tokens() - plan.r()) * dim);
    std::vector<double> sum(dim);
    for (std::size_t k = 0; k < plan.dst_indices.size(); ++k) {
        auto& group = sources[k];
        std::sort(group.begin(), group.end());
        const auto dst = tokens.token(plan.dst_indices[k]);
        std::copy(dst.begin(), dst.end(), sum.begin());
        for (std::size_t s : group) {
            const auto src = tokens.token(s);
            for (std::size_t c = 0; c < dim; ++c)
                sum[c] += src[c];
        }
        const double count = static_cast<double>(group.size() + 1);
        for (std::size_t c = 0; c < dim; ++c)
            out.data.push_back(static_cast<float>(sum[c] / count));
    }
    for (std::size_t s : plan.src_indices) {
        if (merged_away[s])
            continue;
        const auto src = tokens.token(s);
        out.data.insert(out.data.end(), src.begin(), src.end());
    }
    return out;
}

TokenGrid tome_unmerge(const TokenRows& merged, const TomePlan& plan)
{
    check_plan_shape(plan, plan.height, plan.width);
    const std::size_t expected = plan.tokens() - plan.r();
    if (merged.dim == 0 || merged.count() != expected)
        throw CountMismatchError("unmerge expects " + std::to_string(expected) + " rows, got " +
                                 std::to_string(merged.count()));
    const std::size_t dim = merged.dim;
    const auto slot = dst_slots(plan);

    std::vector<std::size_t> merged_into(plan.tokens(), kNone);
    for (const auto& m : plan.matches) {
        if (m.src >= plan.tokens() || m.dst >= plan.tokens() || slot[m.dst] == kNone)
            throw ShapeError("merge plan match is not a src -> dst pair");
        merged_into[m.src] = m.dst;
    }

    TokenGrid out(plan.height, plan.width, dim);
    auto put = [&](std::size_t position, std::size_t row) {
        const auto src = merged.row(row);
        std::copy(src.begin(), src.end(), out.token(position).begin());
    };
    for (std::size_t k = 0; k < plan.dst_indices.size(); ++k)
        put(plan.dst_indices[k], k);
    std::size_t next = plan.dst_indices.size();
    for (std::size_t s : plan.src_indices) {
        if (merged_into[s] == kNone)
            put(s, next++);
        else
            put(s, slot[merged_into[s]]);
    }
    return out;
}

AttentionOutput tome_attention(const TokenGrid& tokens, std::size_t r, std::uint64_t seed,
                               const AttentionConfig& cfg, const RunOptions& opts)
{
    const TomePlan plan = bipartite_soft_matching(tokens, r, seed, opts.isa);
    const std::size_t m = tokens.tokens() - r;
    const TokenGrid merged = unflatten(tome_merge(tokens, plan), 1, m);

    RunOptions inner = opts;
    inner.probe_row_max = false;
    AttentionOutput attended = dense_attention(merged, merged, merged, cfg, inner);
    return {tome_unmerge(flatten(attended.out), plan), std::nullopt};
}

std::size_t tome_merge_count(MergeRatio ratio, std::size_t height, std::size_t width)
{
    const std::size_t n = height * width;
    const std::size_t n_src = n - (height / 2) * (width / 2);
    const auto r = static_cast<std::size_t>(std::llround(ratio.value() * static_cast<double>(n)));
    return std::min(r, n_src);
}

} // namespace todo
