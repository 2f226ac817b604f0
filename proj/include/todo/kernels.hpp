#pragma once

// Inner-loop kernels behind attention, matching and similarity analysis.
//
// Every kernel has a scalar reference implementation and optional SIMD
// variants (AVX2+FMA on x86-64, NEON on AArch64). All variants are required
// to produce bit-identical results: reductions follow a fixed lane structure
// that the scalar code emulates, every multiply-add is an explicit fused
// operation (std::fma in the scalar code, never left to the compiler), and
// exp uses the same polynomial everywhere. The SIMD variants are therefore
// a pure speed choice and can be selected at runtime without changing any
// output.

#include <cstddef>
#include <string_view>
#include <vector>

namespace todo {

enum class Isa { automatic, scalar, avx2, neon };

std::string_view to_string(Isa isa) noexcept;
/// Parses "auto", "scalar", "avx2", "neon". Throws RangeError otherwise.
Isa parse_isa(std::string_view name);

/// Keys per packed key panel used by `scores`.
inline constexpr std::size_t kKeyPanel = 32;

/// Floats needed to hold `n_keys` keys of width `head_dim` in panel layout.
inline constexpr std::size_t panel_floats(std::size_t n_keys, std::size_t head_dim) noexcept
{
    return (n_keys + kKeyPanel - 1) / kKeyPanel * kKeyPanel * head_dim;
}

struct KernelTable {
    Isa isa;

    /// Sum of a[i] * b[i]. Lane structure: element i is accumulated into
    /// partial (i / 8) % 4, lane i % 8; a trailing partial vector is
    /// zero-padded into the next partial. The 4 x 8 partials are combined
    /// as p0+p1+p2+p3 (left to right), then lanes l and l+4 pairwise, then
    /// ((l0+l2)+(l1+l3)).
    float (*dot)(const float* a, const float* b, std::size_t n);

    /// Largest element; n >= 1.
    float (*max)(const float* x, std::size_t n);

    /// out[i] = exp(x[i] - shift) using `exp_poly`. Returns the sum of the
    /// outputs accumulated in double over 8 lanes (element i into lane
    /// i % 8), combined as lanes l and l+4 pairwise, then ((l0+l2)+(l1+l3)).
    /// `out` may alias `x`.
    double (*exp_shift_sum)(const float* x, float shift, float* out, std::size_t n);

    /// out[j] = scale * sum_c q[c] * key_j[c], fused-accumulated in ascending c, for
    /// keys stored in panel layout: panel p holds keys [32p, 32p + 32) as
    /// head_dim rows of 32 floats (key-minor). Tail panels are zero-padded.
    void (*scores)(const float* q, const float* panels, std::size_t head_dim,
                   std::size_t n_keys, float scale, float* out);

    /// `scores` for two queries at once; each output is bit-identical to
    /// the single-query call.
    void (*scores_x2)(const float* q0, const float* q1, const float* panels,
                      std::size_t head_dim, std::size_t n_keys, float scale, float* out0,
                      float* out1);

    /// acc[c] = fma(w[j], rows[j * width + c], acc[c]) for j = 0 .. n-1 in order.
    void (*accumulate_rows)(const float* w, const float* rows, std::size_t n,
                            std::size_t width, float* acc);

    /// `accumulate_rows` for two weight vectors over the same rows.
    void (*accumulate_rows_x2)(const float* w0, const float* w1, const float* rows,
                               std::size_t n, std::size_t width, float* acc0, float* acc1);

    /// y[i] *= a.
    void (*scale)(float a, float* y, std::size_t n);
};

/// Portable scalar reference kernels.
const KernelTable& scalar_kernels() noexcept;

/// ISAs compiled into this build and supported by the running CPU, scalar first.
std::vector<Isa> available_isas();

/// Kernel table for `isa`; `automatic` picks the widest available variant.
/// Throws RangeError if `isa` is not available.
const KernelTable& kernels_for(Isa isa);

/// exp(x) evaluated by the shared polynomial; 0 for x < -87, x clamped at 88.
/// Relative error below 3e-7 on [-87, 88].
float exp_poly(float x) noexcept;

} // namespace todo
