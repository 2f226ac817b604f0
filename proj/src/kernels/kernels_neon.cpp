// NEON kernels for AArch64. An 8-lane AVX2 vector is modelled as a pair of
// float32x4_t (lanes 0-3, lanes 4-7) so the reduction trees match the scalar
// reference. Multiply-adds use vfmaq/vfmsq, matching std::fma in the scalar code.

#include <arm_neon.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "exp_poly.hpp"
#include "tables.hpp"

namespace todo::detail {

namespace {

struct F8 {
    float32x4_t lo;
    float32x4_t hi;
};

inline F8 zero8() noexcept { return {vdupq_n_f32(0.0f), vdupq_n_f32(0.0f)}; }
inline F8 load8(const float* p) noexcept { return {vld1q_f32(p), vld1q_f32(p + 4)}; }
inline void store8(float* p, F8 v) noexcept
{
    vst1q_f32(p, v.lo);
    vst1q_f32(p + 4, v.hi);
}
inline F8 add8(F8 a, F8 b) noexcept { return {vaddq_f32(a.lo, b.lo), vaddq_f32(a.hi, b.hi)}; }
inline F8 fma8(F8 acc, F8 a, F8 b) noexcept
{
    return {vfmaq_f32(acc.lo, a.lo, b.lo), vfmaq_f32(acc.hi, a.hi, b.hi)};
}
inline F8 dup8(float x) noexcept { return {vdupq_n_f32(x), vdupq_n_f32(x)}; }

// ((l0+l4)+(l2+l6)) + ((l1+l5)+(l3+l7))
float hsum(F8 v) noexcept
{
    const float32x4_t t = vaddq_f32(v.lo, v.hi);
    const float32x2_t u = vadd_f32(vget_low_f32(t), vget_high_f32(t));
    return vget_lane_f32(u, 0) + vget_lane_f32(u, 1);
}

float32x4_t exp4(float32x4_t x) noexcept
{
    const uint32x4_t underflow = vcltq_f32(x, vdupq_n_f32(kExpLow));
    x = vminq_f32(x, vdupq_n_f32(kExpHigh));

    const float32x4_t t = vfmaq_f32(vdupq_n_f32(0.5f), x, vdupq_n_f32(kLog2e));
    const float32x4_t n = vrndmq_f32(t);

    float32x4_t r = vfmsq_f32(x, n, vdupq_n_f32(kLn2Hi));
    r = vfmsq_f32(r, n, vdupq_n_f32(kLn2Lo));

    float32x4_t y = vdupq_n_f32(kP0);
    y = vfmaq_f32(vdupq_n_f32(kP1), y, r);
    y = vfmaq_f32(vdupq_n_f32(kP2), y, r);
    y = vfmaq_f32(vdupq_n_f32(kP3), y, r);
    y = vfmaq_f32(vdupq_n_f32(kP4), y, r);
    y = vfmaq_f32(vdupq_n_f32(kP5), y, r);
    const float32x4_t z = vmulq_f32(r, r);
    y = vfmaq_f32(r, y, z);
    y = vaddq_f32(y, vdupq_n_f32(1.0f));

    const int32x4_t biased = vaddq_s32(vcvtq_s32_f32(n), vdupq_n_s32(127));
    const float32x4_t pow2n = vreinterpretq_f32_s32(vshlq_n_s32(biased, 23));
    const float32x4_t e = vmulq_f32(y, pow2n);
    return vreinterpretq_f32_u32(vbicq_u32(vreinterpretq_u32_f32(e), underflow));
}

float dot_neon(const float* a, const float* b, std::size_t n)
{
    F8 acc[4] = {zero8(), zero8(), zero8(), zero8()};
    std::size_t i = 0;
    std::size_t part = 0;
    for (; i + 8 <= n; i += 8, part = (part + 1) & 3)
        acc[part] = fma8(acc[part], load8(a + i), load8(b + i));
    if (i < n) {
        float ta[8] = {};
        float tb[8] = {};
        std::copy(a + i, a + n, ta);
        std::copy(b + i, b + n, tb);
        acc[part] = fma8(acc[part], load8(ta), load8(tb));
    }
    return hsum(add8(add8(add8(acc[0], acc[1]), acc[2]), acc[3]));
}

float max_neon(const float* x, std::size_t n)
{
    std::size_t i = 0;
    float m = x[0];
    if (n >= 4) {
        float32x4_t v = vld1q_f32(x);
        for (i = 4; i + 4 <= n; i += 4)
            v = vmaxq_f32(v, vld1q_f32(x + i));
        m = vmaxvq_f32(v);
    }
    for (; i < n; ++i)
        m = std::max(m, x[i]);
    return m;
}

double exp_shift_sum_neon(const float* x, float shift, float* out, std::size_t n)
{
    const float32x4_t vshift = vdupq_n_f32(shift);
    float64x2_t lanes2[4] = {vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0),
                             vdupq_n_f64(0.0)};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const float32x4_t e0 = exp4(vsubq_f32(vld1q_f32(x + i), vshift));
        const float32x4_t e1 = exp4(vsubq_f32(vld1q_f32(x + i + 4), vshift));
        vst1q_f32(out + i, e0);
        vst1q_f32(out + i + 4, e1);
        lanes2[0] = vaddq_f64(lanes2[0], vcvt_f64_f32(vget_low_f32(e0)));
        lanes2[1] = vaddq_f64(lanes2[1], vcvt_high_f64_f32(e0));
        lanes2[2] = vaddq_f64(lanes2[2], vcvt_f64_f32(vget_low_f32(e1)));
        lanes2[3] = vaddq_f64(lanes2[3], vcvt_high_f64_f32(e1));
    }
    double lanes[8];
    for (int k = 0; k < 4; ++k)
        vst1q_f64(lanes + 2 * k, lanes2[k]);
    for (; i < n; ++i) {
        const float e = exp_poly(x[i] - shift);
        out[i] = e;
        lanes[i & 7] = lanes[i & 7] + static_cast<double>(e);
    }
    double t[4];
    for (std::size_t l = 0; l < 4; ++l)
        t[l] = lanes[l] + lanes[l + 4];
    return (t[0] + t[2]) + (t[1] + t[3]);
}

void scores_neon(const float* q, const float* panels, std::size_t head_dim, std::size_t n_keys,
                 float scale, float* out)
{
    static_assert(kKeyPanel == 32);
    for (std::size_t base = 0; base < n_keys; base += kKeyPanel) {
        const float* panel = panels + base * head_dim;
        float32x4_t a[8];
        for (auto& v : a)
            v = vdupq_n_f32(0.0f);
        for (std::size_t c = 0; c < head_dim; ++c) {
            const float32x4_t qc = vdupq_n_f32(q[c]);
            const float* row = panel + c * kKeyPanel;
            for (int v = 0; v < 8; ++v)
                a[v] = vfmaq_f32(a[v], qc, vld1q_f32(row + 4 * v));
        }
        const std::size_t count = std::min(kKeyPanel, n_keys - base);
        float tmp[kKeyPanel];
        float* dst = count < kKeyPanel ? tmp : out + base;
        const float32x4_t vscale = vdupq_n_f32(scale);
        for (int v = 0; v < 8; ++v)
            vst1q_f32(dst + 4 * v, vmulq_f32(a[v], vscale));
        if (count < kKeyPanel)
            std::copy_n(tmp, count, out + base);
    }
}

void scores_x2_neon(const float* q0, const float* q1, const float* panels, std::size_t head_dim,
                    std::size_t n_keys, float scale, float* out0, float* out1)
{
    scores_neon(q0, panels, head_dim, n_keys, scale, out0);
    scores_neon(q1, panels, head_dim, n_keys, scale, out1);
}

template <int NV>
void accumulate_block(const float* w, const float* rows, std::size_t n, std::size_t width,
                      float* acc)
{
    float32x4_t a[NV];
    for (int v = 0; v < NV; ++v)
        a[v] = vld1q_f32(acc + 4 * v);
    for (std::size_t j = 0; j < n; ++j) {
        const float32x4_t wj = vdupq_n_f32(w[j]);
        const float* row = rows + j * width;
        for (int v = 0; v < NV; ++v)
            a[v] = vfmaq_f32(a[v], wj, vld1q_f32(row + 4 * v));
    }
    for (int v = 0; v < NV; ++v)
        vst1q_f32(acc + 4 * v, a[v]);
}

void accumulate_rows_neon(const float* w, const float* rows, std::size_t n, std::size_t width,
                          float* acc)
{
    std::size_t c = 0;
    for (; c + 64 <= width; c += 64)
        accumulate_block<16>(w, rows + c, n, width, acc + c);
    for (; c + 16 <= width; c += 16)
        accumulate_block<4>(w, rows + c, n, width, acc + c);
    for (; c + 4 <= width; c += 4)
        accumulate_block<1>(w, rows + c, n, width, acc + c);
    for (; c < width; ++c) {
        float s = acc[c];
        for (std::size_t j = 0; j < n; ++j)
            s = std::fma(w[j], rows[j * width + c], s);
        acc[c] = s;
    }
}

void accumulate_rows_x2_neon(const float* w0, const float* w1, const float* rows, std::size_t n,
                             std::size_t width, float* acc0, float* acc1)
{
    accumulate_rows_neon(w0, rows, n, width, acc0);
    accumulate_rows_neon(w1, rows, n, width, acc1);
}

void scale_neon(float a, float* y, std::size_t n)
{
    const float32x4_t va = vdupq_n_f32(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        vst1q_f32(y + i, vmulq_f32(vld1q_f32(y + i), va));
    for (; i < n; ++i)
        y[i] = y[i] * a;
}

constexpr KernelTable kNeon{
    .isa = Isa::neon,
    .dot = dot_neon,
    .max = max_neon,
    .exp_shift_sum = exp_shift_sum_neon,
    .scores = scores_neon,
    .scores_x2 = scores_x2_neon,
    .accumulate_rows = accumulate_rows_neon,
    .accumulate_rows_x2 = accumulate_rows_x2_neon,
    .scale = scale_neon,
};

} // namespace

const KernelTable& neon_kernels() noexcept
{
    return kNeon;
}

} // namespace todo::detail
