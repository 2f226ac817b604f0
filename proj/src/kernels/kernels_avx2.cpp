// AVX2 + FMA kernels. Every multiply-add is an explicit fused op, matching the
// std::fma calls in the scalar reference.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "exp_poly.hpp"
#include "tables.hpp"

namespace todo::detail {

namespace {

__m256i tail_mask(std::size_t count) noexcept
{
    alignas(32) static constexpr std::int32_t kMask[16] = {-1, -1, -1, -1, -1, -1, -1, -1,
                                                           0,  0,  0,  0,  0,  0,  0,  0};
    return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kMask + 8 - count));
}

// ((l0+l4)+(l2+l6)) + ((l1+l5)+(l3+l7))
float hsum(__m256 v) noexcept
{
    const __m128 t = _mm_add_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
    const __m128 u = _mm_add_ps(t, _mm_movehl_ps(t, t));
    return _mm_cvtss_f32(_mm_add_ss(u, _mm_shuffle_ps(u, u, 1)));
}

__m256 exp8(__m256 x) noexcept
{
    const __m256 underflow = _mm256_cmp_ps(x, _mm256_set1_ps(kExpLow), _CMP_LT_OQ);
    x = _mm256_min_ps(x, _mm256_set1_ps(kExpHigh));

    const __m256 t = _mm256_fmadd_ps(x, _mm256_set1_ps(kLog2e), _mm256_set1_ps(0.5f));
    const __m256 n = _mm256_floor_ps(t);

    __m256 r = _mm256_fnmadd_ps(n, _mm256_set1_ps(kLn2Hi), x);
    r = _mm256_fnmadd_ps(n, _mm256_set1_ps(kLn2Lo), r);

    __m256 y = _mm256_set1_ps(kP0);
    y = _mm256_fmadd_ps(y, r, _mm256_set1_ps(kP1));
    y = _mm256_fmadd_ps(y, r, _mm256_set1_ps(kP2));
    y = _mm256_fmadd_ps(y, r, _mm256_set1_ps(kP3));
    y = _mm256_fmadd_ps(y, r, _mm256_set1_ps(kP4));
    y = _mm256_fmadd_ps(y, r, _mm256_set1_ps(kP5));
    const __m256 z = _mm256_mul_ps(r, r);
    y = _mm256_fmadd_ps(y, z, r);
    y = _mm256_add_ps(y, _mm256_set1_ps(1.0f));

    const __m256i biased = _mm256_add_epi32(_mm256_cvtps_epi32(n), _mm256_set1_epi32(127));
    const __m256 pow2n = _mm256_castsi256_ps(_mm256_slli_epi32(biased, 23));
    return _mm256_andnot_ps(underflow, _mm256_mul_ps(y, pow2n));
}

float dot_avx2(const float* a, const float* b, std::size_t n)
{
    __m256 acc[4] = {_mm256_setzero_ps(), _mm256_setzero_ps(), _mm256_setzero_ps(),
                     _mm256_setzero_ps()};
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        acc[0] = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc[0]);
        acc[1] = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc[1]);
        acc[2] = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 16), _mm256_loadu_ps(b + i + 16), acc[2]);
        acc[3] = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 24), _mm256_loadu_ps(b + i + 24), acc[3]);
    }
    std::size_t part = 0;
    for (; i + 8 <= n; i += 8, ++part)
        acc[part] = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc[part]);
    if (i < n) {
        const __m256i mask = tail_mask(n - i);
        acc[part] = _mm256_fmadd_ps(_mm256_maskload_ps(a + i, mask), _mm256_maskload_ps(b + i, mask), acc[part]);
    }
    return hsum(_mm256_add_ps(_mm256_add_ps(_mm256_add_ps(acc[0], acc[1]), acc[2]), acc[3]));
}

float max_avx2(const float* x, std::size_t n)
{
    std::size_t i = 0;
    float m = x[0];
    if (n >= 8) {
        __m256 v = _mm256_loadu_ps(x);
        for (i = 8; i + 8 <= n; i += 8)
            v = _mm256_max_ps(v, _mm256_loadu_ps(x + i));
        alignas(32) float lanes[8];
        _mm256_store_ps(lanes, v);
        m = *std::max_element(lanes, lanes + 8);
    }
    for (; i < n; ++i)
        m = std::max(m, x[i]);
    return m;
}

double exp_shift_sum_avx2(const float* x, float shift, float* out, std::size_t n)
{
    const __m256 vshift = _mm256_set1_ps(shift);
    __m256d lo = _mm256_setzero_pd();
    __m256d hi = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m256 e0 = exp8(_mm256_sub_ps(_mm256_loadu_ps(x + i), vshift));
        const __m256 e1 = exp8(_mm256_sub_ps(_mm256_loadu_ps(x + i + 8), vshift));
        _mm256_storeu_ps(out + i, e0);
        _mm256_storeu_ps(out + i + 8, e1);
        lo = _mm256_add_pd(lo, _mm256_cvtps_pd(_mm256_castps256_ps128(e0)));
        hi = _mm256_add_pd(hi, _mm256_cvtps_pd(_mm256_extractf128_ps(e0, 1)));
        lo = _mm256_add_pd(lo, _mm256_cvtps_pd(_mm256_castps256_ps128(e1)));
        hi = _mm256_add_pd(hi, _mm256_cvtps_pd(_mm256_extractf128_ps(e1, 1)));
    }
    for (; i + 8 <= n; i += 8) {
        const __m256 e = exp8(_mm256_sub_ps(_mm256_loadu_ps(x + i), vshift));
        _mm256_storeu_ps(out + i, e);
        lo = _mm256_add_pd(lo, _mm256_cvtps_pd(_mm256_castps256_ps128(e)));
        hi = _mm256_add_pd(hi, _mm256_cvtps_pd(_mm256_extractf128_ps(e, 1)));
    }
    alignas(32) double lanes[8];
    _mm256_store_pd(lanes, lo);
    _mm256_store_pd(lanes + 4, hi);
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

void scores_avx2(const float* q, const float* panels, std::size_t head_dim, std::size_t n_keys,
                 float scale, float* out)
{
    static_assert(kKeyPanel == 32);
    const __m256 vscale = _mm256_set1_ps(scale);
    for (std::size_t base = 0; base < n_keys; base += kKeyPanel) {
        const float* panel = panels + base * head_dim;
        __m256 a0 = _mm256_setzero_ps();
        __m256 a1 = _mm256_setzero_ps();
        __m256 a2 = _mm256_setzero_ps();
        __m256 a3 = _mm256_setzero_ps();
        for (std::size_t c = 0; c < head_dim; ++c) {
            const __m256 qc = _mm256_set1_ps(q[c]);
            const float* row = panel + c * kKeyPanel;
            a0 = _mm256_fmadd_ps(qc, _mm256_loadu_ps(row), a0);
            a1 = _mm256_fmadd_ps(qc, _mm256_loadu_ps(row + 8), a1);
            a2 = _mm256_fmadd_ps(qc, _mm256_loadu_ps(row + 16), a2);
            a3 = _mm256_fmadd_ps(qc, _mm256_loadu_ps(row + 24), a3);
        }
        const std::size_t count = std::min(kKeyPanel, n_keys - base);
        float* dst = out + base;
        alignas(32) float tmp[kKeyPanel];
        if (count < kKeyPanel)
            dst = tmp;
        _mm256_storeu_ps(dst, _mm256_mul_ps(a0, vscale));
        _mm256_storeu_ps(dst + 8, _mm256_mul_ps(a1, vscale));
        _mm256_storeu_ps(dst + 16, _mm256_mul_ps(a2, vscale));
        _mm256_storeu_ps(dst + 24, _mm256_mul_ps(a3, vscale));
        if (count < kKeyPanel)
            std::copy_n(tmp, count, out + base);
    }
}

void scores_x2_avx2(const float* q0, const float* q1, const float* panels, std::size_t head_dim,
                    std::size_t n_keys, float scale, float* out0, float* out1)
{
    const __m256 vscale = _mm256_set1_ps(scale);
    for (std::size_t base = 0; base < n_keys; base += kKeyPanel) {
        const float* panel = panels + base * head_dim;
        __m256 a[4] = {_mm256_setzero_ps(), _mm256_setzero_ps(), _mm256_setzero_ps(), _mm256_setzero_ps()};
        __m256 b[4] = {_mm256_setzero_ps(), _mm256_setzero_ps(), _mm256_setzero_ps(), _mm256_setzero_ps()};
        for (std::size_t c = 0; c < head_dim; ++c) {
            const __m256 x0 = _mm256_set1_ps(q0[c]);
            const __m256 x1 = _mm256_set1_ps(q1[c]);
            const float* row = panel + c * kKeyPanel;
            for (int v = 0; v < 4; ++v) {
                const __m256 k = _mm256_loadu_ps(row + 8 * v);
                a[v] = _mm256_fmadd_ps(x0, k, a[v]);
                b[v] = _mm256_fmadd_ps(x1, k, b[v]);
            }
        }
        const std::size_t count = std::min(kKeyPanel, n_keys - base);
        alignas(32) float tmp0[kKeyPanel];
        alignas(32) float tmp1[kKeyPanel];
        float* d0 = count < kKeyPanel ? tmp0 : out0 + base;
        float* d1 = count < kKeyPanel ? tmp1 : out1 + base;
        for (int v = 0; v < 4; ++v) {
            _mm256_storeu_ps(d0 + 8 * v, _mm256_mul_ps(a[v], vscale));
            _mm256_storeu_ps(d1 + 8 * v, _mm256_mul_ps(b[v], vscale));
        }
        if (count < kKeyPanel) {
            std::copy_n(tmp0, count, out0 + base);
            std::copy_n(tmp1, count, out1 + base);
        }
    }
}

// Keeps NV accumulator vectors in registers across the whole key loop.
template <int NV>
void accumulate_block(const float* w, const float* rows, std::size_t n, std::size_t width,
                      float* acc)
{
    __m256 a[NV];
    for (int v = 0; v < NV; ++v)
        a[v] = _mm256_loadu_ps(acc + 8 * v);
    for (std::size_t j = 0; j < n; ++j) {
        const __m256 wj = _mm256_set1_ps(w[j]);
        const float* row = rows + j * width;
        for (int v = 0; v < NV; ++v)
            a[v] = _mm256_fmadd_ps(wj, _mm256_loadu_ps(row + 8 * v), a[v]);
    }
    for (int v = 0; v < NV; ++v)
        _mm256_storeu_ps(acc + 8 * v, a[v]);
}

void accumulate_rows_avx2(const float* w, const float* rows, std::size_t n, std::size_t width,
                          float* acc)
{
    std::size_t c = 0;
    for (; c + 64 <= width; c += 64)
        accumulate_block<8>(w, rows + c, n, width, acc + c);
    switch ((width - c) / 8) {
    case 7: accumulate_block<7>(w, rows + c, n, width, acc + c); break;
    case 6: accumulate_block<6>(w, rows + c, n, width, acc + c); break;
    case 5: accumulate_block<5>(w, rows + c, n, width, acc + c); break;
    case 4: accumulate_block<4>(w, rows + c, n, width, acc + c); break;
    case 3: accumulate_block<3>(w, rows + c, n, width, acc + c); break;
    case 2: accumulate_block<2>(w, rows + c, n, width, acc + c); break;
    case 1: accumulate_block<1>(w, rows + c, n, width, acc + c); break;
    default: break;
    }
    c += (width - c) / 8 * 8;
    for (; c < width; ++c) {
        float s = acc[c];
        for (std::size_t j = 0; j < n; ++j)
            s = std::fma(w[j], rows[j * width + c], s);
        acc[c] = s;
    }
}

template <int NV>
void accumulate_block_x2(const float* w0, const float* w1, const float* rows, std::size_t n,
                         std::size_t width, float* acc0, float* acc1)
{
    __m256 a[NV];
    __m256 b[NV];
    for (int v = 0; v < NV; ++v) {
        a[v] = _mm256_loadu_ps(acc0 + 8 * v);
        b[v] = _mm256_loadu_ps(acc1 + 8 * v);
    }
    for (std::size_t j = 0; j < n; ++j) {
        const __m256 x0 = _mm256_set1_ps(w0[j]);
        const __m256 x1 = _mm256_set1_ps(w1[j]);
        const float* row = rows + j * width;
        for (int v = 0; v < NV; ++v) {
            const __m256 r = _mm256_loadu_ps(row + 8 * v);
            a[v] = _mm256_fmadd_ps(x0, r, a[v]);
            b[v] = _mm256_fmadd_ps(x1, r, b[v]);
        }
    }
    for (int v = 0; v < NV; ++v) {
        _mm256_storeu_ps(acc0 + 8 * v, a[v]);
        _mm256_storeu_ps(acc1 + 8 * v, b[v]);
    }
}

void accumulate_rows_x2_avx2(const float* w0, const float* w1, const float* rows, std::size_t n,
                             std::size_t width, float* acc0, float* acc1)
{
    std::size_t c = 0;
    for (; c + 48 <= width; c += 48)
        accumulate_block_x2<6>(w0, w1, rows + c, n, width, acc0 + c, acc1 + c);
    switch ((width - c) / 8) {
    case 5: accumulate_block_x2<5>(w0, w1, rows + c, n, width, acc0 + c, acc1 + c); break;
    case 4: accumulate_block_x2<4>(w0, w1, rows + c, n, width, acc0 + c, acc1 + c); break;
    case 3: accumulate_block_x2<3>(w0, w1, rows + c, n, width, acc0 + c, acc1 + c); break;
    case 2: accumulate_block_x2<2>(w0, w1, rows + c, n, width, acc0 + c, acc1 + c); break;
    case 1: accumulate_block_x2<1>(w0, w1, rows + c, n, width, acc0 + c, acc1 + c); break;
    default: break;
    }
    c += (width - c) / 8 * 8;
    for (; c < width; ++c) {
        float s0 = acc0[c];
        float s1 = acc1[c];
        for (std::size_t j = 0; j < n; ++j) {
            s0 = std::fma(w0[j], rows[j * width + c], s0);
            s1 = std::fma(w1[j], rows[j * width + c], s1);
        }
        acc0[c] = s0;
        acc1[c] = s1;
    }
}

void scale_avx2(float a, float* y, std::size_t n)
{
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_loadu_ps(y + i), va));
    for (; i < n; ++i)
        y[i] = y[i] * a;
}

constexpr KernelTable kAvx2{
    .isa = Isa::avx2,
    .dot = dot_avx2,
    .max = max_avx2,
    .exp_shift_sum = exp_shift_sum_avx2,
    .scores = scores_avx2,
    .scores_x2 = scores_x2_avx2,
    .accumulate_rows = accumulate_rows_avx2,
    .accumulate_rows_x2 = accumulate_rows_x2_avx2,
    .scale = scale_avx2,
};

} // namespace

const KernelTable& avx2_kernels() noexcept
{
    return kAvx2;
}

} // namespace todo::detail
