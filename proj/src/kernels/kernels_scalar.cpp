// Scalar reference kernels. These define the exact arithmetic sequence the
// SIMD variants must reproduce; see the lane-structure notes in kernels.hpp.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

#include "exp_poly.hpp"
#include "tables.hpp"

namespace todo {

float exp_poly(float x) noexcept
{
    using namespace detail;
    if (x < kExpLow)
        return 0.0f;
    x = std::min(x, kExpHigh);

    const float n = std::floor(std::fma(x, kLog2e, 0.5f));

    float r = std::fma(-n, kLn2Hi, x);
    r = std::fma(-n, kLn2Lo, r);

    float y = kP0;
    y = std::fma(y, r, kP1);
    y = std::fma(y, r, kP2);
    y = std::fma(y, r, kP3);
    y = std::fma(y, r, kP4);
    y = std::fma(y, r, kP5);
    const float z = r * r;
    y = std::fma(y, z, r);
    y = y + 1.0f;

    const auto biased = static_cast<std::uint32_t>(static_cast<std::int32_t>(n) + 127);
    return y * std::bit_cast<float>(biased << 23);
}

namespace {

float dot_scalar(const float* a, const float* b, std::size_t n)
{
    float acc[4][8] = {};
    std::size_t i = 0;
    std::size_t part = 0;
    for (; i + 8 <= n; i += 8, part = (part + 1) & 3)
        for (std::size_t l = 0; l < 8; ++l)
            acc[part][l] = std::fma(a[i + l], b[i + l], acc[part][l]);
    if (i < n) {
        for (std::size_t l = 0; l < 8; ++l) {
            const float av = i + l < n ? a[i + l] : 0.0f;
            const float bv = i + l < n ? b[i + l] : 0.0f;
            acc[part][l] = std::fma(av, bv, acc[part][l]);
        }
    }
    float v[8];
    for (std::size_t l = 0; l < 8; ++l)
        v[l] = ((acc[0][l] + acc[1][l]) + acc[2][l]) + acc[3][l];
    float t[4];
    for (std::size_t l = 0; l < 4; ++l)
        t[l] = v[l] + v[l + 4];
    return (t[0] + t[2]) + (t[1] + t[3]);
}

float max_scalar(const float* x, std::size_t n)
{
    float m = x[0];
    for (std::size_t i = 1; i < n; ++i)
        m = std::max(m, x[i]);
    return m;
}

double exp_shift_sum_scalar(const float* x, float shift, float* out, std::size_t n)
{
    double lanes[8] = {};
    for (std::size_t i = 0; i < n; ++i) {
        const float e = exp_poly(x[i] - shift);
        out[i] = e;
        lanes[i & 7] = lanes[i & 7] + static_cast<double>(e);
    }
    double t[4];
    for (std::size_t l = 0; l < 4; ++l)
        t[l] = lanes[l] + lanes[l + 4];
    return (t[0] + t[2]) + (t[1] + t[3]);
}

void scores_scalar(const float* q, const float* panels, std::size_t head_dim, std::size_t n_keys,
                   float scale, float* out)
{
    for (std::size_t base = 0; base < n_keys; base += kKeyPanel) {
        const float* panel = panels + base * head_dim;
        const std::size_t count = std::min(kKeyPanel, n_keys - base);
        for (std::size_t l = 0; l < count; ++l) {
            float acc = 0.0f;
            for (std::size_t c = 0; c < head_dim; ++c)
                acc = std::fma(q[c], panel[c * kKeyPanel + l], acc);
            out[base + l] = acc * scale;
        }
    }
}

void scores_x2_scalar(const float* q0, const float* q1, const float* panels, std::size_t head_dim,
                      std::size_t n_keys, float scale, float* out0, float* out1)
{
    scores_scalar(q0, panels, head_dim, n_keys, scale, out0);
    scores_scalar(q1, panels, head_dim, n_keys, scale, out1);
}

void accumulate_rows_scalar(const float* w, const float* rows, std::size_t n, std::size_t width,
                            float* acc)
{
    for (std::size_t j = 0; j < n; ++j) {
        const float wj = w[j];
        const float* row = rows + j * width;
        for (std::size_t c = 0; c < width; ++c)
            acc[c] = std::fma(wj, row[c], acc[c]);
    }
}

void accumulate_rows_x2_scalar(const float* w0, const float* w1, const float* rows, std::size_t n,
                               std::size_t width, float* acc0, float* acc1)
{
    accumulate_rows_scalar(w0, rows, n, width, acc0);
    accumulate_rows_scalar(w1, rows, n, width, acc1);
}

void scale_scalar(float a, float* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        y[i] = y[i] * a;
}

constexpr KernelTable kScalar{
    .isa = Isa::scalar,
    .dot = dot_scalar,
    .max = max_scalar,
    .exp_shift_sum = exp_shift_sum_scalar,
    .scores = scores_scalar,
    .scores_x2 = scores_x2_scalar,
    .accumulate_rows = accumulate_rows_scalar,
    .accumulate_rows_x2 = accumulate_rows_x2_scalar,
    .scale = scale_scalar,
};

} // namespace

const KernelTable& scalar_kernels() noexcept
{
    return kScalar;
}

} // namespace todo
