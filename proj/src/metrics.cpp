#include "todo/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "todo/counters.hpp"
#include "todo/error.hpp"

namespace todo {

namespace {

float clamp_unit(float x) noexcept
{
    return std::clamp(x, -1.0f, 1.0f);
}

// Three best partners of one token: higher similarity first, then lower index.
struct Top3 {
    std::array<float, 3> sim{-2.0f, -2.0f, -2.0f};
    std::array<std::size_t, 3> index{0, 0, 0};
    std::size_t filled = 0;

    static bool better(float s, std::size_t i, float s_ref, std::size_t i_ref) noexcept
    {
        return s > s_ref || (s == s_ref && i < i_ref);
    }

    void offer(float s, std::size_t i) noexcept
    {
        std::size_t pos = filled;
        while (pos > 0 && better(s, i, sim[pos - 1], index[pos - 1]))
            --pos;
        if (pos >= 3)
            return;
        for (std::size_t k = std::min<std::size_t>(filled, 2); k > pos; --k) {
            sim[k] = sim[k - 1];
            index[k] = index[k - 1];
        }
        sim[pos] = s;
        index[pos] = i;
        filled = std::min<std::size_t>(filled + 1, 3);
    }
};

} // namespace

ImagePlane::ImagePlane(std::size_t h, std::size_t w, std::vector<float> px)
    : height(h), width(w), pixels(std::move(px))
{
    if (pixels.size() != height * width)
        throw CountMismatchError("image plane " + std::to_string(height) + "x" + std::to_string(width) +
                                 " needs " + std::to_string(height * width) + " pixels, got " +
                                 std::to_string(pixels.size()));
}

ImagePlane channel_plane(const TokenGrid& grid, std::size_t channel)
{
    if (channel >= grid.dim())
        throw RangeError("channel " + std::to_string(channel) + " out of range");
    std::vector<float> px(grid.tokens());
    for (std::size_t i = 0; i < px.size(); ++i)
        px[i] = grid.token(i)[channel];
    return ImagePlane(grid.height(), grid.width(), std::move(px));
}

namespace {

double mse_flat(std::span<const float> a, std::span<const float> b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return a.empty() ? 0.0 : acc / static_cast<double>(a.size());
}

} // namespace

double mse(const ImagePlane& a, const ImagePlane& b)
{
    if (a.height != b.height || a.width != b.width || a.pixels.size() != b.pixels.size())
        throw ShapeError("mse needs identical image shapes");
    return mse_flat(a.pixels, b.pixels);
}

double mse(const TokenGrid& a, const TokenGrid& b)
{
    if (!a.same_shape(b))
        throw ShapeError("mse needs identical grid shapes");
    return mse_flat(a.data(), b.data());
}

double hpf_magnitude(const ImagePlane& img)
{
    if (img.height < 3 || img.width < 3)
        throw ShapeError("image too small for a 3x3 high-pass filter: " + std::to_string(img.height) +
                         "x" + std::to_string(img.width));
    double acc = 0.0;
    for (std::size_t y = 1; y + 1 < img.height; ++y)
        for (std::size_t x = 1; x + 1 < img.width; ++x) {
            const double response = 4.0 * img.at(y, x) - img.at(y - 1, x) - img.at(y + 1, x) -
                                    img.at(y, x - 1) - img.at(y, x + 1);
            acc += std::abs(response);
        }
    return acc / static_cast<double>((img.height - 2) * (img.width - 2));
}

double hpf_magnitude(const TokenGrid& grid)
{
    double acc = 0.0;
    for (std::size_t c = 0; c < grid.dim(); ++c)
        acc += hpf_magnitude(channel_plane(grid, c));
    return acc / static_cast<double>(grid.dim());
}

float cosine_similarity(std::span<const float> u, std::span<const float> v, Isa isa)
{
    if (u.size() != v.size())
        throw ShapeError("cosine similarity needs equal dimensions");
    const KernelTable& kt = kernels_for(isa);
    const std::size_t n = u.size();
    const double nu = std::sqrt(static_cast<double>(kt.dot(u.data(), u.data(), n)));
    const double nv = std::sqrt(static_cast<double>(kt.dot(v.data(), v.data(), n)));
    if (nu == 0.0 || nv == 0.0) {
        ++counters().zero_vector_cosines;
        return 0.0f;
    }
    return clamp_unit(static_cast<float>(kt.dot(u.data(), v.data(), n) / (nu * nv)));
}

SimilarityStats neighborhood_stats(const TokenGrid& grid, std::size_t k, Isa isa)
{
    if (k != 3 && k != 5)
        throw RangeError("neighborhood size must be 3 or 5, got " + std::to_string(k));
    const std::size_t h = grid.height();
    const std::size_t w = grid.width();
    if (h < k || w < k)
        throw ShapeError("grid too small for a " + std::to_string(k) + "x" + std::to_string(k) +
                         " neighborhood: " + std::to_string(h) + "x" + std::to_string(w));

    const KernelTable& kt = kernels_for(isa);
    const std::size_t n = grid.tokens();
    const std::size_t dim = grid.dim();
    std::vector<double> norm(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float* t = grid.token(i).data();
        norm[i] = std::sqrt(static_cast<double>(kt.dot(t, t, dim)));
    }
    // Same rounding as cosine_similarity: one double division, one float rounding.
    auto sim = [&](std::size_t i, std::size_t j) {
        if (norm[i] == 0.0 || norm[j] == 0.0)
            return 0.0f;
        return clamp_unit(static_cast<float>(kt.dot(grid.token(i).data(), grid.token(j).data(), dim) /
                                             (norm[i] * norm[j])));
    };

    const std::size_t radius = k / 2;
    double sum_min = 0.0;
    double sum_mean = 0.0;
    double sum_max = 0.0;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t i = y * w + x;
            float lo = std::numeric_limits<float>::infinity();
            float hi = -std::numeric_limits<float>::infinity();
            double total = 0.0;
            std::size_t count = 0;
            for (std::size_t ny = y - std::min(y, radius); ny <= std::min(h - 1, y + radius); ++ny)
                for (std::size_t nx = x - std::min(x, radius); nx <= std::min(w - 1, x + radius); ++nx) {
                    const std::size_t j = ny * w + nx;
                    if (j == i)
                        continue;
                    const float s = sim(i, j);
                    lo = std::min(lo, s);
                    hi = std::max(hi, s);
                    total += s;
                    ++count;
                }
            sum_min += lo;
            sum_max += hi;
            sum_mean += total / static_cast<double>(count);
        }
    }

    std::vector<Top3> best(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const float s = sim(i, j);
            best[i].offer(s, j);
            best[j].offer(s, i);
        }
    std::size_t contained = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = i / w;
        const std::size_t x = i % w;
        const bool all_near = std::all_of(best[i].index.begin(), best[i].index.end(), [&](std::size_t j) {
            const std::size_t jy = j / w;
            const std::size_t jx = j % w;
            return (jy > y ? jy - y : y - jy) <= 1 && (jx > x ? jx - x : x - jx) <= 1;
        });
        contained += all_near ? 1 : 0;
    }

    const double nd = static_cast<double>(n);
    return {k, sum_min / nd, sum_mean / nd, sum_max / nd, static_cast<double>(contained) / nd};
}

} // namespace todo
