#include "todo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "todo/counters.hpp"
#include "todo/error.hpp"

namespace todo {

namespace {

std::string shape_str(std::size_t h, std::size_t w)
{
    return std::to_string(h) + "x" + std::to_string(w);
}

} // namespace

TokenGrid::TokenGrid(std::size_t height, std::size_t width, std::size_t dim)
    : TokenGrid(height, width, dim, std::vector<float>(height * width * dim, 0.0f))
{
}

TokenGrid::TokenGrid(std::size_t height, std::size_t width, std::size_t dim, std::vector<float> data)
    : height_(height), width_(width), dim_(dim), data_(std::move(data))
{
    if (height == 0 || width == 0 || dim == 0)
        throw ShapeError("token grid extents must be positive, got " + shape_str(height, width) +
                         "x" + std::to_string(dim));
    if (data_.size() != height * width * dim)
        throw CountMismatchError("token grid " + shape_str(height, width) + "x" + std::to_string(dim) +
                                 " needs " + std::to_string(height * width * dim) + " values, got " +
                                 std::to_string(data_.size()));
}

bool TokenGrid::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

bool bitwise_equal(const TokenGrid& a, const TokenGrid& b) noexcept
{
    return a.same_shape(b) &&
           std::memcmp(a.data().data(), b.data().data(), a.data().size_bytes()) == 0;
}

MergeRatio::MergeRatio(double ratio) : ratio_(ratio)
{
    if (!(ratio >= 0.0 && ratio < 1.0))
        throw RangeError("ratio must be in [0,1)");
}

TokenGrid nearest_downsample(const TokenGrid& grid, const DownsampleSpec& spec)
{
    const std::size_t h = grid.height();
    const std::size_t w = grid.width();
    if (spec.out_height == 0 || spec.out_width == 0)
        throw ShapeError("downsample target must be positive, got " +
                         shape_str(spec.out_height, spec.out_width));
    if (spec.out_height > h || spec.out_width > w)
        throw ShapeError("downsample target " + shape_str(spec.out_height, spec.out_width) +
                         " exceeds input " + shape_str(h, w));

    const std::size_t dim = grid.dim();
    std::vector<float> out(spec.out_height * spec.out_width * dim);
    float* dst = out.data();
    for (std::size_t i = 0; i < spec.out_height; ++i) {
        const std::size_t sy = nearest_source_index(i, h, spec.out_height);
        for (std::size_t j = 0; j < spec.out_width; ++j) {
            const std::size_t sx = nearest_source_index(j, w, spec.out_width);
            const auto src = grid.token(sy, sx);
            std::memcpy(dst, src.data(), src.size_bytes());
            dst += dim;
        }
    }
    counters().tokens_touched += spec.out_height * spec.out_width;
    return TokenGrid(spec.out_height, spec.out_width, dim, std::move(out));
}

DownsampleSpec ratio_to_spec(MergeRatio ratio, std::size_t height, std::size_t width)
{
    if (height == 0 || width == 0)
        throw ShapeError("grid extents must be positive, got " + shape_str(height, width));
    const double keep = std::sqrt(1.0 - ratio.value());
    auto axis = [keep](std::size_t extent) {
        const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(extent) * keep));
        return std::clamp<std::size_t>(n, 1, extent);
    };
    return {axis(height), axis(width)};
}

TokenRows flatten(const TokenGrid& grid)
{
    const auto data = grid.data();
    return {grid.dim(), std::vector<float>(data.begin(), data.end())};
}

TokenGrid unflatten(TokenRows rows, std::size_t height, std::size_t width)
{
    if (rows.dim == 0 || rows.data.size() % rows.dim != 0)
        throw CountMismatchError("token rows are not a whole number of dim-" +
                                 std::to_string(rows.dim) + " rows");
    if (rows.count() != height * width)
        throw CountMismatchError("cannot unflatten " + std::to_string(rows.count()) + " rows into " +
                                 shape_str(height, width));
    return TokenGrid(height, width, rows.dim, std::move(rows.data));
}

} // namespace todo
