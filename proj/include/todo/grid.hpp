#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace todo {

/// An h x w grid of dim-channel f32 tokens.
///
/// Row-major: channel c of token (y, x) lives at data[(y * width + x) * dim + c].
/// Flattening the grid gives the n = h * w token rows of Q, K or V.
class TokenGrid {
public:
    /// Zero-filled grid. All extents must be positive.
    TokenGrid(std::size_t height, std::size_t width, std::size_t dim);
    /// Takes ownership of `data`; its length must equal height * width * dim.
    TokenGrid(std::size_t height, std::size_t width, std::size_t dim, std::vector<float> data);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t tokens() const noexcept { return height_ * width_; }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    std::span<const float> token(std::size_t index) const noexcept
    {
        return {data_.data() + index * dim_, dim_};
    }
    std::span<float> token(std::size_t index) noexcept
    {
        return {data_.data() + index * dim_, dim_};
    }
    std::span<const float> token(std::size_t y, std::size_t x) const noexcept
    {
        return token(y * width_ + x);
    }
    std::span<float> token(std::size_t y, std::size_t x) noexcept
    {
        return token(y * width_ + x);
    }

    bool all_finite() const noexcept;
    bool same_shape(const TokenGrid& other) const noexcept
    {
        return height_ == other.height_ && width_ == other.width_ && dim_ == other.dim_;
    }

    /// Releases the underlying buffer, leaving the grid empty-but-shaped.
    std::vector<float> release() && { return std::move(data_); }

private:
    std::size_t height_;
    std::size_t width_;
    std::size_t dim_;
    std::vector<float> data_;
};

/// Same shape and identical bit patterns (distinguishes -0.0 and NaN payloads).
bool bitwise_equal(const TokenGrid& a, const TokenGrid& b) noexcept;

/// A flat sequence of tokens with no spatial arrangement.
struct TokenRows {
    std::size_t dim = 0;
    std::vector<float> data;

    std::size_t count() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
    std::span<const float> row(std::size_t i) const noexcept { return {data.data() + i * dim, dim}; }
    std::span<float> row(std::size_t i) noexcept { return {data.data() + i * dim, dim}; }
};

/// Target shape of the nearest-neighbor operator D.
struct DownsampleSpec {
    std::size_t out_height = 0;
    std::size_t out_width = 0;

    bool is_identity_for(std::size_t height, std::size_t width) const noexcept
    {
        return out_height == height && out_width == width;
    }
    friend bool operator==(const DownsampleSpec&, const DownsampleSpec&) = default;
};

/// Proportion of tokens removed, in [0, 1).
class MergeRatio {
public:
    explicit MergeRatio(double ratio);
    double value() const noexcept { return ratio_; }

private:
    double ratio_;
};

/// Strided nearest-neighbor sampling. Output token (i, j) is a copy of input
/// token (floor(i * h / out_h), floor(j * w / out_w)). Touches only the
/// selected tokens.
TokenGrid nearest_downsample(const TokenGrid& grid, const DownsampleSpec& spec);

/// Per-axis size max(1, round(extent * sqrt(1 - ratio))).
DownsampleSpec ratio_to_spec(MergeRatio ratio, std::size_t height, std::size_t width);

/// Source row index used by nearest_downsample for output row `out_index`.
inline std::size_t nearest_source_index(std::size_t out_index, std::size_t in_extent,
                                        std::size_t out_extent) noexcept
{
    return out_index * in_extent / out_extent;
}

TokenRows flatten(const TokenGrid& grid);
TokenGrid unflatten(TokenRows rows, std::size_t height, std::size_t width);

} // namespace todo
