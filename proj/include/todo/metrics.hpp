#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "todo/grid.hpp"
#include "todo/kernels.hpp"

namespace todo {

/// Single-channel image, row-major. Multi-channel images are handled as one
/// plane per channel.
struct ImagePlane {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> pixels;

    ImagePlane() = default;
    /// Validates that pixels.size() == height * width.
    ImagePlane(std::size_t height, std::size_t width, std::vector<float> pixels);

    float at(std::size_t y, std::size_t x) const noexcept { return pixels[y * width + x]; }
};

/// Channel `c` of every token as an image plane.
ImagePlane channel_plane(const TokenGrid& grid, std::size_t channel);

/// Mean of squared differences, accumulated in double.
double mse(const ImagePlane& a, const ImagePlane& b);
double mse(const TokenGrid& a, const TokenGrid& b);

/// Mean absolute response of the 4-neighbour Laplacian
///   [[0,-1,0],[-1,4,-1],[0,-1,0]]
/// over the valid (h-2) x (w-2) interior. Needs h, w >= 3.
double hpf_magnitude(const ImagePlane& img);
/// Mean of hpf_magnitude over the grid's channel planes.
double hpf_magnitude(const TokenGrid& grid);

/// <u,v> / (|u| |v|) clamped to [-1, 1]. If either vector is zero the result
/// is 0 and counters().zero_vector_cosines is incremented.
float cosine_similarity(std::span<const float> u, std::span<const float> v, Isa isa = Isa::automatic);

struct SimilarityStats {
    std::size_t neighborhood = 0;
    double min_sim = 0.0;
    double mean_sim = 0.0;
    double max_sim = 0.0;
    double top3_fraction = 0.0;
};

/// Cosine-similarity redundancy of a token grid.
///
/// For every token, the similarities to the other tokens of its centered
/// k x k window (truncated at the borders) give a per-token min, mean and
/// max; the returned min/mean/max are grid-wide averages of those.
/// top3_fraction is the share of tokens whose three most similar tokens in
/// the whole grid (ties to the lower index) all lie in their 3x3 window; it
/// does not depend on k.
SimilarityStats neighborhood_stats(const TokenGrid& grid, std::size_t k, Isa isa = Isa::automatic);

} // namespace todo
