#include <cstring>
#include <numeric>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "todo/counters.hpp"
#include "todo/error.hpp"
#include "todo/grid.hpp"

using namespace todo;

namespace {

TokenGrid index_grid(std::size_t h, std::size_t w)
{
    std::vector<float> v(h * w);
    std::iota(v.begin(), v.end(), 0.0f);
    return TokenGrid(h, w, 1, std::move(v));
}

std::vector<float> values(const TokenGrid& g)
{
    return {g.data().begin(), g.data().end()};
}

} // namespace

TEST_CASE("grid construction validates extents and length")
{
    CHECK_THROWS_AS(TokenGrid(0, 3, 2), ShapeError);
    CHECK_THROWS_AS(TokenGrid(3, 3, 0), ShapeError);
    CHECK_THROWS_AS(TokenGrid(2, 2, 2, std::vector<float>(7)), CountMismatchError);
    TokenGrid g(2, 3, 4);
    CHECK(g.tokens() == 6);
    CHECK(g.data().size() == 24);
    CHECK(g.all_finite());
    g.token(1, 2)[3] = std::numeric_limits<float>::infinity();
    CHECK_FALSE(g.all_finite());
}

TEST_CASE("downsample 4x4 by 2 picks top-left of each cell")
{
    const auto out = nearest_downsample(index_grid(4, 4), {2, 2});
    CHECK(values(out) == std::vector<float>{0, 2, 8, 10});
}

TEST_CASE("downsample 6x6 to 2x2 uses rows and cols 0 and 3")
{
    const auto out = nearest_downsample(index_grid(6, 6), {2, 2});
    CHECK(values(out) == std::vector<float>{0, 3, 18, 21});
}

TEST_CASE("identity downsample is bitwise identical")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto g = oracle::random_grid(3 + seed, 7 - seed, 5, seed);
        CHECK(bitwise_equal(nearest_downsample(g, {g.height(), g.width()}), g));
    }
}

TEST_CASE("downsample rejects bad specs")
{
    const auto g = index_grid(4, 5);
    CHECK_THROWS_AS(nearest_downsample(g, {5, 5}), ShapeError);
    CHECK_THROWS_AS(nearest_downsample(g, {4, 6}), ShapeError);
    CHECK_THROWS_AS(nearest_downsample(g, {0, 2}), ShapeError);
}

TEST_CASE("non-divisible shapes follow the floor rule")
{
    const auto out = nearest_downsample(index_grid(5, 7), {2, 3});
    // rows floor(i*5/2) = {0, 2}; cols floor(j*7/3) = {0, 2, 4}
    CHECK(values(out) == std::vector<float>{0, 2, 4, 14, 16, 18});
}

TEST_CASE("ratio_to_spec examples")
{
    CHECK(ratio_to_spec(MergeRatio(0.75), 128, 128) == DownsampleSpec{64, 64});
    CHECK(ratio_to_spec(MergeRatio(0.9375), 256, 256) == DownsampleSpec{64, 64});
    CHECK(ratio_to_spec(MergeRatio(0.0), 32, 32) == DownsampleSpec{32, 32});
    CHECK(ratio_to_spec(MergeRatio(0.8889), 192, 192) == DownsampleSpec{64, 64});
    CHECK(ratio_to_spec(MergeRatio(0.99), 3, 5) == DownsampleSpec{1, 1});
    CHECK_THROWS_AS(MergeRatio(1.0), RangeError);
    CHECK_THROWS_AS(MergeRatio(-0.1), RangeError);
}

TEST_CASE("integer-factor ratios keep exactly 1/s^2 of the tokens")
{
    const std::pair<double, std::size_t> cases[] = {{0.75, 2}, {0.8889, 3}, {0.9375, 4}};
    for (auto [ratio, s] : cases)
        for (std::size_t mult = 1; mult <= 40; ++mult) {
            const std::size_t h = s * mult, w = s * (mult + 3);
            const auto spec = ratio_to_spec(MergeRatio(ratio), h, w);
            CHECK(spec.out_height * s == h);
            CHECK(spec.out_width * s == w);
        }
}

TEST_CASE("flatten and unflatten")
{
    const auto g = index_grid(2, 3);
    const auto rows = flatten(g);
    REQUIRE(rows.count() == 6);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(rows.row(i)[0] == static_cast<float>(i));

    const auto r = oracle::random_grid(5, 7, 16, 3);
    CHECK(bitwise_equal(unflatten(flatten(r), 5, 7), r));

    TokenRows five{1, std::vector<float>(5)};
    CHECK_THROWS_AS(unflatten(five, 2, 3), CountMismatchError);
}

TEST_CASE("every downsampled token is a copy of some input token")
{
    const auto g = oracle::random_grid(9, 11, 6, 42);
    for (std::size_t oh = 1; oh <= 9; ++oh)
        for (std::size_t ow = 1; ow <= 11; ow += 2) {
            const auto out = nearest_downsample(g, {oh, ow});
            for (std::size_t t = 0; t < out.tokens(); ++t) {
                bool found = false;
                for (std::size_t s = 0; s < g.tokens() && !found; ++s)
                    found = std::memcmp(out.token(t).data(), g.token(s).data(), 6 * sizeof(float)) == 0;
                CHECK(found);
            }
        }
}

TEST_CASE("factor 2 twice equals factor 4 once")
{
    for (std::size_t h : {4u, 8u, 12u, 16u})
        for (std::size_t w : {4u, 8u, 20u}) {
            const auto g = oracle::random_grid(h, w, 3, h * 100 + w);
            const auto twice = nearest_downsample(nearest_downsample(g, {h / 2, w / 2}), {h / 4, w / 4});
            CHECK(bitwise_equal(twice, nearest_downsample(g, {h / 4, w / 4})));
        }
}

TEST_CASE("downsample touches output-many tokens")
{
    const auto g = oracle::random_grid(32, 32, 2, 1);
    reset_counters();
    nearest_downsample(g, {16, 16});
    CHECK(counters().tokens_touched.load() == 256);
    reset_counters();
    nearest_downsample(g, {8, 4});
    CHECK(counters().tokens_touched.load() == 32);
}
