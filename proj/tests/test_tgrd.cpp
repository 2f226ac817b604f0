#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "todo/error.hpp"
#include "todo/tgrd.hpp"

using namespace todo;

namespace {

std::vector<std::uint8_t> header(std::uint32_t version, std::uint32_t h, std::uint32_t w, std::uint32_t d)
{
    std::vector<std::uint8_t> b = {'T', 'G', 'R', 'D'};
    for (std::uint32_t v : {version, h, w, d})
        for (int s = 0; s < 32; s += 8)
            b.push_back(static_cast<std::uint8_t>(v >> s));
    return b;
}

std::size_t offset_of(const std::vector<std::uint8_t>& bytes)
{
    try {
        tgrd::decode(bytes);
    } catch (const FormatError& e) {
        return e.offset();
    }
    FAIL("decode did not throw");
    return 0;
}

} // namespace

TEST_CASE("encode writes the documented little-endian layout")
{
    TokenGrid g(1, 2, 1, {1.0f, -2.5f});
    const auto bytes = tgrd::encode(g);
    auto expected = header(1, 1, 2, 1);
    for (std::uint32_t bits : {0x3F800000u, 0xC0200000u})
        for (int s = 0; s < 32; s += 8)
            expected.push_back(static_cast<std::uint8_t>(bits >> s));
    CHECK(bytes == expected);
}

TEST_CASE("round trip is bitwise stable")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto g = oracle::random_grid(1 + seed % 5, 2 + seed % 3, 1 + seed, seed, 1e3f);
        const auto bytes = tgrd::encode(g);
        CHECK(bytes.size() == tgrd::kHeaderBytes + 4 * g.data().size());
        const auto back = tgrd::decode(bytes);
        CHECK(back.height() == g.height());
        CHECK(back.width() == g.width());
        CHECK(back.dim() == g.dim());
        CHECK(std::memcmp(back.data().data(), g.data().data(), g.data().size_bytes()) == 0);
        CHECK(tgrd::encode(back) == bytes);
    }
}

TEST_CASE("files round trip")
{
    const auto path = std::filesystem::temp_directory_path() / "todo_tgrd_roundtrip.tgrd";
    const auto g = oracle::random_grid(3, 4, 5, 17);
    tgrd::write_file(path, g);
    const auto back = tgrd::read_file(path);
    CHECK(tgrd::encode(back) == tgrd::encode(g));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(tgrd::read_file(path), Error);
}

TEST_CASE("malformed payloads report byte offsets")
{
    const auto good = tgrd::encode(oracle::random_grid(2, 2, 3, 1));

    CHECK(offset_of({}) == 0);
    CHECK(offset_of({'T', 'G', 'R'}) == 3);

    auto bad_magic = good;
    bad_magic[1] = 'X';
    CHECK(offset_of(bad_magic) == 0);

    auto bad_version = good;
    bad_version[4] = 2;
    CHECK(offset_of(bad_version) == 4);

    CHECK(offset_of(header(1, 0, 2, 3)) == 8);
    CHECK(offset_of(header(1, 2, 0, 3)) == 12);
    CHECK(offset_of(header(1, 2, 2, 0)) == 16);

    auto truncated = good;
    truncated.resize(good.size() - 3);
    CHECK(offset_of(truncated) == truncated.size());
    try {
        tgrd::decode(truncated);
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("expected " + std::to_string(good.size())) != std::string::npos);
        CHECK(msg.find("got " + std::to_string(truncated.size())) != std::string::npos);
    }

    auto trailing = good;
    trailing.push_back(0);
    CHECK(offset_of(trailing) == good.size());

    auto nan = good;
    const std::uint32_t qnan = 0x7FC00000u;
    std::memcpy(nan.data() + tgrd::kHeaderBytes + 8, &qnan, 4);
    CHECK(offset_of(nan) == tgrd::kHeaderBytes + 8);

    CHECK(offset_of(header(1, 0xFFFFFFFFu, 0xFFFFFFFFu, 0xFFFFFFFFu)) == 8);
}
