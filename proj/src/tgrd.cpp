#include "todo/tgrd.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "todo/error.hpp"

namespace todo::tgrd {

namespace {

constexpr char kMagic[4] = {'T', 'G', 'R', 'D'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int shift = 0; shift < 32; shift += 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset)
{
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
        v |= static_cast<std::uint32_t>(bytes[offset + b]) << (8 * b);
    return v;
}

std::uint32_t checked_u32(std::size_t v, const char* what)
{
    if (v > std::numeric_limits<std::uint32_t>::max())
        throw OverflowError(std::string("TGRD ") + what + " does not fit in u32");
    return static_cast<std::uint32_t>(v);
}

} // namespace

std::vector<std::uint8_t> encode(const TokenGrid& grid)
{
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + grid.data().size_bytes());
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u32(out, kVersion);
    put_u32(out, checked_u32(grid.height(), "height"));
    put_u32(out, checked_u32(grid.width(), "width"));
    put_u32(out, checked_u32(grid.dim(), "dim"));
    for (float v : grid.data())
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

TokenGrid decode(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < kHeaderBytes)
        throw FormatError("TGRD header truncated at byte offset " + std::to_string(bytes.size()) +
                              ": expected " + std::to_string(kHeaderBytes) + " header bytes, got " +
                              std::to_string(bytes.size()),
                          bytes.size());
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("bad TGRD magic at byte offset 0", 0);
    const std::uint32_t version = get_u32(bytes, 4);
    if (version != kVersion)
        throw FormatError("unsupported TGRD version " + std::to_string(version) + " at byte offset 4", 4);

    const std::uint64_t height = get_u32(bytes, 8);
    const std::uint64_t width = get_u32(bytes, 12);
    const std::uint64_t dim = get_u32(bytes, 16);
    if (height == 0)
        throw FormatError("TGRD height is zero at byte offset 8", 8);
    if (width == 0)
        throw FormatError("TGRD width is zero at byte offset 12", 12);
    if (dim == 0)
        throw FormatError("TGRD dim is zero at byte offset 16", 16);

    std::uint64_t count = 0;
    std::uint64_t expected = 0;
    if (__builtin_mul_overflow(height * width, dim, &count) ||
        __builtin_mul_overflow(count, std::uint64_t{4}, &expected) ||
        __builtin_add_overflow(expected, std::uint64_t{kHeaderBytes}, &expected))
        throw FormatError("TGRD shape overflows at byte offset 8", 8);

    if (bytes.size() < expected)
        throw FormatError("TGRD payload truncated at byte offset " + std::to_string(bytes.size()) +
                              ": expected " + std::to_string(expected) + " bytes, got " +
                              std::to_string(bytes.size()),
                          bytes.size());
    if (bytes.size() > expected)
        throw FormatError("TGRD has " + std::to_string(bytes.size() - expected) +
                              " trailing bytes at byte offset " + std::to_string(expected) +
                              ": expected " + std::to_string(expected) + " bytes, got " +
                              std::to_string(bytes.size()),
                          expected);

    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t offset = kHeaderBytes + 4 * i;
        data[i] = std::bit_cast<float>(get_u32(bytes, offset));
        if (!std::isfinite(data[i]))
            throw FormatError("non-finite TGRD value at byte offset " + std::to_string(offset), offset);
    }
    return TokenGrid(height, width, dim, std::move(data));
}

void write_file(const std::filesystem::path& path, const TokenGrid& grid)
{
    const auto bytes = encode(grid);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error("failed writing '" + path.string() + "'");
}

TokenGrid read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open '" + path.string() + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what(), e.offset());
    }
}

} // namespace todo::tgrd
