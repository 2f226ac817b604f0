#pragma once

// TGRD: little-endian binary container for one token grid.
//
//   offset  size  field
//   0       4     magic "TGRD"
//   4       4     u32 format version (1)
//   8       4     u32 height
//   12      4     u32 width
//   16      4     u32 dim
//   20      4*N   f32 values, N = height * width * dim, grid layout order
//
// Nothing may follow the payload.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "todo/grid.hpp"

namespace todo::tgrd {

inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 20;

std::vector<std::uint8_t> encode(const TokenGrid& grid);

/// Throws FormatError carrying the byte offset of the first problem.
TokenGrid decode(std::span<const std::uint8_t> bytes);

/// Throws Error if the file cannot be opened or written.
void write_file(const std::filesystem::path& path, const TokenGrid& grid);
TokenGrid read_file(const std::filesystem::path& path);

} // namespace todo::tgrd
