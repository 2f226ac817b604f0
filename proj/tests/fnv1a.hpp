#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>

// 64-bit FNV-1a, lowercase hex.
inline std::string fnv1a_hex(std::span<const std::uint8_t> bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}
