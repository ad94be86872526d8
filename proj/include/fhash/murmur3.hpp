#pragma once

#include <cstdint>
#include <string_view>

namespace fhash {

// MurmurHash3_x86_32 (Austin Appleby, public domain). Blocks are read
// little-endian regardless of host byte order so results are portable.
std::uint32_t murmur3_32(std::string_view key, std::uint32_t seed) noexcept;

}  // namespace fhash
