#pragma once

#include <cstdint>
#include <string_view>

namespace taxon {

// XXH64 (Yann Collet's xxHash, 64-bit variant). Reads input as
// little-endian regardless of host byte order so results are portable.
std::uint64_t xxh64(std::string_view data, std::uint64_t seed) noexcept;

}  // namespace taxon
