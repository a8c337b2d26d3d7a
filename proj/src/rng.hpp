#pragma once

#include <cstdint>
#include <random>

namespace eovsim::detail {

// Portable draws on top of mt19937_64; the std distributions are not
// specified bit-for-bit across standard libraries.
inline double unit(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t below(std::mt19937_64& rng, std::uint64_t n)
{
    return n == 0 ? 0 : rng() % n;
}

} // namespace eovsim::detail
