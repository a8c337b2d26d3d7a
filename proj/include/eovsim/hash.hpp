#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace eovsim {

// 64-bit FNV-1a over a canonical little-endian byte stream. Stable across
// platforms and runs; not intended to resist forgery.
class Fnv1a64
{
public:
    static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    constexpr void update_byte(std::uint8_t b) noexcept
    {
        state_ ^= b;
        state_ *= kPrime;
    }

    constexpr void update_u64(std::uint64_t v) noexcept
    {
        for (int i = 0; i < 8; ++i)
            update_byte(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    constexpr void update_u32(std::uint32_t v) noexcept
    {
        for (int i = 0; i < 4; ++i)
            update_byte(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    // Length-prefixed so that ("ab","c") and ("a","bc") differ.
    constexpr void update_string(std::string_view s) noexcept
    {
        update_u32(static_cast<std::uint32_t>(s.size()));
        for (char c : s)
            update_byte(static_cast<std::uint8_t>(c));
    }

    constexpr std::uint64_t value() const noexcept { return state_; }

private:
    std::uint64_t state_ = kOffsetBasis;
};

std::string to_hex(std::uint64_t v);

} // namespace eovsim
