/**
 * @file drivers/fixed_point.hpp
 * @brief Scaled 64-bit fixed-point values used for batch slots.
 *
 * A raw value r stands for r / 2^20. Every such value has a finite decimal
 * expansion, which format_fixed() prints exactly.
 */

#ifndef MEMPLAN_DRIVERS_FIXED_POINT_HPP_
#define MEMPLAN_DRIVERS_FIXED_POINT_HPP_

#include <cstdint>
#include <string>
#include <string_view>

#include "memplan/drivers/config.hpp"

namespace memplan::drivers {
    constexpr std::int64_t fixed_one = std::int64_t(1) << fixed_point_bits;

    /** @brief Product of two fixed-point values, rounded half up. */
    constexpr std::int64_t fixed_mul(std::int64_t a, std::int64_t b) {
        const __int128 p = static_cast<__int128>(a) * b + (static_cast<__int128>(1) << (fixed_point_bits - 1));
        return static_cast<std::int64_t>(p >> fixed_point_bits);
    }

    constexpr std::int64_t fixed_from_int(std::int64_t v) {
        return v * fixed_one;
    }

    std::string format_fixed(std::int64_t raw);

    /** @throws InputError on malformed text. */
    std::int64_t parse_fixed(std::string_view text);
}

#endif
