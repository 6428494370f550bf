/**
 * @file addr.hpp
 * @brief Address types for the virtual and physical address spaces.
 *
 * Both spaces are measured in the same unit: one wire for bit-wire programs,
 * one byte for batch programs. Pages are power-of-two sized, so an address
 * splits into a page (or frame) number and an offset.
 */

#ifndef MEMPLAN_ADDR_HPP_
#define MEMPLAN_ADDR_HPP_

#include <cstdint>
#include <limits>

namespace memplan {
    using VirtAddr = std::uint64_t;
    using PhysAddr = std::uint64_t;
    using PageNumber = std::uint64_t;
    using FrameNumber = std::uint64_t;
    using StorageFrame = std::uint64_t;
    using InstructionNumber = std::uint64_t;
    using PageShift = std::uint8_t;
    using WorkerId = std::uint32_t;

    constexpr int address_bits = 56;
    constexpr std::uint64_t address_limit = UINT64_C(1) << address_bits;
    constexpr std::uint64_t address_mask = address_limit - 1;

    /** @brief Next-use value for a page that is never accessed again. */
    constexpr InstructionNumber never = std::numeric_limits<InstructionNumber>::max();

    constexpr std::uint64_t pg_size(PageShift shift) {
        return UINT64_C(1) << shift;
    }

    constexpr std::uint64_t pg_mask(PageShift shift) {
        return pg_size(shift) - 1;
    }

    constexpr std::uint64_t pg_num(std::uint64_t addr, PageShift shift) {
        return addr >> shift;
    }

    constexpr std::uint64_t pg_offset(std::uint64_t addr, PageShift shift) {
        return addr & pg_mask(shift);
    }

    constexpr std::uint64_t pg_addr(std::uint64_t page, PageShift shift) {
        return page << shift;
    }

    /** @brief Replaces the page number of @p addr, keeping its offset. */
    constexpr std::uint64_t pg_set_num(std::uint64_t addr, std::uint64_t page, PageShift shift) {
        return (page << shift) | pg_offset(addr, shift);
    }
}

#endif
